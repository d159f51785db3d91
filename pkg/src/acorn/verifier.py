"""Property construction, verification driving, and abstraction refinement.

A property is verified by asserting its negation on top of the instance
encoding: unsat means every stable state satisfies it.  Satisfying models are
replayed through the concrete transfer and selection semantics; spurious ones
(artifacts of a coarse selection order) trigger refinement, by default
escalating one precision level at a time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from . import formula as F
from .bridge import SolverConfig, default_config, enumerate_models, solve
from .encoder import (
    GRAPH,
    STANDARD,
    DecodedSolution,
    UnsupportedFeatureError,
    VarTable,
    blocking_clause,
    encode,
    encode_path_regex,
)
from .policy import DROPPED, PathPattern
from .srp import FULL, NO_ROUTE, SrpInstance, minimal_set


class PropertyKind(enum.Enum):
    REACH = "reach"
    REACH_ALL = "reach-all"
    ISOLATION = "isolation"
    NO_TRANSIT = "no-transit"
    COMM_EQUALS = "comm-equals"
    PATH_REGEX = "path-regex"


class PropertyError(Exception):
    pass


@dataclass(frozen=True)
class PropertySpec:
    kind: PropertyKind
    node: Optional[int] = None
    value: Optional[int] = None
    pattern: Optional[PathPattern] = None

    def fields_referenced(self) -> frozenset:
        if self.kind is PropertyKind.COMM_EQUALS:
            return frozenset({"comms"})
        return frozenset()

    def validate(self, instance: SrpInstance) -> None:
        if self.kind in (PropertyKind.REACH, PropertyKind.ISOLATION,
                         PropertyKind.COMM_EQUALS, PropertyKind.PATH_REGEX):
            if self.node is None or not 0 <= self.node < instance.topology.n:
                raise PropertyError(f"property references unknown node {self.node}")
        if self.kind is PropertyKind.NO_TRANSIT and not instance.policy.relationships:
            raise PropertyError("no-transit needs relationship annotations")
        if self.kind is PropertyKind.COMM_EQUALS and self.value is None:
            raise PropertyError("comm-equals needs a value")
        if self.kind is PropertyKind.PATH_REGEX and self.pattern is None:
            raise PropertyError("path-regex needs a pattern")

    def describe(self, topo) -> str:
        if self.kind is PropertyKind.REACH:
            return f"reach:{topo.name(self.node)}"
        if self.kind is PropertyKind.REACH_ALL:
            return "reach:*"
        if self.kind is PropertyKind.ISOLATION:
            return f"isolate:{topo.name(self.node)}"
        if self.kind is PropertyKind.NO_TRANSIT:
            return "notransit"
        if self.kind is PropertyKind.COMM_EQUALS:
            return f"commeq:{topo.name(self.node)}={self.value}"
        return f"pathregex:{topo.name(self.node)}"


def reach(node: int) -> PropertySpec:
    return PropertySpec(PropertyKind.REACH, node=node)


def reach_all() -> PropertySpec:
    return PropertySpec(PropertyKind.REACH_ALL)


def isolation(node: int) -> PropertySpec:
    return PropertySpec(PropertyKind.ISOLATION, node=node)


def no_transit() -> PropertySpec:
    return PropertySpec(PropertyKind.NO_TRANSIT)


def comm_equals(node: int, value: int) -> PropertySpec:
    return PropertySpec(PropertyKind.COMM_EQUALS, node=node, value=value)


def path_regex_holds(node: int, pattern: PathPattern) -> PropertySpec:
    return PropertySpec(PropertyKind.PATH_REGEX, node=node, pattern=pattern)


def peer_providers(instance: SrpInstance, u: int) -> list:
    """Neighbors of u that are its peers or providers."""
    rels = instance.policy.relationships
    out = []
    for v in set(instance.topology.in_neighbors(u)) | set(instance.topology.out_neighbors(u)):
        r = rels.get((u, v))
        if r is None:
            r = {"cp": "pc", "pc": "cp", "pp": "pp", "intra": "intra"}.get(
                rels.get((v, u), ""), None
            )
        if r in ("cp", "pp"):  # u is v's customer, or they peer
            out.append(v)
    return sorted(out)


def encode_property(spec: PropertySpec, vt: VarTable) -> F.Term:
    """The property's negation over the encoding's variables."""
    inst = vt.instance
    topo = inst.topology
    spec.validate(inst)
    if spec.kind is PropertyKind.REACH:
        if spec.node == topo.dest:
            return F.FALSE  # the destination trivially reaches itself
        return vt.choice_is_none(spec.node)
    if spec.kind is PropertyKind.REACH_ALL:
        return F.bor(
            *(vt.choice_is_none(u) for u in topo.nodes if u != topo.dest)
        )
    if spec.kind is PropertyKind.ISOLATION:
        if spec.node == topo.dest:
            return F.TRUE
        return F.bnot(vt.choice_is_none(spec.node))
    if spec.kind is PropertyKind.NO_TRANSIT:
        terms = []
        for u in topo.nodes:
            pp = peer_providers(inst, u)
            for v in pp:
                for w in pp:
                    if v == w:
                        continue
                    if (v, u) in vt.re and (u, w) in vt.re:
                        terms.append(F.band(vt.re[(v, u)], vt.re[(u, w)]))
        return F.bor(*terms)
    if spec.kind is PropertyKind.COMM_EQUALS:
        comm = vt.attr[spec.node].get("comms")
        if comm is None:
            raise PropertyError("communities pruned from the schema")
        # guard with route existence: attribute bits of unrouted nodes float
        return F.band(
            vt.hasroute[spec.node],
            F.eq(comm, F.BVLit(spec.value, vt.schema.comm_width)),
        )
    if spec.kind is PropertyKind.PATH_REGEX:
        if vt.backend != GRAPH:
            raise UnsupportedFeatureError(
                "path-regex properties need a graph-capable backend"
            )
        chain = encode_path_regex(spec.pattern, vt, anchor=spec.node)
        return F.band(vt.hasroute[spec.node], F.bnot(chain))
    raise AssertionError(spec.kind)


# ---------------------------------------------------------------------------
# counterexample validation


@dataclass(frozen=True)
class Counterexample:
    tree: dict  # non-dest node -> parent or None
    attrs: dict  # node -> decoded Attribute or NO_ROUTE (abstraction fields)
    violated_property: PropertySpec
    level: "object" = None


@dataclass(frozen=True)
class Validation:
    genuine: bool
    node: Optional[int] = None
    evidence: str = ""


def _concrete_labels(instance: SrpInstance, tree: dict):
    """Recompute full concrete labels along the tree; None when not a tree."""
    topo = instance.topology
    labels = {topo.dest: instance.init_attr}
    for start in topo.nodes:
        if start == topo.dest:
            continue
        seen = []
        u = start
        while u != topo.dest and u not in labels:
            if u in seen:
                return None, u  # cycle
            seen.append(u)
            parent = tree.get(u)
            if parent is None:
                break
            u = parent
        for node in reversed(seen):
            parent = tree.get(node)
            if parent is None:
                labels[node] = NO_ROUTE
                continue
            plabel = labels.get(parent, NO_ROUTE)
            if plabel is NO_ROUTE:
                return None, node  # dangling chain
            attr = instance.transfer((parent, node), plabel)
            if attr is DROPPED:
                return None, node  # chosen route is concretely filtered
            labels[node] = attr
    return labels, None


def _property_violated_concretely(
    instance: SrpInstance, spec: PropertySpec, labels: dict, tree: dict
) -> bool:
    topo = instance.topology
    if spec.kind is PropertyKind.REACH:
        return labels[spec.node] is NO_ROUTE
    if spec.kind is PropertyKind.REACH_ALL:
        return any(
            labels[u] is NO_ROUTE for u in topo.nodes if u != topo.dest
        )
    if spec.kind is PropertyKind.ISOLATION:
        return labels[spec.node] is not NO_ROUTE
    if spec.kind is PropertyKind.NO_TRANSIT:
        for u in topo.nodes:
            pp = set(peer_providers(instance, u))
            v = tree.get(u)
            if v is None or v not in pp:
                continue
            for w in topo.nodes:
                if w != u and tree.get(w) == u and w in pp:
                    return True
        return False
    if spec.kind is PropertyKind.COMM_EQUALS:
        lab = labels[spec.node]
        return lab is not NO_ROUTE and lab.comms == spec.value
    if spec.kind is PropertyKind.PATH_REGEX:
        lab = labels[spec.node]
        if lab is NO_ROUTE:
            return False
        traversal = list(reversed(lab.as_path)) + [spec.node]
        return not spec.pattern.matches(traversal)
    raise AssertionError(spec.kind)


def validate_counterexample(instance: SrpInstance, cex: Counterexample) -> Validation:
    """Replay a model through concrete semantics: stable and violating?"""
    labels, bad = _concrete_labels(instance, cex.tree)
    if labels is None:
        return Validation(False, bad, "chosen edges do not form a tree fed by the destination")
    topo = instance.topology
    for u in topo.nodes:
        if u == topo.dest:
            continue
        cands = []
        for v in topo.in_neighbors(u):
            lv = labels[v]
            if lv is NO_ROUTE:
                continue
            attr = instance.transfer((v, u), lv)
            if attr is not DROPPED:
                cands.append(attr)
        if cex.tree.get(u) is None:
            if cands:
                return Validation(False, u, "node left unrouted despite an available route")
        else:
            best = minimal_set(FULL, cands)
            if labels[u] not in best:
                better = next(iter(best)) if best else None
                return Validation(
                    False, u,
                    f"better concrete route available: {better}",
                )
    if not _property_violated_concretely(instance, cex.violated_property, labels, cex.tree):
        return Validation(False, None, "property holds on the concrete replay")
    return Validation(True)


# ---------------------------------------------------------------------------
# the driver


class VerdictStatus(enum.Enum):
    VERIFIED = "verified"
    VIOLATED = "violated"
    FALSE_POSITIVE = "false-positive"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RefinePolicy:
    mode: str = "escalate"  # escalate | block | none
    max_blocking: int = 32


@dataclass
class Verdict:
    status: VerdictStatus
    counterexample: Optional[Counterexample] = None
    level: object = None  # level that produced the final answer
    refinements: list = field(default_factory=list)  # (level, node, evidence)
    wall_time: float = 0.0
    detail: str = ""

    @property
    def verified(self) -> bool:
        return self.status is VerdictStatus.VERIFIED


def _decode_cex(vt: VarTable, model, spec: PropertySpec) -> Counterexample:
    dec: DecodedSolution = vt.decode(model.values)
    return Counterexample(
        tree=dec.tree, attrs=dec.attrs, violated_property=spec,
        level=vt.instance.level,
    )


def verify(
    instance: SrpInstance,
    spec: PropertySpec,
    cfg: Optional[SolverConfig] = None,
    refine: RefinePolicy = RefinePolicy(),
    backend: str = STANDARD,
) -> Verdict:
    """Check a property over all stable states, refining spurious alarms."""
    spec.validate(instance)
    if cfg is None:
        cfg = default_config(backend)
    current = instance
    trace = []
    wall = 0.0
    blocks = 0
    extra_blocks = []
    while True:
        enc = encode(current, backend=backend, prop=spec)
        enc.system.add(encode_property(spec, enc.vars))
        for term in extra_blocks:
            enc.system.add(term)
        outcome = solve(enc.system, cfg)
        wall += outcome.wall_time
        if outcome.status == "timeout":
            return Verdict(VerdictStatus.UNKNOWN, level=current.level,
                           refinements=trace, wall_time=wall, detail="solver timeout")
        if outcome.status == "error":
            return Verdict(VerdictStatus.UNKNOWN, level=current.level,
                           refinements=trace, wall_time=wall, detail=outcome.detail)
        if outcome.is_unsat:
            return Verdict(VerdictStatus.VERIFIED, level=current.level,
                           refinements=trace, wall_time=wall)
        cex = _decode_cex(enc.vars, outcome.model, spec)
        val = validate_counterexample(current, cex)
        if val.genuine:
            return Verdict(VerdictStatus.VIOLATED, counterexample=cex,
                           level=current.level, refinements=trace, wall_time=wall)
        trace.append((current.level, val.node, val.evidence))
        if refine.mode == "none":
            return Verdict(VerdictStatus.FALSE_POSITIVE, counterexample=cex,
                           level=current.level, refinements=trace, wall_time=wall,
                           detail=val.evidence)
        if refine.mode == "block":
            blocks += 1
            if blocks > refine.max_blocking:
                return Verdict(VerdictStatus.FALSE_POSITIVE, counterexample=cex,
                               level=current.level, refinements=trace,
                               wall_time=wall, detail="blocking budget exhausted")
            extra_blocks.append(blocking_clause(enc.vars, outcome.model.values))
            continue
        nxt = current.level.escalate()
        if nxt is None:
            raise RuntimeError(
                "spurious counterexample at the concrete level: encoder and "
                "concrete semantics disagree"
            )
        current = current.at_level(nxt)
        extra_blocks = []


def decode_labelings(instance: SrpInstance, models, vt: VarTable) -> set:
    """Labelings (projected to the active schema) of a list of models."""
    out = set()
    for m in models:
        dec = vt.decode(m.values)
        out.add(dec.labeling(instance.topology.n))
    return out


def enumerate_stable_models(
    instance: SrpInstance,
    cfg: Optional[SolverConfig] = None,
    backend: str = STANDARD,
    limit: int = 10000,
):
    """All stable routing trees of an instance via repeated solving."""
    if cfg is None:
        cfg = default_config(backend)
    enc = encode(instance, backend=backend)
    models = enumerate_models(enc.system, cfg, limit)
    return models, enc.vars
