"""Compile a routing instance into a solver-agnostic constraint system.

Every topology edge gets a boolean routing-edge variable; satisfying
assignments correspond one-to-one with stable routing trees of the instance
at its abstraction level.  Two backend flavors exist: ``standard`` emits a
rank-based loop-prevention block for plain bit-vector solvers, ``graph``
leaves route availability to reachability atoms for solvers with graph
theory support (which also unlock path-pattern policies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

from . import formula as F
from .formula import ConstraintSystem, Term
from .policy import ActionKind, MatchKind, PathPattern, EdgePolicy
from .srp import (
    Attribute,
    AttributeSchema,
    NO_ROUTE,
    Protocol,
    SrpInstance,
    prune_schema,
)

STANDARD = "standard"
GRAPH = "graph"

_FIELD_ORDER = ("lp", "pathlen", "comms", "med", "rid")
_ATTR_VAR = {"lp": "lp", "pathlen": "pathlen", "comms": "comm", "med": "med", "rid": "rid"}


class UnsupportedFeatureError(Exception):
    """The instance needs graph-theory support the backend lacks."""


class EncodingError(Exception):
    pass


@dataclass
class VarTable:
    """Declared variables plus the metadata needed to decode models."""

    instance: SrpInstance
    schema: AttributeSchema  # pruned active schema
    backend: str
    widths: dict = dc_field(default_factory=dict)  # field -> solver bit width
    nid: dict = dc_field(default_factory=dict)  # u -> {v: neighbor id}
    none_id: dict = dc_field(default_factory=dict)
    nchoice_width: dict = dc_field(default_factory=dict)
    re: dict = dc_field(default_factory=dict)  # (v,u) -> BoolVar
    nchoice: dict = dc_field(default_factory=dict)
    hasroute: dict = dc_field(default_factory=dict)
    rank: dict = dc_field(default_factory=dict)
    attr: dict = dc_field(default_factory=dict)  # u -> {field: Term}
    dropped: dict = dc_field(default_factory=dict)  # (v,u) -> Term

    def nid_lit(self, u: int, v: int) -> Term:
        return F.BVLit(self.nid[u][v], self.nchoice_width[u])

    def none_lit(self, u: int) -> Term:
        return F.BVLit(self.none_id[u], self.nchoice_width[u])

    def choice_is(self, u: int, v: int) -> Term:
        return F.eq(self.nchoice[u], self.nid_lit(u, v))

    def choice_is_none(self, u: int) -> Term:
        return F.eq(self.nchoice[u], self.none_lit(u))

    def decode(self, model: dict) -> "DecodedSolution":
        topo = self.instance.topology
        tree = {}
        for u in topo.nodes:
            if u == topo.dest:
                continue
            val = int(model.get(self.nchoice[u].name, self.none_id[u]))
            chosen = None
            for v, i in self.nid[u].items():
                if i == val:
                    chosen = v
                    break
            tree[u] = chosen
        hasroute = {
            u: bool(model.get(self.hasroute[u].name, False)) for u in topo.nodes
        }
        attrs = {}
        for u in topo.nodes:
            if not hasroute[u]:
                attrs[u] = NO_ROUTE
                continue
            kw = {}
            for f in self.schema.active_fields:
                term = self.attr[u][f]
                if isinstance(term, F.BVLit):
                    kw[f] = term.value
                else:
                    kw[f] = int(model.get(term.name, 0))
            attrs[u] = Attribute(**kw)
        return DecodedSolution(tree=tree, hasroute=hasroute, attrs=attrs)


@dataclass(frozen=True)
class DecodedSolution:
    tree: dict  # non-dest node -> chosen in-neighbor or None
    hasroute: dict
    attrs: dict  # node -> Attribute (active fields) or NO_ROUTE

    def labeling(self, n: int) -> tuple:
        return tuple(self.attrs[u] for u in range(n))


@dataclass
class Encoding:
    system: ConstraintSystem
    vars: VarTable


def _nchoice_width(deg_in: int) -> int:
    return max(1, deg_in.bit_length())


def _rank_width(n: int) -> int:
    return max(1, math.ceil(math.log2(n)) if n > 1 else 0) + 1


def _bits_for(value: int) -> int:
    return max(1, value.bit_length())


def _solver_widths(instance: SrpInstance, schema: AttributeSchema) -> dict:
    """Minimal widths covering every value a field can take in this instance.

    Sound because lp is only ever a policy literal or the 100 default, med is
    never rewritten, rid always holds a node id, and path length is bounded
    by the hop count (times the largest edge weight for cost protocols).
    """
    from .policy import ActionKind as AK

    topo = instance.topology
    init = instance.init_attr
    lp_max = max(100, init.lp or 0)
    for ep in instance.policy.edge_policies.values():
        for rule in ep.rules:
            for a in rule.actions:
                if a.kind is AK.SET_LP:
                    lp_max = max(lp_max, a.value)
    step = 1
    if instance.level.protocol is Protocol.OSPF:
        step = max([1] + list(instance.policy.edge_weights.values()))
    path_max = (init.pathlen or 0) + topo.n * step
    return {
        "lp": _bits_for(lp_max),
        "pathlen": _bits_for(path_max),
        "comms": schema.comm_width,
        "med": _bits_for(init.med or 0),
        "rid": _bits_for(max(topo.n - 1, init.rid or 0)),
    }


# ---------------------------------------------------------------------------
# transfer compilation


def _sender_terms(vt: VarTable, v: int, simplify: bool) -> dict:
    """Attribute terms of the sending node; destination folds to literals."""
    inst = vt.instance
    if simplify and v == inst.topology.dest:
        out = {}
        for f in vt.schema.active_fields:
            out[f] = F.BVLit(inst.init_attr.require(f), vt.widths[f])
        return out
    return dict(vt.attr[v])


def _match_term(vt: VarTable, match, sender: int, sender_terms: dict) -> Term:
    if match.kind is MatchKind.ALWAYS:
        return F.TRUE
    if match.kind is MatchKind.COMM_EQUALS:
        return F.eq(sender_terms["comms"], F.BVLit(match.value, vt.schema.comm_width))
    if match.kind is MatchKind.COMM_HAS:
        return F.testbit(sender_terms["comms"], vt.schema.tag_bit(match.value))
    if match.kind is MatchKind.PATH_CONTAINS:
        if vt.backend != GRAPH:
            raise UnsupportedFeatureError(
                "path patterns need a graph-capable backend"
            )
        return encode_path_regex(match.value, vt, anchor=sender)
    raise AssertionError(match.kind)


def _drop_guard(vt: VarTable, edge, ep: EdgePolicy, simplify: bool) -> Term:
    """Disjunction of drop-rule guards, evaluated over the sender's fields."""
    if edge in vt.instance.failed_edges:
        return F.TRUE
    drop_idx = [i for i, r in enumerate(ep.rules) if r.is_drop]
    if not drop_idx:
        return F.FALSE
    sender_terms = _sender_terms(vt, edge[0], simplify)
    guard = F.FALSE
    prefix = F.TRUE
    for rule in ep.rules[: max(drop_idx) + 1]:
        m = _match_term(vt, rule.match, edge[0], sender_terms)
        if rule.is_drop:
            guard = F.bor(guard, F.band(prefix, m))
        prefix = F.band(prefix, F.bnot(m))
    return guard


def _comm_after_actions(vt: VarTable, base: Term, actions) -> Term:
    w = vt.schema.comm_width
    cur = base
    for a in actions:
        if a.kind is ActionKind.SET_COMM:
            cur = F.BVLit(a.value, w)
        elif a.kind is ActionKind.ADD_TAG:
            cur = F.orlit(cur, 1 << vt.schema.tag_bit(a.value))
        elif a.kind is ActionKind.INCR_COMM:
            maxv = (1 << w) - 1
            if a.value >= maxv:
                cur = F.BVLit(maxv, w)
            else:
                cur = F.ite(
                    F.uge(cur, F.BVLit(maxv - a.value + 1, w)),
                    F.BVLit(maxv, w),
                    F.add(cur, F.BVLit(a.value, w)),
                )
    return cur


def _transfer_terms(vt: VarTable, edge, ep: EdgePolicy, simplify: bool) -> dict:
    """Per active field, the transferred value as a guarded update cascade."""
    inst = vt.instance
    v, _u = edge
    sender = _sender_terms(vt, v, simplify)
    fields = vt.schema.active_fields
    tails = {}
    if "lp" in fields:
        tails["lp"] = F.BVLit(100, vt.widths["lp"])
    if "comms" in fields:
        tails["comms"] = sender["comms"]
    if "med" in fields:
        tails["med"] = sender["med"]
    if "rid" in fields:
        tails["rid"] = F.BVLit(v, vt.widths["rid"])
    if "pathlen" in fields:
        step = (
            inst.policy.edge_weight(edge)
            if inst.level.protocol is Protocol.OSPF
            else 1
        )
        tails["pathlen"] = F.add(sender["pathlen"], F.BVLit(step, vt.widths["pathlen"]))

    if not tails:
        return {}
    out = dict(tails)
    # fold right so the first matching rule ends up outermost; rules beyond
    # the last writer of an active field fold to the tail and are skipped,
    # which keeps their match fields out of the pruned schema
    live = False
    for rule in reversed(ep.rules):
        if rule.is_drop:
            continue  # excluded by the route-filtering guard
        writes = rule.fields_written() & fields
        if not writes and not live:
            continue
        live = True
        m = _match_term(vt, rule.match, v, sender)
        if "lp" in fields:
            lp_val = tails["lp"]
            for a in rule.actions:
                if a.kind is ActionKind.SET_LP:
                    lp_val = F.BVLit(a.value, vt.widths["lp"])
            out["lp"] = F.ite(m, lp_val, out["lp"])
        if "comms" in fields:
            out["comms"] = F.ite(
                m, _comm_after_actions(vt, tails["comms"], rule.actions), out["comms"]
            )
        for f in ("pathlen", "med", "rid"):
            if f in fields:
                out[f] = F.ite(m, tails[f], out[f])
    return out


# ---------------------------------------------------------------------------
# selection chains (best-route constraints for levels above star)


def _chain_steps(vt: VarTable, u: int, sys: ConstraintSystem, simplify: bool):
    """Candidate terms for each selection step, per in-edge of u."""
    inst = vt.instance
    steps = []
    for fname, prefer_high in inst.level.steps():
        cands = {}
        for v in inst.topology.in_neighbors(u):
            edge = (v, u)
            if fname == "lp":
                expr = _transfer_terms(vt, edge, inst.policy.edge_policy(edge), simplify)["lp"]
                if not isinstance(expr, (F.BVLit, F.BVVar)):
                    var = sys.declare_bv(f"translp_{v}_{u}", vt.widths["lp"])
                    sys.add(F.eq(var, expr))
                    expr = var
            elif fname == "pathlen" and inst.level.protocol is Protocol.OSPF:
                w = inst.policy.edge_weight(edge)
                raw = F.add(_sender_terms(vt, v, simplify)["pathlen"], F.BVLit(w, vt.widths["pathlen"]))
                if isinstance(raw, F.BVLit):
                    expr = raw
                else:
                    var = sys.declare_bv(f"transcost_{v}_{u}", vt.widths["pathlen"])
                    sys.add(F.eq(var, raw))
                    expr = var
            elif fname == "rid":
                expr = F.BVLit(v, vt.widths["rid"])
            else:
                expr = _sender_terms(vt, v, simplify)[fname]
            cands[v] = expr
        steps.append((fname, prefer_high, cands))
    return steps


_BEST_VAR = {
    ("lp", True): "maxlp",
    ("pathlen", False): "minpath",
    ("med", False): "minmed",
    ("rid", False): "minrid",
}


def _encode_selection(vt: VarTable, sys: ConstraintSystem, simplify: bool) -> None:
    """Best-route constraints, truncated at the level's compared fields."""
    inst = vt.instance
    if not inst.level.steps():
        return  # coarsest level: any available route is stable
    topo = inst.topology
    for u in topo.nodes:
        if u == topo.dest:
            continue
        in_edges = [(v, u) for v in topo.in_neighbors(u)]
        if not in_edges:
            continue
        valid = {}
        for v, _ in in_edges:
            dropped = vt.dropped[(v, u)]
            expr = F.band(vt.hasroute[v], F.bnot(dropped))
            if simplify and isinstance(expr, F.BoolLit):
                valid[v] = expr
                continue
            var = sys.declare_bool(f"nvalid_{v}_{u}")
            sys.add(F.iff(var, expr))
            valid[v] = var

        steps = _chain_steps(vt, u, sys, simplify)
        guards = {v: valid[v] for v, _ in in_edges}
        chosen_conds = {v: [] for v, _ in in_edges}
        picked = F.bnot(vt.choice_is_none(u))
        for fname, prefer_high, cands in steps:
            width = vt.widths[fname]
            best = sys.declare_bv(f"{_BEST_VAR[(fname, prefer_high)]}_{u}", width)
            witnesses = []
            for v, _ in in_edges:
                cand = cands[v]
                bound = F.ule(cand, best) if prefer_high else F.ule(best, cand)
                sys.add(F.implies(guards[v], bound))
                tie = F.eq(cand, best)
                witnesses.append(F.band(guards[v], tie))
                guards[v] = F.band(guards[v], tie)
                chosen_conds[v].append(tie)
            sys.add(F.implies(picked, F.bor(*witnesses)))
        for v, _ in in_edges:
            if chosen_conds[v]:
                sys.add(F.implies(vt.choice_is(u, v), F.band(*chosen_conds[v])))


# ---------------------------------------------------------------------------
# main encoding


def encode(
    instance: SrpInstance,
    backend: str = STANDARD,
    prop=None,
    simplify: bool = True,
) -> Encoding:
    """Build the constraint system for one instance at its abstraction level.

    ``prop`` (a PropertySpec or None) only affects schema pruning; property
    negations themselves are asserted by the caller.
    """
    if backend not in (STANDARD, GRAPH):
        raise EncodingError(f"unknown backend {backend!r}")
    if backend == STANDARD and instance.policy.uses_path_match():
        raise UnsupportedFeatureError("path patterns need a graph-capable backend")

    topo = instance.topology
    schema = prune_schema(instance.policy, prop, instance.level, instance.schema)
    sys = ConstraintSystem()
    vt = VarTable(instance=instance, schema=schema, backend=backend,
                  widths=_solver_widths(instance, schema))

    for u in topo.nodes:
        vt.attr[u] = {}
        for f in _FIELD_ORDER:
            if f in schema.active_fields:
                vt.attr[u][f] = sys.declare_bv(
                    f"{_ATTR_VAR[f]}_{u}", vt.widths[f]
                )
        vt.hasroute[u] = sys.declare_bool(f"hasroute_{u}")
        if u != topo.dest:
            ins = topo.in_neighbors(u)
            vt.nid[u] = {v: i for i, v in enumerate(ins)}
            vt.none_id[u] = len(ins)
            vt.nchoice_width[u] = _nchoice_width(len(ins))
            vt.nchoice[u] = sys.declare_bv(f"nchoice_{u}", vt.nchoice_width[u])
    for v, u in topo.edges:
        vt.re[(v, u)] = sys.declare_bool(f"re_{v}_{u}")
    if backend == GRAPH:
        sys.graph_nodes = topo.n
        sys.graph_edges = {e: vt.re[e].name for e in topo.edges}

    # route filtering: routeDropped defined by the drop-rule guards, with
    # constant definitions inlined away unless simplification is disabled
    for e in topo.edges:
        guard = _drop_guard(vt, e, instance.policy.edge_policy(e), simplify)
        if simplify and isinstance(guard, F.BoolLit):
            vt.dropped[e] = guard
        else:
            var = sys.declare_bool(f"routedropped_{e[0]}_{e[1]}")
            sys.add(F.iff(var, guard))
            vt.dropped[e] = var

    # (2) choose a neighbor or none; (6) none iff no valid neighbor
    for u in topo.nodes:
        if u == topo.dest:
            continue
        options = [vt.choice_is(u, v) for v in topo.in_neighbors(u)]
        sys.add(F.bor(*options, vt.choice_is_none(u)))
        invalid = [
            F.bor(F.bnot(vt.hasroute[v]), vt.dropped[(v, u)])
            for v in topo.in_neighbors(u)
        ]
        sys.add(F.iff(vt.choice_is_none(u), F.band(*invalid)))

    for v, u in topo.edges:
        re_vu = vt.re[(v, u)]
        if u == topo.dest:
            sys.add(F.bnot(re_vu))  # (4)
            continue
        sys.add(F.iff(vt.choice_is(u, v), re_vu))  # (3)
        sys.add(F.implies(vt.choice_is(u, v), vt.hasroute[v]))  # (5)
        dropped = vt.dropped[(v, u)]
        if isinstance(dropped, F.BoolLit) and dropped.value:
            sys.add(F.bnot(re_vu))  # (8) with a constant-true drop guard
            continue
        sys.add(F.implies(re_vu, F.bnot(dropped)))  # (8)
        transferred = _transfer_terms(vt, (v, u), instance.policy.edge_policy((v, u)), simplify)
        eqs = [
            F.eq(vt.attr[u][f], transferred[f])
            for f in _FIELD_ORDER
            if f in schema.active_fields
        ]
        if eqs:
            sys.add(F.implies(re_vu, F.band(*eqs)))  # (7)

    # (9) the destination announces the initial attribute
    init_eqs = [
        F.eq(
            vt.attr[topo.dest][f],
            F.BVLit(instance.init_attr.require(f), vt.widths[f]),
        )
        for f in _FIELD_ORDER
        if f in schema.active_fields
    ]
    if init_eqs:
        sys.add(F.band(*init_eqs))

    _encode_selection(vt, sys, simplify)
    _encode_has_route(vt, sys, simplify)
    return Encoding(system=sys, vars=vt)


def encode_abstract(instance: SrpInstance, backend: str = STANDARD,
                    prop=None, simplify: bool = True) -> Encoding:
    """Encoding at a nondeterministic-choice level (not the concrete order)."""
    if instance.level.is_concrete:
        raise EncodingError("instance is at the concrete level; use encode_concrete")
    return encode(instance, backend=backend, prop=prop, simplify=simplify)


def encode_concrete(instance: SrpInstance, backend: str = STANDARD,
                    prop=None, simplify: bool = True) -> Encoding:
    """Encoding with the full best-route selection chain enforced."""
    if not instance.level.is_concrete:
        raise EncodingError("instance is not at the concrete level")
    return encode(instance, backend=backend, prop=prop, simplify=simplify)


def _encode_has_route(vt: VarTable, sys: ConstraintSystem, simplify: bool) -> None:
    """Route-availability block: reachability atoms or the rank encoding."""
    topo = vt.instance.topology
    d = topo.dest
    if vt.backend == GRAPH:
        for u in topo.nodes:
            atom = F.TRUE if u == d else F.Reaches(d, u)
            sys.add(F.iff(vt.hasroute[u], atom))  # (10)
        return
    sys.add(vt.hasroute[d])  # (11)
    for u in topo.nodes:
        if u == d:
            continue
        arrival = [
            F.band(vt.hasroute[v], vt.re[(v, u)]) for v in topo.in_neighbors(u)
        ]
        sys.add(F.iff(vt.hasroute[u], F.bor(*arrival)))  # (12)
    if topo.n == 1:
        rank_d = sys.declare_bv(f"rank_{d}", _rank_width(1))
        sys.add(F.eq(rank_d, F.BVLit(0, _rank_width(1))))  # (13)
        return
    w = _rank_width(topo.n)
    for u in topo.nodes:
        vt.rank[u] = sys.declare_bv(f"rank_{u}", w)
    sys.add(F.eq(vt.rank[d], F.BVLit(0, w)))  # (13)
    for u in topo.nodes:
        sys.add(F.ule(vt.rank[u], F.BVLit(topo.n, w)))
    for v, u in topo.edges:
        if u == d and simplify:
            continue  # vacuous: (4) already pins the edge variable false
        sys.add(
            F.implies(
                vt.re[(v, u)], F.eq(vt.rank[u], F.add(vt.rank[v], F.BVLit(1, w)))
            )
        )  # (14)


def encode_path_regex(pattern: PathPattern, vt: VarTable, anchor=None) -> Term:
    """Ordered-containment path pattern as edge literals plus reach atoms.

    Node-only patterns chain from the destination; an anchor node (the
    announcement's holder) closes the chain.
    """
    if vt.backend != GRAPH:
        raise UnsupportedFeatureError("path patterns need a graph-capable backend")
    topo = vt.instance.topology
    conj = []
    prev = None
    if pattern.edge is not None:
        if pattern.edge not in vt.re:
            return F.FALSE  # pattern edge absent from the topology
        conj.append(vt.re[pattern.edge])
        prev = pattern.edge[1]
    for n in pattern.nodes:
        src = topo.dest if prev is None else prev
        conj.append(F.TRUE if src == n else F.Reaches(src, n))
        prev = n
    if anchor is not None and prev is not None and prev != anchor:
        conj.append(F.Reaches(prev, anchor))
    return F.band(*conj)


def blocking_clause(vt: VarTable, model: dict) -> Term:
    """Forbid the routing tree of ``model`` (neighbor choices only)."""
    topo = vt.instance.topology
    eqs = []
    for u in topo.nodes:
        if u == topo.dest:
            continue
        val = int(model.get(vt.nchoice[u].name, vt.none_id[u]))
        eqs.append(F.eq(vt.nchoice[u], F.BVLit(val, vt.nchoice_width[u])))
    return F.bnot(F.band(*eqs))
