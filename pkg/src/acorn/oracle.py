"""Brute-force ground truth: enumerate stable labelings of small instances.

Enumeration walks every choice function (each non-destination node picks an
in-neighbor or nothing), keeps the ones whose chosen edges form a tree fed
from the destination, derives attribute labels by propagation, and retains
those satisfying the local stability condition at the requested precision
level.  Also hosts the seeded random-instance corpus used by the soundness
and encoding-faithfulness suites.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .policy import (
    Action,
    ActionKind,
    DROPPED,
    EdgePolicy,
    Match,
    MatchActionRule,
    MatchKind,
    PolicyIR,
)
from .srp import (
    AbstractionLevel,
    Attribute,
    AttributeSchema,
    CommMode,
    FULL,
    Level,
    NO_ROUTE,
    SrpInstance,
    STAR,
    Topology,
    bgp_level,
    minimal_set,
)

BGP_LEVELS = tuple(bgp_level(lv) for lv in
                   (Level.STAR, Level.LP, Level.LP_PATHLEN, Level.LP_PATHLEN_MED, Level.FULL))


class OracleBoundError(Exception):
    pass


@dataclass(frozen=True)
class OracleSolution:
    """One stable state: the chosen tree and the per-node labels."""

    choices: tuple  # (node, parent-or-None) sorted by node
    labeling: tuple  # per node: Attribute or NO_ROUTE

    def tree(self) -> dict:
        return dict(self.choices)


def _derive_labels(instance: SrpInstance, choice: dict):
    """Labels from propagating the root announcement down the chosen edges.

    Returns None when the choice function is not realizable (dangling or
    cyclic chains, or a chosen edge that concretely drops).
    """
    topo = instance.topology
    labels = {topo.dest: instance.init_attr}
    state = {topo.dest: 1}  # 1 = resolved
    for start in topo.nodes:
        if start in state:
            continue
        path = []
        u = start
        while u not in state:
            state[u] = 0
            path.append(u)
            parent = choice[u]
            if parent is None:
                labels[u] = NO_ROUTE
                state[u] = 1
                break
            u = parent
        else:
            if state[u] == 0:
                return None  # cycle among chosen edges
        # resolve the recorded path backwards
        for node in reversed(path):
            if state[node] == 1:
                continue
            parent = choice[node]
            parent_label = labels[parent]
            if parent_label is NO_ROUTE:
                return None  # chose a neighbor that has no route
            attr = instance.transfer((parent, node), parent_label)
            if attr is DROPPED:
                return None  # chose a concretely filtered route
            labels[node] = attr
            state[node] = 1
    return labels


def _candidates(instance: SrpInstance, labels: dict, u: int) -> list:
    out = []
    for v in instance.topology.in_neighbors(u):
        lv = labels[v]
        if lv is NO_ROUTE:
            continue
        attr = instance.transfer((v, u), lv)
        if attr is not DROPPED:
            out.append(attr)
    return out


def enumerate_solutions(
    instance: SrpInstance,
    level: AbstractionLevel,
    max_nodes: int = 10,
) -> list:
    return enumerate_solutions_at(instance, (level,), max_nodes)[level]


def enumerate_solutions_at(
    instance: SrpInstance,
    levels,
    max_nodes: int = 10,
) -> dict:
    """Enumerate once, check stability at each level; dict level -> solutions."""
    topo = instance.topology
    if topo.n > max_nodes:
        raise OracleBoundError(f"{topo.n} nodes exceeds the bound {max_nodes}")
    non_dest = [u for u in topo.nodes if u != topo.dest]
    options = [topo.in_neighbors(u) + [None] for u in non_dest]
    out = {level: [] for level in levels}
    for picks in itertools.product(*options):
        choice = dict(zip(non_dest, picks))
        labels = _derive_labels(instance, choice)
        if labels is None:
            continue
        cand_cache = {u: _candidates(instance, labels, u) for u in non_dest}
        sol = None
        for level in levels:
            ok = True
            for u in non_dest:
                cands = cand_cache[u]
                if choice[u] is None:
                    if cands:
                        ok = False
                        break
                else:
                    if labels[u] not in minimal_set(level, cands):
                        ok = False
                        break
            if ok:
                if sol is None:
                    sol = OracleSolution(
                        choices=tuple(sorted(choice.items())),
                        labeling=tuple(labels[u] for u in topo.nodes),
                    )
                out[level].append(sol)
    return out


def labeling_set(solutions, fields=None) -> set:
    """Labelings as a set, optionally projected onto a field subset."""
    out = set()
    for sol in solutions:
        if fields is None:
            out.add(sol.labeling)
        else:
            out.add(
                tuple(
                    a if a is NO_ROUTE else a.project(fields)
                    for a in sol.labeling
                )
            )
    return out


@dataclass
class OverapproxReport:
    instance_name: str
    checked_levels: list = field(default_factory=list)
    violations: list = field(default_factory=list)  # (level, labeling)
    concrete_solutions: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def check_overapprox(instance: SrpInstance, levels=BGP_LEVELS, max_nodes: int = 10) -> OverapproxReport:
    """Check that concrete stable states survive at every coarser level."""
    by_level = enumerate_solutions_at(instance, levels, max_nodes)
    concrete = labeling_set(by_level[FULL])
    report = OverapproxReport(
        instance_name=instance.name,
        checked_levels=list(levels),
        concrete_solutions=len(concrete),
    )
    for level in levels:
        have = labeling_set(by_level[level])
        for lab in concrete:
            if lab not in have:
                report.violations.append((level, lab))
    return report


def soundness_escalation_check(instance: SrpInstance, levels=BGP_LEVELS,
                               max_nodes: int = 10) -> list:
    """Verified-at-coarse implies verified-at-concrete, by enumeration.

    For every node's reachability property: if no stable labeling at a level
    violates it, no concrete stable labeling may violate it either.  Returns
    the list of (level, node) counterexamples (empty when sound).
    """
    by_level = enumerate_solutions_at(instance, levels, max_nodes)
    topo = instance.topology
    bad = []
    for u in topo.nodes:
        if u == topo.dest:
            continue
        violated = {
            level: any(sol.labeling[u] is NO_ROUTE for sol in sols)
            for level, sols in by_level.items()
        }
        for level in levels:
            if not violated[level] and violated[FULL]:
                bad.append((level, u))
    return bad


# ---------------------------------------------------------------------------
# random instance corpus


def random_instance(seed: int, max_nodes: int = 8, allow_failures: bool = True) -> SrpInstance:
    """Seeded random instance: sparse digraph, small rule templates."""
    rng = random.Random(seed)
    n = rng.randint(2, max_nodes)
    dest = rng.randrange(n)
    edges = []
    p = min(0.9, 2.4 / max(n - 1, 1))
    for v in range(n):
        for u in range(n):
            if v != u and rng.random() < p:
                edges.append((v, u))
    if not edges and n > 1:
        others = [u for u in range(n) if u != dest]
        edges.append((dest, rng.choice(others)))
    topo = Topology(n=n, edges=tuple(edges), dest=dest)

    if rng.random() < 0.5:
        tags = ("t0",) if rng.random() < 0.6 else ("t0", "t1")
        schema = AttributeSchema(
            comm_mode=CommMode.BITMASK, comm_width=len(tags), tags=tags
        )
    else:
        schema = AttributeSchema(comm_mode=CommMode.COUNTER, comm_width=2)

    def rule_templates():
        if schema.comm_mode is CommMode.BITMASK:
            tag = rng.choice(schema.tags)
            return [
                (MatchActionRule(Match(MatchKind.ALWAYS),
                                 (Action(ActionKind.ADD_TAG, tag),)),),
                (MatchActionRule(Match(MatchKind.COMM_HAS, tag),
                                 (Action(ActionKind.SET_LP, rng.choice((150, 200))),)),),
                (MatchActionRule(Match(MatchKind.COMM_HAS, tag),
                                 (Action(ActionKind.DROP),)),),
                (MatchActionRule(Match(MatchKind.COMM_EQUALS, 0),
                                 (Action(ActionKind.DROP),)),
                 MatchActionRule(Match(MatchKind.ALWAYS),
                                 (Action(ActionKind.ADD_TAG, tag),))),
            ]
        top = (1 << schema.comm_width) - 1
        return [
            (MatchActionRule(Match(MatchKind.ALWAYS),
                             (Action(ActionKind.INCR_COMM, 1),)),),
            (MatchActionRule(Match(MatchKind.COMM_EQUALS, top),
                             (Action(ActionKind.DROP),)),),
            (MatchActionRule(Match(MatchKind.COMM_EQUALS, rng.randrange(top + 1)),
                             (Action(ActionKind.SET_LP, 150),)),
             MatchActionRule(Match(MatchKind.ALWAYS),
                             (Action(ActionKind.INCR_COMM, 1),))),
        ]

    edge_policies = {}
    for e in edges:
        if rng.random() < 0.45:
            rules = rng.choice(rule_templates())
            edge_policies[e] = EdgePolicy(e, tuple(rules))

    failed = frozenset()
    if allow_failures and edges and rng.random() < 0.2:
        failed = frozenset({rng.choice(edges)})

    policy = PolicyIR(schema=schema, edge_policies=edge_policies)
    init = Attribute(lp=100, pathlen=0, comms=0, med=0, rid=dest, as_path=())
    return SrpInstance(
        topology=topo,
        schema=schema,
        init_attr=init,
        policy=policy,
        level=STAR,
        failed_edges=failed,
        name=f"rand-{seed}",
    )
