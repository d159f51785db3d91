"""Benchmark generators: FatTree data-center policies and annotated WANs.

All generators are deterministic: the same parameters produce byte-identical
AIR text.  FatTree wiring is the standard k-ary layout (k pods of k/2 ToR and
k/2 aggregation routers, k^2/4 cores, each aggregation router striped to k/2
cores), 5k^2/4 nodes total.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .air import print_air
from .policy import (
    Action,
    ActionKind,
    EdgePolicy,
    Match,
    MatchActionRule,
    MatchKind,
    PathPattern,
    PolicyIR,
)
from .srp import (
    Attribute,
    AttributeSchema,
    CommMode,
    STAR,
    SrpInstance,
    Topology,
)

SHORTEST_PATH = "shortest-path"
VALLEY_FREE = "valley-free"
VALLEY_FREE_BUGGY = "valley-free-buggy"
ISOLATION_REGEX = "isolation-regex"

_POLICIES = (SHORTEST_PATH, VALLEY_FREE, VALLEY_FREE_BUGGY, ISOLATION_REGEX)


class GenError(Exception):
    pass


@dataclass(frozen=True)
class FatTreeParams:
    k: int
    policy: str = SHORTEST_PATH
    aggr_drop: bool = True  # drop the re-ascent guard to plant a valley hole

    def __post_init__(self):
        if self.k < 4 or self.k % 2:
            raise GenError("k must be even and >= 4")
        if self.policy not in _POLICIES:
            raise GenError(f"unknown policy {self.policy!r}")


@dataclass(frozen=True)
class FatTreeLayout:
    k: int
    names: tuple
    edges: tuple
    tors: tuple  # (pod, i) -> node
    aggrs: tuple
    cores: tuple
    ext: int = -1  # external router, isolation policy only

    def tor(self, pod: int, i: int) -> int:
        return self.tors[pod * (self.k // 2) + i]

    def aggr(self, pod: int, j: int) -> int:
        return self.aggrs[pod * (self.k // 2) + j]


def fattree_layout(k: int, with_ext: bool = False) -> FatTreeLayout:
    half = k // 2
    names = []
    tors, aggrs = [], []
    for pod in range(k):
        for i in range(half):
            tors.append(len(names))
            names.append(f"tor_{pod}_{i}")
        for j in range(half):
            aggrs.append(len(names))
            names.append(f"aggr_{pod}_{j}")
    cores = []
    for c in range(half * half):
        cores.append(len(names))
        names.append(f"core_{c}")
    ext = -1
    if with_ext:
        ext = len(names)
        names.append("ext")

    edges = []

    def link(a, b):
        edges.append((a, b))
        edges.append((b, a))

    for pod in range(k):
        for i in range(half):
            for j in range(half):
                link(tors[pod * half + i], aggrs[pod * half + j])
    for pod in range(k):
        for j in range(half):
            for c in range(j * half, (j + 1) * half):
                link(aggrs[pod * half + j], cores[c])
    if with_ext:
        for c in cores:
            link(c, ext)
    return FatTreeLayout(
        k=k, names=tuple(names), edges=tuple(edges),
        tors=tuple(tors), aggrs=tuple(aggrs), cores=tuple(cores), ext=ext,
    )


def _drop_when_at_least(value: int, width: int) -> tuple:
    return tuple(
        MatchActionRule(Match(MatchKind.COMM_EQUALS, c), (Action(ActionKind.DROP),))
        for c in range(value, 1 << width)
    )


def _incr() -> MatchActionRule:
    return MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.INCR_COMM, 1),))


def fattree_instance(params: FatTreeParams) -> SrpInstance:
    with_ext = params.policy == ISOLATION_REGEX
    layout = fattree_layout(params.k, with_ext=with_ext)
    half = params.k // 2
    dest = layout.tor(0, 0)
    topo = Topology(
        n=len(layout.names), edges=layout.edges, dest=dest, names=layout.names
    )

    if params.policy == SHORTEST_PATH:
        schema = AttributeSchema(comm_mode=CommMode.BITMASK, comm_width=1, tags=())
        policy = PolicyIR(schema=schema)
    else:
        schema = AttributeSchema(comm_mode=CommMode.COUNTER, comm_width=2)
        width = schema.comm_width
        tor_set = set(layout.tors)
        core_set = set(layout.cores)
        aggr_set = set(layout.aggrs)
        last_pod_tors = {layout.tor(params.k - 1, i) for i in range(half)}
        edge_policies = {}
        for v, u in layout.edges:
            rules: tuple = ()
            if v in aggr_set:
                # aggregation-router export: count the traversal
                rules = (_incr(),)
                if u in core_set:
                    # a route re-ascending to a core has already crossed an
                    # aggregation router; the core's import refuses it
                    rules = _drop_when_at_least(1, width) + rules
                if params.policy == VALLEY_FREE_BUGGY and u in last_pod_tors:
                    # the planted bug: last-pod ToRs only accept community 0
                    rules = _drop_when_at_least(1, width) + rules
            elif v in tor_set and u in aggr_set and params.aggr_drop:
                # re-ascent guard: routes at a non-destination ToR carry c >= 1
                rules = _drop_when_at_least(1, width)
            elif v in core_set and u == layout.ext:
                rules = tuple(
                    MatchActionRule(
                        Match(
                            MatchKind.PATH_CONTAINS,
                            PathPattern(nodes=(layout.tor(0, i),)),
                        ),
                        (Action(ActionKind.DROP),),
                    )
                    for i in range(half)
                )
            if rules:
                edge_policies[(v, u)] = EdgePolicy((v, u), rules)
        policy = PolicyIR(schema=schema, edge_policies=edge_policies)

    init = Attribute(lp=100, pathlen=0, comms=0, med=0, rid=dest, as_path=())
    name = f"fattree-k{params.k}-{params.policy}"
    if not params.aggr_drop:
        name += "-nodrop"
    return SrpInstance(
        topology=topo, schema=schema, init_attr=init, policy=policy,
        level=STAR, name=name,
    )


def gen_fattree(params: FatTreeParams) -> str:
    inst = fattree_instance(params)
    return print_air(inst.topology, inst.policy, inst.init_attr)


# ---------------------------------------------------------------------------
# Gao-Rexford WANs


_LP_BY_IMPORT = {"cp": 200, "pc": 100, "pp": 150}  # keyed by sender's relation


def gao_rexford_policy(topo: Topology, rels: dict) -> PolicyIR:
    """Instantiate the customer/peer/provider export and preference rules.

    ``rels[(u, v)]`` describes u relative to v (cp: u is v's customer).
    Routes are tagged with their import relationship; peer- or
    provider-learned routes never leave toward peers or providers, and
    customer routes are preferred over peer routes over provider routes.
    """
    schema = AttributeSchema(comm_mode=CommMode.BITMASK, comm_width=1, tags=("ppo",))
    flip = {"cp": "pc", "pc": "cp", "pp": "pp", "intra": "intra"}
    full = dict(rels)
    for (u, v), r in rels.items():
        full.setdefault((v, u), flip[r])
    edge_policies = {}
    for u, v in topo.edges:
        r = full.get((u, v))
        if r is None:
            raise GenError(f"edge {topo.name(u)}->{topo.name(v)} has no relationship")
        if r == "intra":
            continue
        rules = []
        if r in ("cp", "pp"):
            # u exports toward its provider or peer: customer routes only
            rules.append(
                MatchActionRule(Match(MatchKind.COMM_HAS, "ppo"),
                                (Action(ActionKind.DROP),))
            )
        tag = 0 if r == "cp" else 1
        rules.append(
            MatchActionRule(
                Match(MatchKind.ALWAYS),
                (Action(ActionKind.SET_COMM, tag),
                 Action(ActionKind.SET_LP, _LP_BY_IMPORT[r])),
            )
        )
        edge_policies[(u, v)] = EdgePolicy((u, v), tuple(rules))
    return PolicyIR(schema=schema, edge_policies=edge_policies, relationships=full)


def gao_rexford_instance(topo: Topology, rels: dict, name: str = "wan") -> SrpInstance:
    policy = gao_rexford_policy(topo, rels)
    init = Attribute(lp=100, pathlen=0, comms=0, med=0, rid=topo.dest, as_path=())
    return SrpInstance(
        topology=topo, schema=policy.schema, init_attr=init, policy=policy,
        level=STAR, name=name,
    )


def gen_gao_rexford(topo: Topology, rels: dict) -> str:
    inst = gao_rexford_instance(topo, rels)
    return print_air(inst.topology, inst.policy, inst.init_attr)


def wan_topology(n: int, seed: int, peer_fraction: float = 0.15):
    """Provider hierarchy with multihoming and a sprinkle of peering."""
    if n < 2:
        raise GenError("need at least two nodes")
    rng = random.Random(seed)
    edges = []
    rels = {}

    def add(u, v, r):
        if (u, v) in rels or u == v:
            return
        edges.append((u, v))
        edges.append((v, u))
        rels[(u, v)] = r
        rels[(v, u)] = {"cp": "pc", "pc": "cp", "pp": "pp"}[r]

    for i in range(1, n):
        parent = rng.randrange(max(0, i - 6), i)
        add(i, parent, "cp")
    for i in range(2, n):
        if rng.random() < 0.25:
            extra = rng.randrange(0, i)
            add(i, extra, "cp")
    n_peers = int(n * peer_fraction)
    for _ in range(n_peers):
        a, b = rng.randrange(1, n), rng.randrange(1, n)
        add(a, b, "pp")
    names = tuple(f"as{i}" for i in range(n))
    topo = Topology(n=n, edges=tuple(edges), dest=0, names=names)
    return topo, rels


def bgpstream_like_topology(n: int, seed: int):
    """Denser AS graph: preferential provider attachment, some peering."""
    rng = random.Random(seed)
    edges = []
    rels = {}
    degree = [1] * n

    def add(u, v, r):
        if (u, v) in rels or u == v:
            return
        edges.append((u, v))
        edges.append((v, u))
        rels[(u, v)] = r
        rels[(v, u)] = {"cp": "pc", "pc": "cp", "pp": "pp"}[r]
        degree[u] += 1
        degree[v] += 1

    for i in range(1, n):
        n_prov = 1 + (rng.random() < 0.5) + (rng.random() < 0.2)
        pool = list(range(i))
        weights = [degree[j] for j in pool]
        for _ in range(n_prov):
            provider = rng.choices(pool, weights=weights)[0]
            add(i, provider, "cp")
    for _ in range(max(1, n // 8)):
        a, b = rng.randrange(1, n), rng.randrange(1, n)
        add(a, b, "pp")
    names = tuple(f"as{i}" for i in range(n))
    topo = Topology(n=n, edges=tuple(edges), dest=0, names=names)
    return topo, rels


# ---------------------------------------------------------------------------
# the two motivating example networks


def tag_preference_example() -> str:
    """Five routers: a tagged path raises local preference at the join node."""
    return """\
SCHEMA comm=bitmask tags=c1
NODES r1 r2 r3 r4 r5
EDGES r1->r2 r2->r1 r1->r3 r3->r1 r2->r4 r3->r4 r4->r5
DEST r1
POLICY r1->r3:
  match true => add_tag(c1)
POLICY r3->r4:
  match comm_has(c1) => set_lp(200)
  match true => allow
"""


def tag_preference_variant() -> str:
    """Same network, but the last hop drops untagged routes."""
    return tag_preference_example() + """\
POLICY r4->r5:
  match comm_equals(0) => drop
  match true => allow
"""


def correlated_tags_example() -> str:
    """Seven-router diamond: complementary filters keyed on one tag."""
    return """\
SCHEMA comm=bitmask tags=c1
NODES r1 r2 r3 r4 r5 r6 r7
EDGES r1->r2 r1->r3 r2->r4 r3->r4 r4->r5 r4->r6 r5->r7 r6->r7
DEST r1
POLICY r1->r3:
  match true => add_tag(c1)
POLICY r3->r4:
  match comm_has(c1) => set_lp(200)
  match true => allow
POLICY r5->r7:
  match comm_has(c1) => drop
  match true => allow
POLICY r6->r7:
  match comm_equals(0) => drop
  match true => allow
"""
