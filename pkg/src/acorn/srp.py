"""Stable-routing domain model.

An instance is a destination-rooted digraph, a route-attribute schema, a
per-edge match-action policy and a route-selection order.  The selection
order is drawn from a hierarchy of partial orders ranging from "any available
route" up to the full protocol decision process; coarser orders make routers
nondeterministic and over-approximate the set of stable routing trees.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Union


LP_WIDTH = 32
PATHLEN_WIDTH = 16
MED_WIDTH = 32
RID_WIDTH = 32

FIELDS = ("lp", "pathlen", "comms", "med", "rid")

FIELD_WIDTHS = {
    "lp": LP_WIDTH,
    "pathlen": PATHLEN_WIDTH,
    "med": MED_WIDTH,
    "rid": RID_WIDTH,
}


class SchemaError(Exception):
    """An attribute is missing a field the active order or policy requires."""


class Protocol(enum.Enum):
    BGP = "bgp"
    OSPF = "ospf"


class Level(enum.Enum):
    """Route-selection precision, coarsest first."""

    STAR = "star"
    LP = "lp"
    LP_PATHLEN = "lp-pathlen"
    LP_PATHLEN_MED = "lp-pathlen-med"
    PATH_COST = "pathcost"
    FULL = "concrete"


# (field, prefer_high) steps of the selection procedure, in tie-break order.
_BGP_STEPS = (("lp", True), ("pathlen", False), ("med", False), ("rid", False))
_OSPF_STEPS = (("pathlen", False), ("rid", False))

_BGP_CHAIN = [Level.STAR, Level.LP, Level.LP_PATHLEN, Level.LP_PATHLEN_MED, Level.FULL]
_OSPF_CHAIN = [Level.STAR, Level.PATH_COST, Level.FULL]


@dataclass(frozen=True)
class AbstractionLevel:
    protocol: Protocol = Protocol.BGP
    level: Level = Level.STAR

    def __post_init__(self):
        if self.level not in self.chain():
            raise ValueError(f"{self.level} is not a {self.protocol.value} level")

    def chain(self) -> list:
        return _BGP_CHAIN if self.protocol is Protocol.BGP else _OSPF_CHAIN

    def steps(self) -> tuple:
        """Selection steps this level models (a prefix of the full process)."""
        all_steps = _BGP_STEPS if self.protocol is Protocol.BGP else _OSPF_STEPS
        chain = self.chain()
        depth = chain.index(self.level)
        if self.level is Level.FULL:
            return all_steps
        return all_steps[:depth]

    def compared_fields(self) -> frozenset:
        return frozenset(f for f, _ in self.steps())

    def escalate(self) -> Optional["AbstractionLevel"]:
        chain = self.chain()
        i = chain.index(self.level)
        if i + 1 >= len(chain):
            return None
        return AbstractionLevel(self.protocol, chain[i + 1])

    @property
    def is_concrete(self) -> bool:
        return self.level is Level.FULL


def bgp_level(level: Level) -> AbstractionLevel:
    return AbstractionLevel(Protocol.BGP, level)


STAR = bgp_level(Level.STAR)
LP = bgp_level(Level.LP)
LP_PATHLEN = bgp_level(Level.LP_PATHLEN)
LP_PATHLEN_MED = bgp_level(Level.LP_PATHLEN_MED)
FULL = bgp_level(Level.FULL)


class NoRouteType:
    """Distinguished 'no route' value, strictly worse than every attribute."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NoRoute"


NO_ROUTE = NoRouteType()


class CommMode(enum.Enum):
    BITMASK = "bitmask"
    COUNTER = "counter"


@dataclass(frozen=True)
class AttributeSchema:
    """Which announcement fields are live, and how communities are read."""

    active_fields: frozenset = frozenset(FIELDS)
    comm_mode: CommMode = CommMode.BITMASK
    comm_width: int = 1
    tags: tuple = ()  # bitmask mode: tag name -> bit position by index

    def __post_init__(self):
        unknown = self.active_fields - set(FIELDS)
        if unknown:
            raise ValueError(f"unknown schema fields {sorted(unknown)}")
        if self.comm_mode is CommMode.BITMASK and self.tags:
            if len(self.tags) != self.comm_width:
                raise ValueError("bitmask width must equal declared tag count")

    def tag_bit(self, tag: str) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise SchemaError(f"undeclared tag {tag!r}") from None

    def field_width(self, name: str) -> int:
        return self.comm_width if name == "comms" else FIELD_WIDTHS[name]

    def restrict(self, fields) -> "AttributeSchema":
        return replace(self, active_fields=frozenset(fields))


@dataclass(frozen=True)
class Attribute:
    """One route announcement; fields outside the schema stay None.

    ``as_path`` is simulation-only state (never a solver variable): the nodes
    the announcement traversed, most recent first.
    """

    lp: Optional[int] = None
    pathlen: Optional[int] = None
    comms: Optional[int] = None
    med: Optional[int] = None
    rid: Optional[int] = None
    as_path: Optional[tuple] = None

    def get(self, name: str) -> Optional[int]:
        return getattr(self, name)

    def require(self, name: str) -> int:
        v = getattr(self, name)
        if v is None:
            raise SchemaError(f"attribute lacks field {name!r}")
        return v

    def project(self, fields) -> "Attribute":
        keep = {f: getattr(self, f) for f in FIELDS if f in fields}
        return Attribute(**keep)


AttrOrNoRoute = Union[Attribute, NoRouteType]


class Pref(enum.Enum):
    LESS = "less"  # first operand preferred
    GREATER = "greater"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"

    def flip(self) -> "Pref":
        if self is Pref.LESS:
            return Pref.GREATER
        if self is Pref.GREATER:
            return Pref.LESS
        return self


def compare(level: AbstractionLevel, a: AttrOrNoRoute, b: AttrOrNoRoute) -> Pref:
    """Order two routes under the selection prefix modeled by ``level``.

    LESS means the first operand is preferred.  NoRoute loses to every
    attribute at every level; at the coarsest level any two distinct
    attributes are incomparable.
    """
    a_none = isinstance(a, NoRouteType)
    b_none = isinstance(b, NoRouteType)
    if a_none and b_none:
        return Pref.EQUAL
    if b_none:
        return Pref.LESS
    if a_none:
        return Pref.GREATER
    for fname, prefer_high in level.steps():
        av, bv = a.require(fname), b.require(fname)
        if av == bv:
            continue
        better = av > bv if prefer_high else av < bv
        return Pref.LESS if better else Pref.GREATER
    return Pref.EQUAL if a == b else Pref.INCOMPARABLE


def minimal_set(level: AbstractionLevel, attrs) -> set:
    """Elements of ``attrs`` with no strictly preferred element."""
    items = list(attrs)
    out = set()
    for a in items:
        if any(compare(level, b, a) is Pref.LESS for b in items):
            continue
        out.add(a)
    return out


@dataclass(frozen=True)
class Topology:
    """Destination-rooted directed graph over dense integer node ids."""

    n: int
    edges: tuple  # ordered (src, dst) pairs
    dest: int
    names: tuple = ()

    def __post_init__(self):
        if not self.names:
            object.__setattr__(self, "names", tuple(f"n{i}" for i in range(self.n)))
        if len(self.names) != self.n:
            raise ValueError("names/#nodes mismatch")
        if not 0 <= self.dest < self.n:
            raise ValueError("dest not a node")
        seen = set()
        for v, u in self.edges:
            if v == u:
                raise ValueError(f"self-loop at node {v}")
            if not (0 <= v < self.n and 0 <= u < self.n):
                raise ValueError(f"edge ({v},{u}) out of range")
            if (v, u) in seen:
                raise ValueError(f"duplicate edge ({v},{u})")
            seen.add((v, u))

    @property
    def nodes(self) -> range:
        return range(self.n)

    def name(self, v: int) -> str:
        return self.names[v]

    def node_id(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown node {name!r}") from None

    def in_neighbors(self, u: int) -> list:
        return sorted(v for v, w in self.edges if w == u)

    def out_neighbors(self, v: int) -> list:
        return sorted(u for w, u in self.edges if w == v)


@dataclass(frozen=True)
class SrpInstance:
    """A routing problem: topology + schema + policy + selection order."""

    topology: Topology
    schema: AttributeSchema
    init_attr: Attribute
    policy: "PolicyIR"  # noqa: F821  (policy module imports this one)
    level: AbstractionLevel = STAR
    failed_edges: frozenset = frozenset()
    name: str = "instance"

    def __post_init__(self):
        for e in self.failed_edges:
            if e not in set(self.topology.edges):
                raise ValueError(f"failed edge {e} not in topology")

    def at_level(self, level: AbstractionLevel) -> "SrpInstance":
        return replace(self, level=level)

    def with_failures(self, edges) -> "SrpInstance":
        return replace(self, failed_edges=frozenset(edges))

    def transfer(self, edge, attr):
        """Concrete transfer along ``edge``; failed edges drop everything.

        Returns an Attribute or the module-level DROPPED marker from the
        policy module.  Routes never appear spontaneously: transferring
        no-route yields no route.
        """
        from . import policy as _policy

        if isinstance(attr, NoRouteType):
            return _policy.DROPPED
        if edge in self.failed_edges:
            return _policy.DROPPED
        return _policy.apply_transfer(
            self.policy.edge_policy(edge), attr, self.schema, sender=edge[0],
            protocol=self.level.protocol, weight=self.policy.edge_weight(edge),
        )


def prune_schema(policy, prop, level: AbstractionLevel, base: AttributeSchema) -> AttributeSchema:
    """Drop announcement fields that only matter for finer selection orders.

    Keeps fields the drop logic can observe, fields the property mentions and
    fields the level compares, then closes over match guards of rules that
    write a kept field.
    """
    if level.is_concrete:
        fields = set(level.compared_fields())
        fields |= policy.touched_fields()
        if prop is not None:
            fields |= prop.fields_referenced()
        return base.restrict(fields)

    fields = set(level.compared_fields())
    fields |= policy.filtering_fields()
    if prop is not None:
        fields |= prop.fields_referenced()
    # guards of rules that write an active field must stay observable
    changed = True
    while changed:
        changed = False
        for extra in policy.guard_fields(fields):
            if extra not in fields:
                fields.add(extra)
                changed = True
    return base.restrict(fields)
