"""Per-edge match-action routing policy.

Each directed edge carries an ordered rule list (first match wins), modeled
after route-map style configuration.  A rule either drops the announcement or
rewrites fields; untouched fields follow the protocol default tail: local
preference resets to 100, communities and MED propagate, path length grows by
one hop (or the edge weight for cost-based protocols), and the router-id slot
takes the sending node's id.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .srp import (
    Attribute,
    AttributeSchema,
    CommMode,
    PATHLEN_WIDTH,
    Protocol,
    SchemaError,
)

DEFAULT_LP = 100
_PATHLEN_MAX = (1 << PATHLEN_WIDTH) - 1


class DroppedType:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Dropped"


DROPPED = DroppedType()


class PolicyError(Exception):
    """A rule references undeclared tags or combines incompatible pieces."""


class MatchKind(enum.Enum):
    ALWAYS = "true"
    COMM_EQUALS = "comm_equals"
    COMM_HAS = "comm_has"
    PATH_CONTAINS = "path_contains"


@dataclass(frozen=True)
class PathPattern:
    """Ordered containment over the announcement path.

    Optional leading edge followed by nodes the path must visit in order,
    reading the path in travel direction (destination first).
    """

    edge: Optional[tuple] = None  # (node, node) that must be consecutive
    nodes: tuple = ()

    def matches(self, traversal) -> bool:
        pos = 0
        if self.edge is not None:
            a, b = self.edge
            for i in range(len(traversal) - 1):
                if traversal[i] == a and traversal[i + 1] == b:
                    pos = i + 2
                    break
            else:
                return False
        for n in self.nodes:
            while pos < len(traversal) and traversal[pos] != n:
                pos += 1
            if pos >= len(traversal):
                return False
            pos += 1
        return True


@dataclass(frozen=True)
class Match:
    kind: MatchKind
    value: object = None  # int, tag name, or PathPattern

    def fields_read(self) -> frozenset:
        if self.kind in (MatchKind.COMM_EQUALS, MatchKind.COMM_HAS):
            return frozenset({"comms"})
        return frozenset()

    def evaluate(self, attr: Attribute, schema: AttributeSchema, sender: int) -> bool:
        if self.kind is MatchKind.ALWAYS:
            return True
        if self.kind is MatchKind.COMM_EQUALS:
            return attr.require("comms") == self.value
        if self.kind is MatchKind.COMM_HAS:
            bit = schema.tag_bit(self.value)
            return bool(attr.require("comms") >> bit & 1)
        if self.kind is MatchKind.PATH_CONTAINS:
            if attr.as_path is None:
                raise SchemaError("path matching needs tracked paths")
            traversal = list(reversed(attr.as_path)) + [sender]
            return self.value.matches(traversal)
        raise AssertionError(self.kind)


class ActionKind(enum.Enum):
    SET_COMM = "set_comm"
    ADD_TAG = "add_tag"
    INCR_COMM = "incr_comm"
    SET_LP = "set_lp"
    DROP = "drop"
    ALLOW = "allow"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    value: object = None

    def fields_written(self) -> frozenset:
        if self.kind in (ActionKind.SET_COMM, ActionKind.ADD_TAG, ActionKind.INCR_COMM):
            return frozenset({"comms"})
        if self.kind is ActionKind.SET_LP:
            return frozenset({"lp"})
        return frozenset()


@dataclass(frozen=True)
class MatchActionRule:
    match: Match
    actions: tuple

    def __post_init__(self):
        kinds = [a.kind for a in self.actions]
        if ActionKind.DROP in kinds and len(kinds) > 1:
            raise PolicyError("drop excludes other actions in the same rule")

    @property
    def is_drop(self) -> bool:
        return any(a.kind is ActionKind.DROP for a in self.actions)

    def fields_written(self) -> frozenset:
        out = frozenset()
        for a in self.actions:
            out |= a.fields_written()
        return out


@dataclass(frozen=True)
class EdgePolicy:
    edge: tuple
    rules: tuple = ()

    def uses_path_match(self) -> bool:
        return any(r.match.kind is MatchKind.PATH_CONTAINS for r in self.rules)


@dataclass(frozen=True)
class PolicyIR:
    """Validated policy: declared schema plus one rule list per edge."""

    schema: AttributeSchema
    edge_policies: dict = field(default_factory=dict)
    relationships: dict = field(default_factory=dict)  # edge -> cp | pc | pp | intra
    edge_weights: dict = field(default_factory=dict)  # cost protocols only

    def edge_policy(self, edge) -> EdgePolicy:
        return self.edge_policies.get(tuple(edge), EdgePolicy(tuple(edge)))

    def edge_weight(self, edge) -> int:
        return self.edge_weights.get(tuple(edge), 1)

    def validate(self, topology) -> None:
        edge_set = set(topology.edges)
        for e, ep in self.edge_policies.items():
            if e not in edge_set:
                raise PolicyError(f"policy on non-edge {e}")
            for rule in ep.rules:
                self._validate_rule(rule, e)
        for e in self.relationships:
            if e not in edge_set:
                raise PolicyError(f"relationship on non-edge {e}")

    def _validate_rule(self, rule: MatchActionRule, edge) -> None:
        m = rule.match
        if m.kind is MatchKind.COMM_HAS:
            if self.schema.comm_mode is not CommMode.BITMASK:
                raise PolicyError(f"comm_has needs bitmask communities (edge {edge})")
            self.schema.tag_bit(m.value)
        if m.kind is MatchKind.COMM_EQUALS:
            if not 0 <= m.value < (1 << self.schema.comm_width):
                raise PolicyError(f"comm value {m.value} exceeds width (edge {edge})")
        for a in rule.actions:
            if a.kind is ActionKind.ADD_TAG:
                if self.schema.comm_mode is not CommMode.BITMASK:
                    raise PolicyError(f"add_tag needs bitmask communities (edge {edge})")
                self.schema.tag_bit(a.value)
            if a.kind is ActionKind.INCR_COMM and self.schema.comm_mode is not CommMode.COUNTER:
                raise PolicyError(f"incr_comm needs counter communities (edge {edge})")
            if a.kind is ActionKind.SET_COMM:
                if not 0 <= a.value < (1 << self.schema.comm_width):
                    raise PolicyError(f"set_comm value {a.value} exceeds width (edge {edge})")

    # -- schema pruning hooks ------------------------------------------------

    def filtering_fields(self) -> set:
        """Fields the drop decision can observe anywhere in the policy."""
        out = set()
        for ep in self.edge_policies.values():
            drop_idx = [i for i, r in enumerate(ep.rules) if r.is_drop]
            if not drop_idx:
                continue
            for r in ep.rules[: max(drop_idx) + 1]:
                out |= r.match.fields_read()
        return out

    def touched_fields(self) -> set:
        out = set()
        for ep in self.edge_policies.values():
            for r in ep.rules:
                out |= r.match.fields_read()
                out |= r.fields_written()
        return out

    def guard_fields(self, active) -> set:
        """Match fields guarding any rule that writes a field in ``active``."""
        out = set()
        for ep in self.edge_policies.values():
            writer_idx = [
                i for i, r in enumerate(ep.rules) if r.fields_written() & set(active)
            ]
            if not writer_idx:
                continue
            for r in ep.rules[: max(writer_idx) + 1]:
                out |= r.match.fields_read()
        return out

    def uses_path_match(self) -> bool:
        return any(ep.uses_path_match() for ep in self.edge_policies.values())


def _saturating_add(value: int, delta: int, width: int) -> int:
    return min(value + delta, (1 << width) - 1)


def apply_transfer(
    ep: EdgePolicy,
    attr: Attribute,
    schema: AttributeSchema,
    sender: int,
    protocol: Protocol = Protocol.BGP,
    weight: int = 1,
):
    """Process one announcement across an edge.

    Returns the rewritten Attribute, or DROPPED when the first matching rule
    drops.  Fields absent from the input stay absent unless a rule writes
    them; present fields follow the default tail.
    """
    matched = None
    for rule in ep.rules:
        if rule.match.evaluate(attr, schema, sender):
            matched = rule
            break
    if matched is not None and matched.is_drop:
        return DROPPED
    actions = matched.actions if matched is not None else ()

    lp = DEFAULT_LP if attr.lp is not None else None
    comms = attr.comms
    for a in actions:
        if a.kind is ActionKind.SET_LP:
            lp = a.value
        elif a.kind is ActionKind.SET_COMM:
            comms = a.value
        elif a.kind is ActionKind.ADD_TAG:
            base = comms if comms is not None else 0
            comms = base | (1 << schema.tag_bit(a.value))
        elif a.kind is ActionKind.INCR_COMM:
            base = comms if comms is not None else 0
            comms = _saturating_add(base, a.value, schema.comm_width)

    pathlen = attr.pathlen
    if pathlen is not None:
        step = weight if protocol is Protocol.OSPF else 1
        pathlen = _saturating_add(pathlen, step, PATHLEN_WIDTH)
    rid = sender if attr.rid is not None else None
    as_path = (sender,) + attr.as_path if attr.as_path is not None else None
    return Attribute(lp=lp, pathlen=pathlen, comms=comms, med=attr.med,
                     rid=rid, as_path=as_path)
