"""Transfer semantics, the AIR format, and GML ingestion."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acorn import benchgen, oracle
from acorn.air import (
    AirParseError,
    AirSemanticError,
    GmlError,
    ingest_gml,
    parse_air,
    print_air,
)
from acorn.policy import (
    Action,
    ActionKind,
    DROPPED,
    EdgePolicy,
    Match,
    MatchActionRule,
    MatchKind,
    PathPattern,
    PolicyError,
    apply_transfer,
)
from acorn.srp import Attribute, AttributeSchema, CommMode, STAR, SrpInstance


def bitmask_schema(*tags):
    return AttributeSchema(
        comm_mode=CommMode.BITMASK, comm_width=max(len(tags), 1), tags=tags
    )


FULL_ATTR = Attribute(lp=100, pathlen=3, comms=0, med=0, rid=9, as_path=(9, 0))


class TestApplyTransfer:
    def test_default_tail(self):
        out = apply_transfer(EdgePolicy((1, 2)), FULL_ATTR, bitmask_schema(), sender=1)
        assert out.lp == 100 and out.pathlen == 4
        assert out.rid == 1 and out.as_path == (1, 9, 0)
        assert out.comms == 0 and out.med == 0

    def test_tag_added_on_edge(self):
        schema = bitmask_schema("c1")
        ep = EdgePolicy((0, 2), (
            MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.ADD_TAG, "c1"),)),
        ))
        out = apply_transfer(ep, FULL_ATTR, schema, sender=0)
        assert out.comms == 1

    def test_lp_raised_when_tagged(self):
        schema = bitmask_schema("c1")
        ep = EdgePolicy((2, 3), (
            MatchActionRule(Match(MatchKind.COMM_HAS, "c1"), (Action(ActionKind.SET_LP, 200),)),
            MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.ALLOW),)),
        ))
        tagged = Attribute(lp=100, pathlen=1, comms=1, med=0, rid=0, as_path=(0,))
        assert apply_transfer(ep, tagged, schema, sender=2).lp == 200
        untagged = Attribute(lp=100, pathlen=1, comms=0, med=0, rid=0, as_path=(0,))
        assert apply_transfer(ep, untagged, schema, sender=2).lp == 100

    def test_drop_on_tag(self):
        schema = bitmask_schema("c1")
        ep = EdgePolicy((4, 6), (
            MatchActionRule(Match(MatchKind.COMM_HAS, "c1"), (Action(ActionKind.DROP),)),
        ))
        tagged = Attribute(lp=100, pathlen=1, comms=1, med=0, rid=0, as_path=(0,))
        assert apply_transfer(ep, tagged, schema, sender=4) is DROPPED

    def test_first_match_wins(self):
        schema = bitmask_schema("c1")
        ep = EdgePolicy((0, 1), (
            MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.SET_LP, 150),)),
            MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.SET_LP, 999),)),
        ))
        assert apply_transfer(ep, FULL_ATTR, schema, sender=0).lp == 150

    def test_counter_saturates(self):
        schema = AttributeSchema(comm_mode=CommMode.COUNTER, comm_width=2)
        ep = EdgePolicy((0, 1), (
            MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.INCR_COMM, 2),)),
        ))
        near_top = Attribute(lp=100, pathlen=0, comms=2, med=0, rid=0, as_path=())
        assert apply_transfer(ep, near_top, schema, sender=0).comms == 3

    def test_drop_excludes_other_actions(self):
        with pytest.raises(PolicyError):
            MatchActionRule(Match(MatchKind.ALWAYS),
                            (Action(ActionKind.DROP), Action(ActionKind.SET_LP, 1)))

    def test_failed_edge_drops_everything(self):
        text = benchgen.tag_preference_example()
        topo, policy, init, _ = parse_air(text)
        inst = SrpInstance(
            topology=topo, schema=policy.schema, init_attr=init, policy=policy,
            level=STAR, failed_edges=frozenset({(0, 1)}),
        )
        assert inst.transfer((0, 1), init) is DROPPED
        assert inst.transfer((0, 2), init) is not DROPPED

    def test_no_route_never_becomes_a_route(self):
        from acorn.srp import NO_ROUTE

        text = benchgen.tag_preference_example()
        topo, policy, init, _ = parse_air(text)
        inst = SrpInstance(
            topology=topo, schema=policy.schema, init_attr=init, policy=policy,
            level=STAR,
        )
        assert inst.transfer((0, 1), NO_ROUTE) is DROPPED

    @given(st.integers(0, 3), st.integers(1, 3))
    def test_deterministic(self, comms, delta):
        schema = AttributeSchema(comm_mode=CommMode.COUNTER, comm_width=2)
        ep = EdgePolicy((0, 1), (
            MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.INCR_COMM, delta),)),
        ))
        a = Attribute(lp=100, pathlen=0, comms=comms, med=0, rid=0, as_path=())
        outs = {apply_transfer(ep, a, schema, sender=0) for _ in range(3)}
        assert len(outs) == 1


class TestPathPattern:
    def test_ordered_containment(self):
        pat = PathPattern(nodes=(1, 3))
        assert pat.matches([0, 1, 2, 3, 4])
        assert not pat.matches([0, 3, 2, 1])

    def test_leading_edge_must_be_consecutive(self):
        pat = PathPattern(edge=(0, 1), nodes=(3,))
        assert pat.matches([0, 1, 3])
        assert not pat.matches([0, 2, 1, 3])
        assert not pat.matches([1, 0, 3])


class TestAirParsing:
    def test_motivating_example_shape(self):
        topo, policy, init, failed = parse_air(benchgen.tag_preference_example())
        assert topo.n == 5
        assert len(topo.edges) == 7
        assert topo.name(topo.dest) == "r1"
        r1, r3, r4 = topo.node_id("r1"), topo.node_id("r3"), topo.node_id("r4")
        tag_rule = policy.edge_policies[(r1, r3)].rules[0]
        assert tag_rule.actions[0].kind is ActionKind.ADD_TAG
        lp_rule = policy.edge_policies[(r3, r4)].rules[0]
        assert lp_rule.match.kind is MatchKind.COMM_HAS
        assert lp_rule.actions[0] == Action(ActionKind.SET_LP, 200)
        assert init.lp == 100 and init.comms == 0

    def test_single_node_instance(self):
        topo, policy, init, failed = parse_air("NODES d\nDEST d\n")
        assert topo.n == 1 and len(topo.edges) == 0 and topo.dest == 0

    def test_undeclared_tag_rejected(self):
        text = """\
SCHEMA comm=bitmask tags=c1
NODES a b
EDGES a->b
DEST a
POLICY a->b:
  match comm_has(c9) => drop
"""
        with pytest.raises(AirSemanticError):
            parse_air(text)

    def test_duplicate_edge_rejected(self):
        with pytest.raises(AirParseError) as err:
            parse_air("NODES a b\nEDGES a->b a->b\nDEST a\n")
        assert err.value.line == 2

    def test_unknown_node_rejected(self):
        with pytest.raises(AirParseError):
            parse_air("NODES a b\nEDGES a->c\nDEST a\n")

    def test_self_loop_rejected(self):
        with pytest.raises(AirParseError):
            parse_air("NODES a\nEDGES a->a\nDEST a\n")

    def test_failed_section(self):
        text = "NODES a b\nEDGES a->b b->a\nDEST a\nFAILED b->a\n"
        _, _, _, failed = parse_air(text)
        assert failed == frozenset({(1, 0)})

    def test_rels_section_roundtrip(self):
        text = "NODES a b\nEDGES a->b b->a\nDEST a\nRELS a->b=cp b->a=pc\n"
        topo, policy, init, failed = parse_air(text)
        assert policy.relationships == {(0, 1): "cp", (1, 0): "pc"}
        again = print_air(topo, policy, init, failed)
        topo2, policy2, _, _ = parse_air(again)
        assert policy2.relationships == policy.relationships

    def test_parse_error_carries_line(self):
        with pytest.raises(AirParseError) as err:
            parse_air("NODES a\nDEST a\nPOLICY a->a\n")
        assert err.value.line == 3

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 4000))
    def test_print_parse_roundtrip(self, seed):
        inst = oracle.random_instance(seed)
        text = print_air(inst.topology, inst.policy, inst.init_attr, inst.failed_edges)
        topo, policy, init, failed = parse_air(text)
        assert topo.edges == inst.topology.edges
        assert topo.dest == inst.topology.dest
        assert failed == inst.failed_edges
        assert init == inst.init_attr
        assert policy.schema.comm_mode == inst.policy.schema.comm_mode
        for e, ep in inst.policy.edge_policies.items():
            assert policy.edge_policies.get(e, EdgePolicy(e)).rules == ep.rules


SMALL_ISP_EDGES = [
    # 22-node tree with a few cross links, sized like a small national ISP
    (0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6), (3, 7), (3, 8),
    (4, 9), (4, 10), (5, 11), (5, 12), (6, 13), (6, 14), (7, 15), (8, 16),
    (9, 17), (10, 18), (11, 19), (12, 20), (13, 21), (14, 15), (16, 17), (19, 20),
]


def _gml_text(n, edges, duplicate_id=False, rels=True):
    lines = ["graph ["]
    for i in range(n):
        nid = 0 if (duplicate_id and i == 1) else i
        lines.append(f"  node [ id {nid} label \"node {i}\" ]")
    for s, t in edges:
        rel = ' rel "cp"' if rels else ""
        lines.append(f"  edge [ source {s} target {t}{rel} ]")
    lines.append("]")
    return "\n".join(lines)


class TestGml:
    def test_ingest_counts(self):
        topo, policy = ingest_gml(_gml_text(22, SMALL_ISP_EDGES))
        assert topo.n == 22
        assert len(topo.edges) == 2 * len(SMALL_ISP_EDGES)

    def test_duplicate_node_id_rejected(self):
        with pytest.raises(GmlError):
            ingest_gml(_gml_text(22, SMALL_ISP_EDGES, duplicate_id=True))

    def test_three_node_chain_gets_export_filters(self):
        # a <-cp- ... : node 0 provider of 1, 1 provider of 2
        text = _gml_text(3, [(1, 0), (2, 1)])  # rel cp: source is customer
        topo, policy = ingest_gml(text)
        # customer->provider edges carry the peer/provider-origin drop
        ep = policy.edge_policies[(1, 0)]
        assert ep.rules[0].is_drop
        assert ep.rules[0].match.kind is MatchKind.COMM_HAS
        # provider->customer edges export freely
        ep_down = policy.edge_policies[(0, 1)]
        assert not any(r.is_drop for r in ep_down.rules)

    def test_unlabeled_edges_give_default_policy(self):
        topo, policy = ingest_gml(_gml_text(4, [(0, 1), (1, 2), (2, 3)], rels=False))
        assert policy.edge_policies == {}
        assert policy.relationships == {}
