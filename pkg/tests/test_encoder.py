"""Constraint-system structure, both backends, and encoding invariants."""

import pytest

from acorn import formula as F
from acorn import benchgen, bridge, oracle, verifier
from acorn.air import parse_air
from acorn.emit import EmitError, to_smt2
from acorn.encoder import (
    GRAPH,
    STANDARD,
    EncodingError,
    UnsupportedFeatureError,
    blocking_clause,
    encode,
    encode_abstract,
    encode_concrete,
    encode_path_regex,
)
from acorn.policy import PathPattern
from acorn.srp import FULL, LP, STAR, SrpInstance, Topology


def load(text, level=STAR, name="t"):
    topo, policy, init, failed = parse_air(text)
    return SrpInstance(
        topology=topo, schema=policy.schema, init_attr=init, policy=policy,
        level=level, failed_edges=failed, name=name,
    )


def diamond():
    return load(benchgen.correlated_tags_example())


def five_node():
    return load(benchgen.tag_preference_example())


class TestAbstractStructure:
    def test_worked_transfer_constraints(self):
        """The two famous constraints of the diamond network must appear:
        selecting the tagging edge pins the tag, and the complementary
        filter is a definitional equivalence on the sender's community."""
        inst = diamond()
        enc = encode(inst)
        topo = inst.topology
        r1, r3 = topo.node_id("r1"), topo.node_id("r3")
        r5, r7 = topo.node_id("r5"), topo.node_id("r7")
        want_transfer = F.Implies(
            F.BoolVar(f"re_{r1}_{r3}"),
            F.Eq(F.BVVar(f"comm_{r3}", 1), F.BVLit(1, 1)),
        )
        assert want_transfer in enc.system.assertions
        want_drop = F.Iff(
            F.BoolVar(f"routedropped_{r5}_{r7}"),
            F.Eq(F.BVVar(f"comm_{r5}", 1), F.BVLit(1, 1)),
        )
        assert want_drop in enc.system.assertions

    def test_constant_false_drops_are_inlined(self):
        inst = diamond()
        enc = encode(inst)
        names = set(enc.system.variables)
        # only the two filtering edges keep routeDropped variables
        dropped = {n for n in names if n.startswith("routedropped_")}
        topo = inst.topology
        r5, r6, r7 = (topo.node_id(x) for x in ("r5", "r6", "r7"))
        assert dropped == {f"routedropped_{r5}_{r7}", f"routedropped_{r6}_{r7}"}

    def test_single_node_instance(self):
        inst = load("NODES d\nDEST d\n")
        enc = encode(inst)
        names = set(enc.system.variables)
        assert "hasroute_0" in names
        assert not any(n.startswith("nchoice") or n.startswith("re_") for n in names)

    def test_dest_in_edges_pinned_false(self):
        inst = five_node()
        enc = encode(inst)
        topo = inst.topology
        r2, r1 = topo.node_id("r2"), topo.node_id("r1")
        assert F.Not(F.BoolVar(f"re_{r2}_{r1}")) in enc.system.assertions

    def test_lp_level_adds_max_only(self):
        inst = five_node().at_level(LP)
        enc = encode(inst)
        names = set(enc.system.variables)
        assert any(n.startswith("maxlp_") for n in names)
        assert not any(n.startswith("minpath_") for n in names)

    def test_concrete_adds_full_chain(self):
        inst = five_node().at_level(FULL)
        enc = encode(inst)
        names = set(enc.system.variables)
        for prefix in ("maxlp_", "minpath_", "minmed_", "minrid_", "nvalid_"):
            assert any(n.startswith(prefix) for n in names), prefix

    def test_star_has_no_selection_machinery(self):
        enc = encode(five_node())
        names = set(enc.system.variables)
        assert not any(
            n.startswith(("maxlp_", "minpath_", "nvalid_", "translp_"))
            for n in names
        )

    def test_failed_edge_forces_edge_off(self):
        text = "NODES a b\nEDGES a->b\nDEST a\nFAILED a->b\n"
        enc = encode(load(text))
        assert F.Not(F.BoolVar("re_0_1")) in enc.system.assertions


class TestEntryPoints:
    def test_abstract_rejects_concrete_level(self):
        with pytest.raises(EncodingError):
            encode_abstract(five_node().at_level(FULL))

    def test_concrete_rejects_abstract_level(self):
        with pytest.raises(EncodingError):
            encode_concrete(five_node())

    def test_concrete_accepts_concrete(self):
        enc = encode_concrete(five_node().at_level(FULL))
        assert any(n.startswith("minrid_") for n in enc.system.variables)


class TestOspfCosts:
    def _instance(self):
        from acorn.policy import PolicyIR
        from acorn.srp import (
            AbstractionLevel,
            Attribute,
            AttributeSchema,
            CommMode,
            Level,
            Protocol,
            Topology,
        )

        # diamond where the heavier two-hop side loses to the light one
        topo = Topology(
            n=4, edges=((0, 1), (0, 2), (1, 3), (2, 3)), dest=0,
            names=("d", "a", "b", "x"),
        )
        schema = AttributeSchema(comm_mode=CommMode.BITMASK, comm_width=1, tags=())
        policy = PolicyIR(
            schema=schema,
            edge_weights={(0, 1): 1, (1, 3): 1, (0, 2): 5, (2, 3): 5},
        )
        init = Attribute(lp=100, pathlen=0, comms=0, med=0, rid=0, as_path=())
        return SrpInstance(
            topology=topo, schema=schema, init_attr=init, policy=policy,
            level=AbstractionLevel(Protocol.OSPF, Level.FULL),
        )

    def test_min_cost_route_selected(self):
        inst = self._instance()
        models, vt = verifier.enumerate_stable_models(inst)
        assert len(models) == 1
        dec = vt.decode(models[0].values)
        assert dec.tree[3] == 1  # the weight-2 path wins over weight-10

    def test_matches_oracle(self):
        inst = self._instance()
        sols = oracle.enumerate_solutions(inst, inst.level)
        assert len(sols) == 1
        assert sols[0].tree()[3] == 1
        assert sols[0].labeling[3].pathlen == 2

    def test_star_level_allows_both_sides(self):
        from acorn.srp import AbstractionLevel, Level, Protocol

        inst = self._instance().at_level(AbstractionLevel(Protocol.OSPF, Level.STAR))
        models, vt = verifier.enumerate_stable_models(inst)
        assert {vt.decode(m.values).tree[3] for m in models} == {1, 2}


class TestHasRouteBlocks:
    def test_standard_rank_refutes_cycles(self):
        text = "NODES d a b c\nEDGES d->a a->b b->c c->a\nDEST d\n"
        inst = load(text)
        enc = encode(inst)
        topo = inst.topology
        for v, u in (("a", "b"), ("b", "c"), ("c", "a")):
            enc.system.add(F.BoolVar(f"re_{topo.node_id(v)}_{topo.node_id(u)}"))
        out = bridge.solve(enc.system, bridge.default_config())
        assert out.is_unsat

    def test_dest_only_rank(self):
        enc = encode(load("NODES d\nDEST d\n"))
        assert "rank_0" in enc.system.variables
        assert F.BoolVar("hasroute_0") in enc.system.assertions

    def test_graph_backend_uses_reaches(self):
        inst = five_node()
        enc = encode(inst, backend=GRAPH)
        assert enc.system.has_reaches()
        assert enc.system.graph_nodes == 5
        assert len(enc.system.graph_edges) == 7
        assert not any(n.startswith("rank_") for n in enc.system.variables)

    def test_standard_backend_never_emits_reaches(self):
        enc = encode(five_node())
        assert not enc.system.has_reaches()
        to_smt2(enc.system)  # must not raise


class TestPathRegex:
    def test_edge_then_nodes(self):
        text = "NODES d a b c e\nEDGES d->a a->b b->c c->e\nDEST d\n"
        inst = load(text)
        enc = encode(inst, backend=GRAPH)
        topo = inst.topology
        a, b = topo.node_id("a"), topo.node_id("b")
        c, e = topo.node_id("c"), topo.node_id("e")
        got = encode_path_regex(PathPattern(edge=(a, b), nodes=(c, e)), enc.vars)
        assert got == F.And((
            F.BoolVar(f"re_{a}_{b}"),
            F.Reaches(b, c),
            F.Reaches(c, e),
        ))

    def test_single_node_anchors_at_dest(self):
        inst = five_node()
        enc = encode(inst, backend=GRAPH)
        c = inst.topology.node_id("r4")
        got = encode_path_regex(PathPattern(nodes=(c,)), enc.vars)
        assert got == F.Reaches(inst.topology.dest, c)

    def test_empty_pattern_is_true(self):
        enc = encode(five_node(), backend=GRAPH)
        assert encode_path_regex(PathPattern(), enc.vars) == F.TRUE

    def test_anchor_closes_the_chain(self):
        inst = five_node()
        enc = encode(inst, backend=GRAPH)
        topo = inst.topology
        c, anchor = topo.node_id("r3"), topo.node_id("r5")
        got = encode_path_regex(PathPattern(nodes=(c,)), enc.vars, anchor=anchor)
        assert got == F.And((F.Reaches(topo.dest, c), F.Reaches(c, anchor)))

    def test_standard_backend_refuses(self):
        enc = encode(five_node())
        with pytest.raises(UnsupportedFeatureError):
            encode_path_regex(PathPattern(nodes=(1,)), enc.vars)

    def test_regex_policy_needs_graph_backend(self):
        inst = benchgen.fattree_instance(
            benchgen.FatTreeParams(k=4, policy=benchgen.ISOLATION_REGEX)
        )
        with pytest.raises(UnsupportedFeatureError):
            encode(inst, backend=STANDARD)


def _solution_trees(inst, backend=STANDARD):
    models, vt = verifier.enumerate_stable_models(inst, backend=backend,
                                                  cfg=bridge.default_config(backend))
    return {tuple(sorted(vt.decode(m.values).tree.items())) for m in models}, vt


class TestModelTreeInvariant:
    def test_true_edges_form_tree_spanning_routed(self):
        inst = five_node()
        models, vt = verifier.enumerate_stable_models(inst)
        assert models
        topo = inst.topology
        for m in models:
            dec = vt.decode(m.values)
            # every routed node's chosen chain must lead to the destination
            for u, parent in dec.tree.items():
                if parent is None:
                    assert not dec.hasroute[u]
                    continue
                assert dec.hasroute[u]
                seen = set()
                x = u
                while x != topo.dest:
                    assert x not in seen
                    seen.add(x)
                    x = dec.tree[x]
            # and the re bits match the tree
            for (v, u), var in vt.re.items():
                expected = dec.tree.get(u) == v if u != topo.dest else False
                assert bool(m.values[var.name]) == expected

    def test_simplification_preserves_model_set(self):
        """Inlining constant drop guards must not change the solution set."""
        for seed in (2, 3, 5, 11, 14):
            inst = oracle.random_instance(seed, max_nodes=5)
            enc_a = encode(inst, simplify=True)
            enc_b = encode(inst, simplify=False)
            cfg = bridge.default_config()
            models_a = bridge.enumerate_models(enc_a.system, cfg, limit=256)
            models_b = bridge.enumerate_models(enc_b.system, cfg, limit=256)
            trees_a = {
                tuple(sorted(enc_a.vars.decode(m.values).tree.items()))
                for m in models_a
            }
            trees_b = {
                tuple(sorted(enc_b.vars.decode(m.values).tree.items()))
                for m in models_b
            }
            assert trees_a == trees_b

    def test_concrete_models_are_subset_of_abstract(self):
        """Every concrete stable tree survives at every coarser level."""
        for seed in (1, 4, 7):
            inst = oracle.random_instance(seed, max_nodes=5)
            concrete, _ = _solution_trees(inst.at_level(FULL))
            for level in (STAR, LP):
                coarse, _ = _solution_trees(inst.at_level(level))
                assert concrete <= coarse


class TestEmission:
    def test_deterministic_output(self):
        inst = five_node()
        assert to_smt2(encode(inst).system) == to_smt2(encode(inst).system)

    def test_reaches_refused_by_smt2(self):
        enc = encode(five_node(), backend=GRAPH)
        with pytest.raises(EmitError):
            to_smt2(enc.system)

    def test_blocking_clause_excludes_model(self):
        inst = five_node()
        enc = encode(inst)
        cfg = bridge.default_config()
        out = bridge.solve(enc.system, cfg)
        assert out.is_sat
        enc.system.add(blocking_clause(enc.vars, out.model.values))
        out2 = bridge.solve(enc.system, cfg)
        if out2.is_sat:
            assert any(
                out2.model.values[v.name] != out.model.values[v.name]
                for v in enc.vars.nchoice.values()
            )
