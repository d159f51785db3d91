"""Solver subprocess driving: outcomes, model parsing, enumeration."""

import pytest

from acorn import formula as F
from acorn import benchgen, bridge, verifier
from acorn.air import parse_air
from acorn.bridge import SolverConfig, default_config, enumerate_models, solve
from acorn.encoder import encode
from acorn.srp import FULL, STAR, SrpInstance


def load(text, level=STAR):
    topo, policy, init, failed = parse_air(text)
    return SrpInstance(
        topology=topo, schema=policy.schema, init_attr=init, policy=policy,
        level=level, failed_edges=failed,
    )


def false_system():
    sys_ = F.ConstraintSystem()
    sys_.declare_bool("a")
    sys_.add(F.band(F.BoolVar("a"), F.bnot(F.BoolVar("a"))))
    return sys_


class TestSolve:
    def test_trivially_unsat(self):
        out = solve(false_system(), default_config())
        assert out.is_unsat

    def test_unsat_is_stable_across_calls(self):
        sys_ = false_system()
        cfg = default_config()
        assert solve(sys_, cfg).is_unsat
        assert solve(sys_, cfg).is_unsat

    def test_sat_models_every_declared_variable(self):
        sys_ = F.ConstraintSystem()
        sys_.declare_bool("a")
        sys_.declare_bv("v", 3)
        sys_.add(F.BoolVar("a"))
        out = solve(sys_, default_config())
        assert out.is_sat
        assert set(out.model.values) == {"a", "v"}
        assert out.model["a"] is True

    def test_diamond_reachability_unsat(self):
        """The negated reachability query on the diamond has no model."""
        inst = load(benchgen.correlated_tags_example())
        spec = verifier.reach(inst.topology.node_id("r7"))
        enc = encode(inst, prop=spec)
        enc.system.add(verifier.encode_property(spec, enc.vars))
        out = solve(enc.system, default_config())
        assert out.is_unsat

    def test_buggy_fattree_sat_with_decodable_tree(self):
        inst = benchgen.fattree_instance(
            benchgen.FatTreeParams(k=4, policy=benchgen.VALLEY_FREE_BUGGY)
        )
        spec = verifier.reach(inst.topology.node_id("tor_3_1"))
        enc = encode(inst, prop=spec)
        enc.system.add(verifier.encode_property(spec, enc.vars))
        out = solve(enc.system, default_config())
        assert out.is_sat
        dec = enc.vars.decode(out.model.values)
        assert dec.tree[inst.topology.node_id("tor_3_1")] is None

    def test_timeout_outcome(self):
        sys_ = false_system()
        cfg = SolverConfig(command="sleep 30", timeout=0.3)
        out = solve(sys_, cfg)
        assert out.status == "timeout"

    def test_missing_binary(self):
        out = solve(false_system(), SolverConfig(command="no-such-solver-xyz {file}"))
        assert out.status == "error"
        assert "missing" in out.detail

    def test_env_override_is_honored(self, monkeypatch):
        monkeypatch.setenv(bridge.ENV_SOLVER, "definitely-not-a-solver {file}")
        cfg = default_config()
        assert cfg.command.startswith("definitely-not-a-solver")

    def test_bad_timeout_rejected(self):
        with pytest.raises(ValueError):
            SolverConfig(command="x {file}", timeout=0)


class TestModelParsing:
    def test_wrapped_multiline_model_block(self):
        """Some solvers wrap the model and split define-funs over lines."""
        from acorn.bridge import _parse_smt2_output

        sys_ = F.ConstraintSystem()
        sys_.declare_bool("a")
        sys_.declare_bv("v", 3)
        out = "sat\n(model\n  (define-fun a () Bool\n    true)\n" \
              "  (define-fun v () (_ BitVec 3)\n    #b101)\n)\n"
        parsed = _parse_smt2_output(out, sys_)
        assert parsed.is_sat
        assert parsed.model["a"] is True and parsed.model["v"] == 5

    def test_underscore_bv_values(self):
        from acorn.bridge import _parse_smt2_output

        sys_ = F.ConstraintSystem()
        sys_.declare_bv("v", 4)
        out = "sat\n((define-fun v () (_ BitVec 4) (_ bv9 4)))\n"
        parsed = _parse_smt2_output(out, sys_)
        assert parsed.model["v"] == 9

    def test_graph_witness_decodes_bitvectors(self):
        """A satisfying graph-backend run must decode attribute vectors."""
        inst = benchgen.fattree_instance(
            benchgen.FatTreeParams(k=4, policy=benchgen.VALLEY_FREE)
        )
        u = inst.topology.node_id("tor_3_1")
        spec = verifier.comm_equals(u, 2)
        enc = encode(inst, backend="graph", prop=spec)
        enc.system.add(verifier.encode_property(spec, enc.vars))
        out = solve(enc.system, default_config(backend="graph"))
        assert out.is_sat
        dec = enc.vars.decode(out.model.values)
        assert dec.attrs[u].comms == 2


class TestVerifyTimeout:
    def test_unknown_on_timeout(self):
        inst = benchgen.fattree_instance(
            benchgen.FatTreeParams(k=4, policy=benchgen.VALLEY_FREE)
        )
        spec = verifier.reach(inst.topology.node_id("tor_3_1"))
        cfg = default_config(timeout=0.05)
        v = verifier.verify(inst, spec, cfg=cfg)
        assert v.status is verifier.VerdictStatus.UNKNOWN
        assert "timeout" in v.detail


class TestEnumerate:
    def test_star_sees_both_trees(self):
        inst = load(benchgen.tag_preference_example())
        enc = encode(inst)
        models = enumerate_models(enc.system, default_config(), limit=10)
        assert len(models) == 2
        r4 = inst.topology.node_id("r4")
        parents = {enc.vars.decode(m.values).tree[r4] for m in models}
        assert parents == {inst.topology.node_id("r2"), inst.topology.node_id("r3")}

    def test_concrete_sees_exactly_one(self):
        inst = load(benchgen.tag_preference_example(), level=FULL)
        enc = encode(inst)
        models = enumerate_models(enc.system, default_config(), limit=10)
        assert len(models) == 1
        r4 = inst.topology.node_id("r4")
        assert enc.vars.decode(models[0].values).tree[r4] == inst.topology.node_id("r3")

    def test_limit_respected(self):
        inst = load(benchgen.tag_preference_example())
        enc = encode(inst)
        models = enumerate_models(enc.system, default_config(), limit=1)
        assert len(models) == 1

    def test_no_repeats(self):
        inst = load(benchgen.correlated_tags_example())
        enc = encode(inst)
        models = enumerate_models(enc.system, default_config(), limit=64)
        seen = set()
        for m in models:
            key = tuple(sorted(enc.vars.decode(m.values).tree.items()))
            assert key not in seen
            seen.add(key)

    def test_limit_must_be_positive(self):
        with pytest.raises(ValueError):
            enumerate_models(false_system(), default_config(), limit=0)
