"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
complete.  Tolerances and sizes are pinned here, not configurable.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from acorn import benchgen, bridge, oracle, verifier
from acorn.air import parse_air
from acorn.encoder import encode
from acorn.policy import (
    Action,
    ActionKind,
    EdgePolicy,
    Match,
    MatchActionRule,
    MatchKind,
    PolicyIR,
)
from acorn.srp import FULL, LP, STAR, SrpInstance
from acorn.verifier import (
    RefinePolicy,
    VerdictStatus,
    comm_equals,
    no_transit,
    reach,
    reach_all,
    validate_counterexample,
    verify,
)


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f" -- {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


def load(text, level=STAR, name="inst"):
    topo, policy, init, failed = parse_air(text)
    return SrpInstance(
        topology=topo, schema=policy.schema, init_attr=init, policy=policy,
        level=level, failed_edges=failed, name=name,
    )


def test_criterion_1_soundness_suite():
    """>= 500 seeded instances: zero over-approximation violations, and
    verified-at-any-level implies verified-at-concrete, by enumeration."""
    t0 = time.time()
    overapprox_violations = 0
    escalation_violations = 0
    for seed in range(500):
        inst = oracle.random_instance(seed, max_nodes=8)
        if not oracle.check_overapprox(inst).ok:
            overapprox_violations += 1
        if oracle.soundness_escalation_check(inst):
            escalation_violations += 1
    elapsed = time.time() - t0
    _report(
        "criterion 1: soundness/over-approximation (500 instances)",
        overapprox_violations == 0 and escalation_violations == 0 and elapsed < 600,
        f"{overapprox_violations} containment violations, "
        f"{escalation_violations} escalation violations, {elapsed:.0f}s",
    )


def test_criterion_2_encoding_faithfulness():
    """>= 100 instances: decoded model labelings equal the oracle's at the
    coarsest, preference-only, and concrete levels.  Zero mismatches."""
    seeds = range(1000, 1100)
    levels = (STAR, LP, FULL)
    cfg = bridge.default_config()

    def one(seed):
        inst = oracle.random_instance(seed, max_nodes=6)
        by_level = oracle.enumerate_solutions_at(inst, levels)
        bad = []
        for level in levels:
            ii = inst.at_level(level)
            enc = encode(ii)
            models = bridge.enumerate_models(enc.system, cfg, limit=4000)
            decoded = verifier.decode_labelings(ii, models, enc.vars)
            odec = oracle.labeling_set(
                by_level[level], fields=enc.vars.schema.active_fields
            )
            otrees = {tuple(s.choices) for s in by_level[level]}
            mtrees = {
                tuple(sorted(enc.vars.decode(m.values).tree.items()))
                for m in models
            }
            if decoded != odec or mtrees != otrees:
                bad.append((seed, level.level.value, len(decoded), len(odec)))
        return bad

    t0 = time.time()
    mismatches = []
    with ThreadPoolExecutor(max_workers=8) as pool:
        for bad in pool.map(one, seeds):
            mismatches.extend(bad)
    _report(
        "criterion 2: encoding faithfulness (100 instances x 3 levels)",
        not mismatches,
        f"{len(mismatches)} mismatches, {time.time() - t0:.0f}s"
        + (f", first: {mismatches[0]}" if mismatches else ""),
    )


def test_criterion_3_preference_scenario_with_refinement():
    """Base network verifies at the coarsest level; the drop-variant is
    spurious there (naming the join router) and verifies one level up."""
    inst = load(benchgen.tag_preference_example())
    r4 = inst.topology.node_id("r4")
    r5 = inst.topology.node_id("r5")
    base = verify(inst, reach(r5))
    ok_base = base.status is VerdictStatus.VERIFIED and base.level == STAR

    variant = load(benchgen.tag_preference_variant())
    v = verify(variant, reach(r5))
    ok_variant = (
        v.status is VerdictStatus.VERIFIED
        and v.level == LP
        and len(v.refinements) == 1
        and v.refinements[0][0] == STAR
        and v.refinements[0][1] == r4
    )
    _report(
        "criterion 3: preference example + refinement",
        ok_base and ok_variant,
        f"base {base.status.value}@{base.level.level.value}, "
        f"variant {v.status.value}@{v.level.level.value} "
        f"(spurious node {variant.topology.name(v.refinements[0][1]) if v.refinements else '-'})",
    )


def test_criterion_4_path_sensitive_diamond():
    inst = load(benchgen.correlated_tags_example())
    v = verify(inst, reach(inst.topology.node_id("r7")))
    ok = v.status is VerdictStatus.VERIFIED and v.level == STAR and not v.refinements
    _report(
        "criterion 4: correlated-filter diamond at the coarsest level",
        ok,
        f"{v.status.value}@{v.level.level.value}, {len(v.refinements)} refinements",
    )


def test_criterion_5_fattree_scale_and_trend():
    times = {}
    for k, policy, budget in (
        (10, benchgen.SHORTEST_PATH, 60.0),
        (10, benchgen.VALLEY_FREE, 60.0),
        (20, benchgen.SHORTEST_PATH, 600.0),
        (20, benchgen.VALLEY_FREE, 600.0),
    ):
        inst = benchgen.fattree_instance(benchgen.FatTreeParams(k=k, policy=policy))
        target = inst.topology.node_id(f"tor_{k - 1}_{k // 2 - 1}")
        t0 = time.time()
        v = verify(inst, reach(target),
                   cfg=bridge.default_config(timeout=budget))
        dt = time.time() - t0
        times[(k, policy)] = (v.status, dt, budget)

    ok_scale = all(
        status is VerdictStatus.VERIFIED and dt < budget
        for status, dt, budget in times.values()
    )

    # trend at the largest size where both levels complete: coarsest at
    # least twice as fast as concrete
    inst = benchgen.fattree_instance(
        benchgen.FatTreeParams(k=10, policy=benchgen.SHORTEST_PATH)
    )
    target = inst.topology.node_id("tor_9_4")
    cfg = bridge.default_config(timeout=300)
    t0 = time.time()
    v_star = verify(inst, reach(target), cfg=cfg)
    t_star = time.time() - t0
    t0 = time.time()
    v_full = verify(inst.at_level(FULL), reach(target), cfg=cfg)
    t_full = time.time() - t0
    speedup = t_full / max(t_star, 1e-9)
    ok_trend = (
        v_star.status is VerdictStatus.VERIFIED
        and v_full.status is VerdictStatus.VERIFIED
        and speedup >= 2.0
    )
    detail = ", ".join(
        f"k={k} {pol}: {status.value} {dt:.1f}s/{int(budget)}s"
        for (k, pol), (status, dt, budget) in times.items()
    )
    _report(
        "criterion 5: fattree scale + abstraction speedup",
        ok_scale and ok_trend,
        detail + f"; speedup {speedup:.1f}x (need >= 2)",
    )


def test_criterion_6_buggy_valley_free_violations():
    results = []
    for k in (4, 8):
        inst = benchgen.fattree_instance(
            benchgen.FatTreeParams(k=k, policy=benchgen.VALLEY_FREE_BUGGY)
        )
        target = inst.topology.node_id(f"tor_{k - 1}_{k // 2 - 1}")
        v = verify(inst, reach(target))
        genuine = (
            v.status is VerdictStatus.VIOLATED
            and validate_counterexample(inst, v.counterexample).genuine
        )
        results.append((k, v.status, genuine))
    ok = all(status is VerdictStatus.VIOLATED and genuine
             for _, status, genuine in results)
    _report(
        "criterion 6: buggy valley-free counterexamples (k=4, k=8)",
        ok,
        ", ".join(f"k={k}: {s.value} genuine={g}" for k, s, g in results),
    )


def test_criterion_7_valley_free_community_property():
    """The community-counter check: the negated property is unsatisfiable
    with the policy and satisfiable once the re-ascent drop is removed.
    Checked at the query level, as stated."""
    cfg = bridge.default_config()
    results = []
    for k in (4, 6, 8, 10, 12):
        target_name = f"tor_{k - 1}_1"

        def query(aggr_drop):
            inst = benchgen.fattree_instance(
                benchgen.FatTreeParams(
                    k=k, policy=benchgen.VALLEY_FREE, aggr_drop=aggr_drop
                )
            )
            spec = comm_equals(inst.topology.node_id(target_name), 3)
            enc = encode(inst, prop=spec)
            enc.system.add(verifier.encode_property(spec, enc.vars))
            return bridge.solve(enc.system, cfg).status

        results.append((k, query(True), query(False)))
    ok = all(with_drop == "unsat" and without == "sat"
             for _, with_drop, without in results)
    _report(
        "criterion 7: community counter stays below 3 (k=4..12)",
        ok,
        ", ".join(f"k={k}: {a}/{b}" for k, a, b in results),
    )


def test_criterion_8_wan_policies():
    sizes = [22, 23, 27, 32, 36, 41, 42, 47, 70, 79]
    worst = 0.0
    failures = []
    for i, n in enumerate(sizes):
        topo, rels = benchgen.wan_topology(n, seed=100 + i)
        inst = benchgen.gao_rexford_instance(topo, rels, name=f"wan-{n}")
        for spec, label in ((reach_all(), "reach"), (no_transit(), "notransit")):
            t0 = time.time()
            v = verify(inst, spec)
            dt = time.time() - t0
            worst = max(worst, dt)
            if v.status is not VerdictStatus.VERIFIED or dt >= 5.0:
                failures.append((n, label, v.status.value, dt))
    _report(
        "criterion 8: customer/peer/provider WANs (10 topologies)",
        not failures,
        f"worst property time {worst:.2f}s (limit 5s)"
        + (f", failures: {failures}" if failures else ""),
    )


def _with_failures_as_drops(inst):
    policy = inst.policy
    eps = dict(policy.edge_policies)
    for e in inst.failed_edges:
        eps[e] = EdgePolicy(
            e, (MatchActionRule(Match(MatchKind.ALWAYS), (Action(ActionKind.DROP),)),)
        )
    forced = PolicyIR(
        schema=policy.schema, edge_policies=eps,
        relationships=policy.relationships, edge_weights=policy.edge_weights,
    )
    return replace(inst, policy=forced, failed_edges=frozenset())


def test_criterion_9_failure_modeling():
    """Failed links behave exactly like transfers forced to drop: identical
    oracle solution sets at every level, identical verdicts."""
    levels = oracle.BGP_LEVELS
    oracle_checks = oracle_mismatches = 0
    for seed in range(200):
        inst = oracle.random_instance(seed, max_nodes=7)
        if not inst.failed_edges:
            continue
        other = _with_failures_as_drops(inst)
        a = oracle.enumerate_solutions_at(inst, levels)
        b = oracle.enumerate_solutions_at(other, levels)
        for level in levels:
            oracle_checks += 1
            if oracle.labeling_set(a[level]) != oracle.labeling_set(b[level]):
                oracle_mismatches += 1

    verdict_checks = verdict_mismatches = 0
    for seed in range(60):
        inst = oracle.random_instance(seed, max_nodes=6)
        if not inst.failed_edges:
            continue
        other = _with_failures_as_drops(inst)
        target = (inst.topology.dest + 1) % inst.topology.n
        for level in (STAR, FULL):
            va = verify(inst.at_level(level), reach(target),
                        refine=RefinePolicy(mode="none"))
            vb = verify(other.at_level(level), reach(target),
                        refine=RefinePolicy(mode="none"))
            verdict_checks += 1
            if va.status is not vb.status:
                verdict_mismatches += 1
    ok = (
        oracle_mismatches == 0 and verdict_mismatches == 0
        and oracle_checks >= 50 and verdict_checks >= 10
    )
    _report(
        "criterion 9: failure modeling equals forced drops",
        ok,
        f"{oracle_checks} oracle checks, {verdict_checks} verdict checks, "
        f"{oracle_mismatches + verdict_mismatches} mismatches",
    )
