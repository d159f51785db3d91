"""Command-line front door: generate, verify, oracle-check, benchmark.

Exit codes for ``verify``: 0 verified, 1 violated (validated counterexample),
2 anything else (errors, unknown, unrefined false positives).  ``bench``
writes one CSV row per (instance, property, level, backend) sweep point.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import benchgen
from .air import AirParseError, AirSemanticError, parse_air
from .bridge import GRAPH, STANDARD, default_config
from .encoder import UnsupportedFeatureError
from .policy import PathPattern
from .srp import (
    AbstractionLevel,
    Level,
    Protocol,
    SrpInstance,
)
from .verifier import (
    PropertyError,
    PropertySpec,
    RefinePolicy,
    VerdictStatus,
    comm_equals,
    isolation,
    no_transit,
    path_regex_holds,
    reach,
    reach_all,
    verify,
)
from .oracle import check_overapprox, enumerate_solutions, labeling_set, random_instance

_LEVELS = {
    "star": Level.STAR,
    "lp": Level.LP,
    "lp-pathlen": Level.LP_PATHLEN,
    "lp-pathlen-med": Level.LP_PATHLEN_MED,
    "concrete": Level.FULL,
}

CSV_FIELDS = [
    "name", "nodes", "edges", "property", "level", "backend",
    "status", "seconds", "refinements",
]


def load_instance(path: str, level: str = "star") -> SrpInstance:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    topo, policy, init, failed = parse_air(text)
    lv = AbstractionLevel(Protocol.BGP, _LEVELS[level])
    return SrpInstance(
        topology=topo, schema=policy.schema, init_attr=init, policy=policy,
        level=lv, failed_edges=failed, name=path,
    )


def parse_property(text: str, topo) -> PropertySpec:
    """Mini-syntax: reach:NODE | reach:* | isolate:NODE | notransit |
    commeq:NODE=V | pathregex:NODE=a->b,c,d"""
    if text == "notransit":
        return no_transit()
    if ":" not in text:
        raise PropertyError(f"cannot parse property {text!r}")
    kind, rest = text.split(":", 1)
    if kind == "reach":
        if rest in ("*", "all"):
            return reach_all()
        return reach(topo.node_id(rest))
    if kind == "isolate":
        return isolation(topo.node_id(rest))
    if kind == "commeq":
        node, _, value = rest.partition("=")
        return comm_equals(topo.node_id(node), int(value))
    if kind == "pathregex":
        node, _, pat = rest.partition("=")
        edge = None
        nodes = []
        for i, item in enumerate(s for s in pat.split(",") if s):
            if "->" in item:
                a, _, b = item.partition("->")
                edge = (topo.node_id(a), topo.node_id(b))
            else:
                nodes.append(topo.node_id(item))
        return path_regex_holds(
            topo.node_id(node), PathPattern(edge=edge, nodes=tuple(nodes))
        )
    raise PropertyError(f"unknown property kind {kind!r}")


def _fmt_tree(tree: dict, topo) -> str:
    parts = []
    for u in sorted(tree):
        v = tree[u]
        parts.append(f"{topo.name(u)}<-{topo.name(v) if v is not None else 'none'}")
    return " ".join(parts)


def cmd_verify(args) -> int:
    try:
        inst = load_instance(args.file, args.abs)
    except (OSError, AirParseError, AirSemanticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        spec = parse_property(args.prop, inst.topology)
        spec.validate(inst)
    except (PropertyError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    refine = RefinePolicy(mode=args.refine, max_blocking=args.max_blocking)
    cfg = default_config(args.backend, timeout=args.timeout)
    try:
        verdict = verify(inst, spec, cfg=cfg, refine=refine, backend=args.backend)
    except UnsupportedFeatureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for lv, node, evidence in verdict.refinements:
        where = inst.topology.name(node) if node is not None else "-"
        print(f"refined: spurious at {lv.level.value} (node {where}: {evidence})")
    if verdict.status is VerdictStatus.VERIFIED:
        print(f"Verified ({verdict.level.level.value}, {verdict.wall_time:.2f}s)")
        return 0
    if verdict.status is VerdictStatus.VIOLATED:
        print(f"Violated ({verdict.level.level.value}, {verdict.wall_time:.2f}s)")
        print("counterexample tree:", _fmt_tree(verdict.counterexample.tree, inst.topology))
        return 1
    print(f"{verdict.status.value} ({verdict.detail})")
    return 2


def cmd_gen(args) -> int:
    if args.family == "fattree":
        params = benchgen.FatTreeParams(
            k=args.k, policy=args.policy, aggr_drop=not args.no_aggr_drop
        )
        text = benchgen.gen_fattree(params)
    elif args.family == "wan":
        topo, rels = benchgen.wan_topology(args.nodes, args.seed)
        text = benchgen.gen_gao_rexford(topo, rels)
    elif args.family == "bgpstream":
        topo, rels = benchgen.bgpstream_like_topology(args.nodes, args.seed)
        text = benchgen.gen_gao_rexford(topo, rels)
    else:
        print(f"error: unknown family {args.family!r}", file=sys.stderr)
        return 2
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    return 0


def cmd_oracle(args) -> int:
    from .srp import FULL, STAR
    from .verifier import decode_labelings, enumerate_stable_models

    t0 = time.time()
    violations = 0
    zero_solutions = 0
    for seed in range(args.seeds):
        inst = random_instance(seed, max_nodes=args.max_nodes)
        rep = check_overapprox(inst)
        if not rep.ok:
            violations += 1
            print(f"violation: seed {seed} {rep.violations[:1]}")
        if rep.concrete_solutions == 0:
            zero_solutions += 1
    print(f"over-approximation: {args.seeds} instances, {violations} violations "
          f"({zero_solutions} without stable states) [{time.time() - t0:.1f}s]")

    mismatches = 0
    checked = 0
    if args.faithful:
        t0 = time.time()
        seed = 0
        while checked < args.faithful and seed < args.faithful * 20:
            inst = random_instance(seed, max_nodes=min(args.max_nodes, 6))
            seed += 1
            if inst.topology.n > 6:
                continue
            checked += 1
            for lv in (STAR, FULL):
                ii = inst.at_level(lv)
                models, vt = enumerate_stable_models(ii)
                dec = decode_labelings(ii, models, vt)
                olabs = labeling_set(
                    enumerate_solutions(ii, lv), fields=vt.schema.active_fields
                )
                if dec != olabs:
                    mismatches += 1
                    print(f"faithfulness mismatch: seed {seed - 1} {lv.level}")
        print(f"encoding faithfulness: {checked} instances, {mismatches} mismatches "
              f"[{time.time() - t0:.1f}s]")
    return 0 if (violations == 0 and mismatches == 0) else 2


@dataclass
class RunRecord:
    name: str
    nodes: int
    edges: int
    property: str
    level: str
    backend: str
    status: str
    seconds: float
    refinements: int

    def row(self) -> list:
        return [self.name, self.nodes, self.edges, self.property, self.level,
                self.backend, self.status, f"{self.seconds:.3f}", self.refinements]


def _bench_point(k: int, policy: str, level_name: str, backend: str, timeout: float) -> RunRecord:
    inst = benchgen.fattree_instance(benchgen.FatTreeParams(k=k, policy=policy))
    inst = inst.at_level(AbstractionLevel(Protocol.BGP, _LEVELS[level_name]))
    half = k // 2
    target = inst.topology.node_id(f"tor_{k - 1}_{half - 1}")
    spec = reach(target)
    cfg = default_config(backend, timeout=timeout)
    t0 = time.time()
    try:
        verdict = verify(inst, spec, cfg=cfg, backend=backend)
        status = verdict.status.value
        refinements = len(verdict.refinements)
    except UnsupportedFeatureError:
        status, refinements = "unsupported", 0
    return RunRecord(
        name=inst.name, nodes=inst.topology.n, edges=len(inst.topology.edges),
        property=spec.describe(inst.topology), level=level_name, backend=backend,
        status=status, seconds=time.time() - t0, refinements=refinements,
    )


def cmd_bench(args) -> int:
    ks = [int(x) for x in args.k.split(",")]
    levels = args.levels.split(",")
    policies = args.policies.split(",")
    backends = args.backends.split(",")
    points = [
        (k, pol, lv, be)
        for k in ks for pol in policies for lv in levels for be in backends
    ]
    records = []
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        futures = [
            pool.submit(_bench_point, k, pol, lv, be, args.timeout)
            for k, pol, lv, be in points
        ]
        for fut in futures:
            rec = fut.result()
            records.append(rec)
            print(f"{rec.name} {rec.level}/{rec.backend}: {rec.status} {rec.seconds:.1f}s")
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for rec in records:
            writer.writerow(rec.row())
    print(f"wrote {args.out} ({len(records)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="acorn",
        description="verify stable-routing properties of control-plane policies",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="verify a property over an AIR instance")
    v.add_argument("file")
    v.add_argument("--prop", required=True,
                   help="reach:NODE | reach:* | isolate:NODE | notransit | "
                        "commeq:NODE=V | pathregex:NODE=a->b,c,d")
    v.add_argument("--abs", default="star", choices=sorted(_LEVELS),
                   help="starting abstraction level")
    v.add_argument("--backend", default=STANDARD, choices=[STANDARD, GRAPH])
    v.add_argument("--refine", default="escalate", choices=["escalate", "block", "none"])
    v.add_argument("--max-blocking", type=int, default=32)
    v.add_argument("--timeout", type=float, default=600.0)
    v.set_defaults(fn=cmd_verify)

    g = sub.add_parser("gen", help="generate a benchmark instance as AIR")
    g.add_argument("family", choices=["fattree", "wan", "bgpstream"])
    g.add_argument("--k", type=int, default=4, help="fattree arity (even, >= 4)")
    g.add_argument("--policy", default=benchgen.SHORTEST_PATH,
                   choices=[benchgen.SHORTEST_PATH, benchgen.VALLEY_FREE,
                            benchgen.VALLEY_FREE_BUGGY, benchgen.ISOLATION_REGEX])
    g.add_argument("--no-aggr-drop", action="store_true",
                   help="valley-free without the re-ascent drop rule")
    g.add_argument("--nodes", type=int, default=22, help="wan/bgpstream size")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("-o", "--out", default="-")
    g.set_defaults(fn=cmd_gen)

    o = sub.add_parser("oracle", help="run the exhaustive-oracle check suites")
    o.add_argument("--seeds", type=int, default=500)
    o.add_argument("--max-nodes", type=int, default=8)
    o.add_argument("--faithful", type=int, default=0,
                   help="also cross-check this many instances against the solver")
    o.set_defaults(fn=cmd_oracle)

    b = sub.add_parser("bench", help="sweep fattree sizes and write a CSV")
    b.add_argument("--k", default="4,6,8")
    b.add_argument("--levels", default="star")
    b.add_argument("--policies", default=benchgen.SHORTEST_PATH)
    b.add_argument("--backends", default=STANDARD)
    b.add_argument("--timeout", type=float, default=600.0)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", default="bench.csv")
    b.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
