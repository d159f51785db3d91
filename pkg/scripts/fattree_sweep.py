#!/usr/bin/env python3
"""Sweep FatTree sizes and policies, recording verification times to CSV.

Mirrors the data-center scaling experiment: reachability from the first pod
to the last, per abstraction level and policy.  Example:

    python scripts/fattree_sweep.py --k 4,6,8,10 --levels star,concrete \
        --policies shortest-path,valley-free --out fattree.csv
"""

import argparse
import csv
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from acorn import benchgen, bridge  # noqa: E402
from acorn.cli import CSV_FIELDS, _LEVELS  # noqa: E402
from acorn.srp import AbstractionLevel, Protocol  # noqa: E402
from acorn.verifier import reach, verify  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", default="4,6,8,10")
    ap.add_argument("--levels", default="star,concrete")
    ap.add_argument("--policies", default=benchgen.SHORTEST_PATH)
    ap.add_argument("--timeout", type=float, default=600.0)
    ap.add_argument("--out", default="fattree.csv")
    args = ap.parse_args()

    rows = []
    for k in (int(x) for x in args.k.split(",")):
        for policy in args.policies.split(","):
            inst0 = benchgen.fattree_instance(benchgen.FatTreeParams(k=k, policy=policy))
            target = inst0.topology.node_id(f"tor_{k - 1}_{k // 2 - 1}")
            for level_name in args.levels.split(","):
                inst = inst0.at_level(AbstractionLevel(Protocol.BGP, _LEVELS[level_name]))
                t0 = time.time()
                verdict = verify(
                    inst, reach(target),
                    cfg=bridge.default_config(timeout=args.timeout),
                )
                dt = time.time() - t0
                rows.append([
                    inst.name, inst.topology.n, len(inst.topology.edges),
                    f"reach:tor_{k - 1}_{k // 2 - 1}", level_name, "standard",
                    verdict.status.value, f"{dt:.3f}", len(verdict.refinements),
                ])
                print(f"k={k} {policy} {level_name}: {verdict.status.value} {dt:.1f}s")
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
