#!/usr/bin/env python3
"""Run reachability and no-transit over the annotated WAN topology set.

Ten synthetic customer/peer/provider topologies at the published size points
(22..79 nodes), each checked at the coarsest abstraction.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from acorn import benchgen  # noqa: E402
from acorn.verifier import no_transit, reach_all, verify  # noqa: E402

SIZES = [22, 23, 27, 32, 36, 41, 42, 47, 70, 79]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed-base", type=int, default=100)
    args = ap.parse_args()

    failures = 0
    for i, n in enumerate(SIZES):
        topo, rels = benchgen.wan_topology(n, seed=args.seed_base + i)
        inst = benchgen.gao_rexford_instance(topo, rels, name=f"wan-{n}")
        line = [f"wan-{n:>3}"]
        for spec, label in ((reach_all(), "reach"), (no_transit(), "no-transit")):
            t0 = time.time()
            verdict = verify(inst, spec)
            line.append(f"{label}={verdict.status.value} ({time.time() - t0:.2f}s)")
            if not verdict.verified:
                failures += 1
        print("  ".join(line))
    print("all verified" if failures == 0 else f"{failures} failures")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
