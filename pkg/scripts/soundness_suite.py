#!/usr/bin/env python3
"""Exhaustive soundness run over the seeded random corpus.

Checks, by enumeration: every concrete stable state survives at every coarser
selection order, and a property verified at any level stays verified at the
concrete one.  Optionally cross-checks the solver pipeline on a subset.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from acorn import oracle  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=500)
    ap.add_argument("--max-nodes", type=int, default=8)
    args = ap.parse_args()

    t0 = time.time()
    containment = escalation = zero_solutions = 0
    for seed in range(args.seeds):
        inst = oracle.random_instance(seed, max_nodes=args.max_nodes)
        report = oracle.check_overapprox(inst)
        if not report.ok:
            containment += 1
            print(f"containment violation at seed {seed}: {report.violations[:1]}")
        if report.concrete_solutions == 0:
            zero_solutions += 1
        if oracle.soundness_escalation_check(inst):
            escalation += 1
            print(f"escalation violation at seed {seed}")
    print(
        f"{args.seeds} instances in {time.time() - t0:.0f}s: "
        f"{containment} containment violations, {escalation} escalation violations "
        f"({zero_solutions} instances without stable states)"
    )
    return 0 if containment == escalation == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
