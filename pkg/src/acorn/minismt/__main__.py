"""CLI entry point: solve one SMT-LIB or graph-CNF file and print the result.

SMT-LIB mode prints ``sat``/``unsat`` plus a ``(get-model)`` block of
define-funs; graph mode prints a DIMACS-style ``s``/``v`` witness.
"""

from __future__ import annotations

import sys

from .bitblast import BitBlaster
from .core import Sat
from .gnf import solve_gnf
from .smtparse import parse_script


def _run_smt2(text: str) -> int:
    script = parse_script(text)
    sat = Sat()
    bb = BitBlaster(sat)
    for name, sort in script.sorts.items():
        bb.declare(name, sort)
    for a in script.assertions:
        bb.assert_term(a)
    if bb.reach_atoms:
        print("(error \"reaches atoms need the graph format\")")
        return 1
    if not script.check_sat:
        return 0
    if sat.solve():
        print("sat")
        if script.get_model:
            values = sat.model()
            model = bb.read_model(values)
            lines = ["("]
            for name, sort in script.sorts.items():
                val = model[name]
                if hasattr(sort, "width"):
                    lines.append(
                        f"  (define-fun {name} () (_ BitVec {sort.width}) "
                        f"#b{val:0{sort.width}b})"
                    )
                else:
                    lines.append(
                        f"  (define-fun {name} () Bool {'true' if val else 'false'})"
                    )
            lines.append(")")
            print("\n".join(lines))
    else:
        print("unsat")
    return 0


def _run_gnf(text: str) -> int:
    status, model = solve_gnf(text)
    if status == "sat":
        print("s SATISFIABLE")
        lits = [str(i + 1) if val else str(-(i + 1)) for i, val in enumerate(model)]
        for i in range(0, len(lits), 20):
            print("v " + " ".join(lits[i : i + 20]))
        print("v 0")
    else:
        print("s UNSATISFIABLE")
    return 0


def main(argv=None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    gnf = False
    if "--gnf" in args:
        gnf = True
        args.remove("--gnf")
    if len(args) != 1:
        print("usage: python -m acorn.minismt [--gnf] FILE", file=sys.stderr)
        return 2
    path = args[0]
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if gnf or path.endswith(".gnf"):
        return _run_gnf(text)
    return _run_smt2(text)


if __name__ == "__main__":
    sys.exit(main())
