"""Serialize constraint systems for external solvers.

Backend (a): standard SMT-LIB 2 (quantifier-free bit-vectors + booleans),
one check-sat and get-model, deterministic declaration order.  Backend (b):
a graph-CNF file binding routing-edge literals to a symbolic digraph so
reachability atoms become native ``reach`` predicates; the name-to-variable
mapping rides along for witness decoding.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import formula as F
from .formula import ConstraintSystem
from .minismt.bitblast import BitBlaster, CnfBuilder


class EmitError(Exception):
    pass


def _bv_lit(value: int, width: int) -> str:
    return f"#b{value:0{width}b}"


def _sx(t) -> str:
    if isinstance(t, F.BoolLit):
        return "true" if t.value else "false"
    if isinstance(t, F.BVLit):
        return _bv_lit(t.value, t.width)
    if isinstance(t, (F.BoolVar, F.BVVar)):
        return t.name
    if isinstance(t, F.Not):
        return f"(not {_sx(t.arg)})"
    if isinstance(t, F.And):
        return "(and " + " ".join(_sx(a) for a in t.args) + ")"
    if isinstance(t, F.Or):
        return "(or " + " ".join(_sx(a) for a in t.args) + ")"
    if isinstance(t, F.Implies):
        return f"(=> {_sx(t.lhs)} {_sx(t.rhs)})"
    if isinstance(t, (F.Iff, F.Eq)):
        return f"(= {_sx(t.lhs)} {_sx(t.rhs)})"
    if isinstance(t, F.Ule):
        return f"(bvule {_sx(t.lhs)} {_sx(t.rhs)})"
    if isinstance(t, F.Ult):
        return f"(bvult {_sx(t.lhs)} {_sx(t.rhs)})"
    if isinstance(t, F.Add):
        return f"(bvadd {_sx(t.lhs)} {_sx(t.rhs)})"
    if isinstance(t, F.Ite):
        return f"(ite {_sx(t.cond)} {_sx(t.then)} {_sx(t.els)})"
    if isinstance(t, F.TestBit):
        return f"(= ((_ extract {t.index} {t.index}) {_sx(t.arg)}) #b1)"
    if isinstance(t, F.OrLit):
        w = F.term_width(t.arg)
        return f"(bvor {_sx(t.arg)} {_bv_lit(t.mask, w)})"
    if isinstance(t, F.Reaches):
        raise EmitError("reaches atom in a standard-backend system")
    raise EmitError(f"cannot emit {t!r}")


def to_smt2(system: ConstraintSystem) -> str:
    lines = ["(set-logic QF_BV)"]
    for name, sort in system.variables.items():
        if isinstance(sort, F.BoolSort):
            lines.append(f"(declare-const {name} Bool)")
        else:
            lines.append(f"(declare-const {name} (_ BitVec {sort.width}))")
    for a in system.assertions:
        lines.append(f"(assert {_sx(a)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


@dataclass
class GnfScript:
    text: str
    names: dict  # name -> dimacs var (bool) or [dimacs vars] (bv, LSB first)


def to_gnf(system: ConstraintSystem, n_nodes: int, edge_vars: dict) -> GnfScript:
    """Bit-blast a graph-backend system into the graph-CNF format.

    ``edge_vars`` maps directed topology edges to their routing-edge
    variable names; those booleans become the symbolic graph's edge literals.
    """
    builder = CnfBuilder()
    bb = BitBlaster(builder)
    for name, sort in system.variables.items():
        bb.declare(name, sort)
    for a in system.assertions:
        bb.assert_term(a)

    def dimacs_var(lit: int) -> int:
        if lit & 1:
            raise EmitError("edge variable bound to a negated literal")
        return (lit >> 1) + 1

    lines = []
    lines.append(f"digraph {n_nodes} {len(edge_vars)} 0")
    for (v, u), name in sorted(edge_vars.items()):
        lines.append(f"edge 0 {v} {u} {dimacs_var(bb.names[name])}")
    for (src, dst), lit in sorted(bb.reach_atoms.items()):
        lines.append(f"reach 0 {src} {dst} {dimacs_var(lit)}")
    clause_lines = []
    for cl in builder.clauses:
        toks = []
        for lit in cl:
            var = (lit >> 1) + 1
            toks.append(str(-var if lit & 1 else var))
        toks.append("0")
        clause_lines.append(" ".join(toks))
    header = f"p cnf {builder.n_vars} {len(clause_lines)}"
    text = "\n".join([header] + lines + clause_lines) + "\n"

    names = {}
    for name, enc in bb.names.items():
        if isinstance(enc, int):
            names[name] = (enc >> 1) + 1
        else:
            names[name] = [(lit >> 1) + 1 for lit in enc]
    return GnfScript(text=text, names=names)
