"""Small solver-agnostic formula language.

Terms are immutable trees over booleans and fixed-width unsigned bit-vectors,
plus an opaque ``reaches(src, dst)`` atom that only graph-capable backends can
discharge.  Constructor helpers constant-fold aggressively so that formulas
whose guards are statically known (dropped-route definitions, transfers out of
the destination) simplify away before they ever reach a solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class Sort:
    pass


@dataclass(frozen=True)
class BoolSort(Sort):
    def __repr__(self):
        return "Bool"


@dataclass(frozen=True)
class BVSort(Sort):
    width: int

    def __repr__(self):
        return f"BV{self.width}"


BOOL = BoolSort()


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class BoolVar(Term):
    name: str


@dataclass(frozen=True)
class BVVar(Term):
    name: str
    width: int


@dataclass(frozen=True)
class BoolLit(Term):
    value: bool


@dataclass(frozen=True)
class BVLit(Term):
    value: int
    width: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"literal {self.value} out of range for width {self.width}")


@dataclass(frozen=True)
class Not(Term):
    arg: Term


@dataclass(frozen=True)
class And(Term):
    args: tuple


@dataclass(frozen=True)
class Or(Term):
    args: tuple


@dataclass(frozen=True)
class Implies(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Iff(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Eq(Term):
    """Bit-vector equality (use Iff for booleans)."""

    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Ule(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Ult(Term):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Add(Term):
    """Bit-vector addition, wrapping at the operand width."""

    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Ite(Term):
    cond: Term
    then: Term
    els: Term


@dataclass(frozen=True)
class TestBit(Term):
    """Boolean: bit ``index`` of a bit-vector term is 1."""

    arg: Term
    index: int


@dataclass(frozen=True)
class OrLit(Term):
    """Bit-vector OR with a constant mask (tag setting)."""

    arg: Term
    mask: int


@dataclass(frozen=True)
class Reaches(Term):
    """Opaque graph-reachability atom over the symbolic routing graph."""

    src: int
    dst: int


# ---------------------------------------------------------------------------
# folding constructors

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def bnot(t: Term) -> Term:
    if isinstance(t, BoolLit):
        return BoolLit(not t.value)
    if isinstance(t, Not):
        return t.arg
    return Not(t)


def band(*ts: Term) -> Term:
    flat = []
    for t in ts:
        if isinstance(t, BoolLit):
            if not t.value:
                return FALSE
            continue
        if isinstance(t, And):
            flat.extend(t.args)
        else:
            flat.append(t)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def bor(*ts: Term) -> Term:
    flat = []
    for t in ts:
        if isinstance(t, BoolLit):
            if t.value:
                return TRUE
            continue
        if isinstance(t, Or):
            flat.extend(t.args)
        else:
            flat.append(t)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def implies(a: Term, b: Term) -> Term:
    if isinstance(a, BoolLit):
        return b if a.value else TRUE
    if isinstance(b, BoolLit):
        return TRUE if b.value else bnot(a)
    return Implies(a, b)


def iff(a: Term, b: Term) -> Term:
    if isinstance(a, BoolLit):
        return b if a.value else bnot(b)
    if isinstance(b, BoolLit):
        return a if b.value else bnot(a)
    if a == b:
        return TRUE
    return Iff(a, b)


def eq(a: Term, b: Term) -> Term:
    if isinstance(a, BVLit) and isinstance(b, BVLit):
        return BoolLit(a.value == b.value)
    if a == b:
        return TRUE
    return Eq(a, b)


def ule(a: Term, b: Term) -> Term:
    if isinstance(a, BVLit) and isinstance(b, BVLit):
        return BoolLit(a.value <= b.value)
    if isinstance(a, BVLit) and a.value == 0:
        return TRUE
    return Ule(a, b)


def ult(a: Term, b: Term) -> Term:
    if isinstance(a, BVLit) and isinstance(b, BVLit):
        return BoolLit(a.value < b.value)
    if isinstance(b, BVLit) and b.value == 0:
        return FALSE
    return Ult(a, b)


def uge(a: Term, b: Term) -> Term:
    return ule(b, a)


def add(a: Term, b: Term) -> Term:
    if isinstance(a, BVLit) and isinstance(b, BVLit):
        return BVLit((a.value + b.value) & ((1 << a.width) - 1), a.width)
    return Add(a, b)


def ite(c: Term, t: Term, e: Term) -> Term:
    if isinstance(c, BoolLit):
        return t if c.value else e
    if t == e:
        return t
    return Ite(c, t, e)


def testbit(t: Term, index: int) -> Term:
    if isinstance(t, BVLit):
        return BoolLit(bool((t.value >> index) & 1))
    if index == 0 and term_width(t) == 1:
        return Eq(t, BVLit(1, 1))
    return TestBit(t, index)


def orlit(t: Term, mask: int) -> Term:
    if mask == 0:
        return t
    if isinstance(t, BVLit):
        return BVLit(t.value | mask, t.width)
    return OrLit(t, mask)


def term_width(t: Term) -> int:
    """Width of a bit-vector term (raises on boolean terms)."""
    if isinstance(t, BVVar):
        return t.width
    if isinstance(t, BVLit):
        return t.width
    if isinstance(t, (Add, OrLit)):
        return term_width(t.lhs if isinstance(t, Add) else t.arg)
    if isinstance(t, Ite):
        return term_width(t.then)
    raise TypeError(f"not a bit-vector term: {t!r}")


def substitute(t: Term, env: dict) -> Term:
    """Replace variables named in env by literal terms, re-folding."""
    if isinstance(t, (BoolLit, BVLit, Reaches)):
        return t
    if isinstance(t, BoolVar):
        return env.get(t.name, t)
    if isinstance(t, BVVar):
        return env.get(t.name, t)
    if isinstance(t, Not):
        return bnot(substitute(t.arg, env))
    if isinstance(t, And):
        return band(*(substitute(a, env) for a in t.args))
    if isinstance(t, Or):
        return bor(*(substitute(a, env) for a in t.args))
    if isinstance(t, Implies):
        return implies(substitute(t.lhs, env), substitute(t.rhs, env))
    if isinstance(t, Iff):
        return iff(substitute(t.lhs, env), substitute(t.rhs, env))
    if isinstance(t, Eq):
        return eq(substitute(t.lhs, env), substitute(t.rhs, env))
    if isinstance(t, Ule):
        return ule(substitute(t.lhs, env), substitute(t.rhs, env))
    if isinstance(t, Ult):
        return ult(substitute(t.lhs, env), substitute(t.rhs, env))
    if isinstance(t, Add):
        return add(substitute(t.lhs, env), substitute(t.rhs, env))
    if isinstance(t, Ite):
        return ite(substitute(t.cond, env), substitute(t.then, env), substitute(t.els, env))
    if isinstance(t, TestBit):
        return testbit(substitute(t.arg, env), t.index)
    if isinstance(t, OrLit):
        return orlit(substitute(t.arg, env), t.mask)
    raise TypeError(f"unknown term {t!r}")


def evaluate(t: Term, env: dict):
    """Evaluate a reaches-free term under a full assignment (bool/int values)."""
    if isinstance(t, BoolLit):
        return t.value
    if isinstance(t, BVLit):
        return t.value
    if isinstance(t, BoolVar):
        return bool(env[t.name])
    if isinstance(t, BVVar):
        return int(env[t.name])
    if isinstance(t, Not):
        return not evaluate(t.arg, env)
    if isinstance(t, And):
        return all(evaluate(a, env) for a in t.args)
    if isinstance(t, Or):
        return any(evaluate(a, env) for a in t.args)
    if isinstance(t, Implies):
        return (not evaluate(t.lhs, env)) or evaluate(t.rhs, env)
    if isinstance(t, Iff):
        return evaluate(t.lhs, env) == evaluate(t.rhs, env)
    if isinstance(t, Eq):
        return evaluate(t.lhs, env) == evaluate(t.rhs, env)
    if isinstance(t, Ule):
        return evaluate(t.lhs, env) <= evaluate(t.rhs, env)
    if isinstance(t, Ult):
        return evaluate(t.lhs, env) < evaluate(t.rhs, env)
    if isinstance(t, Add):
        w = term_width(t)
        return (evaluate(t.lhs, env) + evaluate(t.rhs, env)) & ((1 << w) - 1)
    if isinstance(t, Ite):
        return evaluate(t.then, env) if evaluate(t.cond, env) else evaluate(t.els, env)
    if isinstance(t, TestBit):
        return bool((evaluate(t.arg, env) >> t.index) & 1)
    if isinstance(t, OrLit):
        return evaluate(t.arg, env) | t.mask
    raise TypeError(f"cannot evaluate {t!r}")


def contains_reaches(t: Term) -> bool:
    if isinstance(t, Reaches):
        return True
    if isinstance(t, (BoolLit, BVLit, BoolVar, BVVar)):
        return False
    if isinstance(t, Not):
        return contains_reaches(t.arg)
    if isinstance(t, (And, Or)):
        return any(contains_reaches(a) for a in t.args)
    if isinstance(t, (Implies, Iff, Eq, Ule, Ult, Add)):
        return contains_reaches(t.lhs) or contains_reaches(t.rhs)
    if isinstance(t, Ite):
        return any(contains_reaches(x) for x in (t.cond, t.then, t.els))
    if isinstance(t, (TestBit, OrLit)):
        return contains_reaches(t.arg)
    raise TypeError(f"unknown term {t!r}")


@dataclass
class ConstraintSystem:
    """Variable declarations plus an assertion list.

    Declarations are kept in insertion order so emitted scripts are
    byte-deterministic for a given instance.  Graph-backend systems also
    carry the symbolic-graph shape: node count and the edge-to-variable
    binding that reaches atoms refer to.
    """

    variables: dict = field(default_factory=dict)  # name -> Sort
    assertions: list = field(default_factory=list)
    graph_nodes: int = 0
    graph_edges: dict = field(default_factory=dict)  # (src, dst) -> var name

    def declare_bool(self, name: str) -> BoolVar:
        self.variables.setdefault(name, BOOL)
        return BoolVar(name)

    def declare_bv(self, name: str, width: int) -> BVVar:
        self.variables.setdefault(name, BVSort(width))
        return BVVar(name, width)

    def add(self, t: Term) -> None:
        if isinstance(t, BoolLit) and t.value:
            return
        self.assertions.append(t)

    def has_reaches(self) -> bool:
        return any(contains_reaches(a) for a in self.assertions)

    def copy(self) -> "ConstraintSystem":
        return ConstraintSystem(
            dict(self.variables), list(self.assertions),
            self.graph_nodes, dict(self.graph_edges),
        )
