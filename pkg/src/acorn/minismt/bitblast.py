"""Tseitin bit-blasting of formula terms into CNF.

Gates are structurally hashed so shared subterms (transfer cascades reused by
selection chains, neighbor-id equalities reused across constraint groups)
blast once.  Top-level assertions avoid auxiliary variables for the common
implication/equality shapes the encoder produces.
"""

from __future__ import annotations

from .. import formula as F


class CnfBuilder:
    """Clause sink when CNF is written to a file instead of a live solver."""

    def __init__(self):
        self.n_vars = 0
        self.clauses = []

    def new_var(self) -> int:
        v = self.n_vars
        self.n_vars += 1
        return v

    def add_clause(self, lits) -> None:
        self.clauses.append(list(lits))


class BitBlaster:
    def __init__(self, sink):
        self.sink = sink
        self.cache = {}
        t = sink.new_var()
        sink.add_clause([t << 1])
        self.TRUE = t << 1
        self.FALSE = t << 1 | 1
        self.names = {}  # declared name -> lit (bool) or [lits] (bv, LSB first)
        self.reach_atoms = {}  # (src, dst) -> lit

    # -- variable declaration ------------------------------------------------

    def declare(self, name: str, sort) -> None:
        if name in self.names:
            return
        if isinstance(sort, F.BoolSort):
            self.names[name] = self.sink.new_var() << 1
        else:
            self.names[name] = [self.sink.new_var() << 1 for _ in range(sort.width)]

    # -- gates ----------------------------------------------------------------

    def _fresh(self) -> int:
        return self.sink.new_var() << 1

    def mk_and(self, lits) -> int:
        out = []
        for l in lits:
            if l == self.FALSE:
                return self.FALSE
            if l == self.TRUE:
                continue
            out.append(l)
        if not out:
            return self.TRUE
        out = sorted(set(out))
        for i in range(len(out) - 1):
            if out[i] ^ 1 == out[i + 1]:
                return self.FALSE
        if len(out) == 1:
            return out[0]
        key = ("and", tuple(out))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        o = self._fresh()
        add = self.sink.add_clause
        big = [o]
        for l in out:
            add([o ^ 1, l])
            big.append(l ^ 1)
        add(big)
        self.cache[key] = o
        return o

    def mk_or(self, lits) -> int:
        return self.mk_and([l ^ 1 for l in lits]) ^ 1

    def mk_iff(self, a: int, b: int) -> int:
        if a == self.TRUE:
            return b
        if b == self.TRUE:
            return a
        if a == self.FALSE:
            return b ^ 1
        if b == self.FALSE:
            return a ^ 1
        if a == b:
            return self.TRUE
        if a == (b ^ 1):
            return self.FALSE
        if b < a:
            a, b = b, a
        # iff(a, ~b) == ~iff(a, b): normalize on b's sign
        flip = b & 1
        b ^= flip
        key = ("iff", a, b)
        hit = self.cache.get(key)
        if hit is not None:
            return hit ^ flip
        o = self._fresh()
        add = self.sink.add_clause
        add([o ^ 1, a ^ 1, b])
        add([o ^ 1, a, b ^ 1])
        add([o, a ^ 1, b ^ 1])
        add([o, a, b])
        self.cache[key] = o
        return o ^ flip

    def mk_xor(self, a: int, b: int) -> int:
        return self.mk_iff(a, b) ^ 1

    def mk_ite(self, c: int, t: int, e: int) -> int:
        if c == self.TRUE:
            return t
        if c == self.FALSE:
            return e
        if t == e:
            return t
        if t == self.TRUE:
            return self.mk_or([c, e])
        if t == self.FALSE:
            return self.mk_and([c ^ 1, e])
        if e == self.TRUE:
            return self.mk_or([c ^ 1, t])
        if e == self.FALSE:
            return self.mk_and([c, t])
        key = ("ite", c, t, e)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        o = self._fresh()
        add = self.sink.add_clause
        add([o ^ 1, c ^ 1, t])
        add([o ^ 1, c, e])
        add([o, c ^ 1, t ^ 1])
        add([o, c, e ^ 1])
        self.cache[key] = o
        return o

    # -- bit-vector circuits ---------------------------------------------------

    def bits_eq(self, xs, ys) -> int:
        return self.mk_and([self.mk_iff(x, y) for x, y in zip(xs, ys)])

    def bits_ule(self, xs, ys, strict: bool = False) -> int:
        acc = self.FALSE if strict else self.TRUE
        for x, y in zip(xs, ys):  # LSB first; MSB decided last wins
            acc = self.mk_ite(self.mk_iff(x, y), acc, y)
        return acc

    def bits_add(self, xs, ys):
        out = []
        carry = self.FALSE
        for x, y in zip(xs, ys):
            s = self.mk_xor(self.mk_xor(x, y), carry)
            carry = self.mk_or([self.mk_and([x, y]), self.mk_and([carry, self.mk_xor(x, y)])])
            out.append(s)
        return out

    def const_bits(self, value: int, width: int):
        return [self.TRUE if (value >> i) & 1 else self.FALSE for i in range(width)]

    # -- terms ------------------------------------------------------------------

    def reach_lit(self, src: int, dst: int) -> int:
        key = (src, dst)
        if key not in self.reach_atoms:
            self.reach_atoms[key] = self._fresh()
        return self.reach_atoms[key]

    def bool_term(self, t) -> int:
        key = ("b", t)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = self._bool_term(t)
        self.cache[key] = out
        return out

    def _bool_term(self, t) -> int:
        if isinstance(t, F.BoolLit):
            return self.TRUE if t.value else self.FALSE
        if isinstance(t, F.BoolVar):
            return self.names[t.name]
        if isinstance(t, F.Not):
            return self.bool_term(t.arg) ^ 1
        if isinstance(t, F.And):
            return self.mk_and([self.bool_term(a) for a in t.args])
        if isinstance(t, F.Or):
            return self.mk_or([self.bool_term(a) for a in t.args])
        if isinstance(t, F.Implies):
            return self.mk_or([self.bool_term(t.lhs) ^ 1, self.bool_term(t.rhs)])
        if isinstance(t, F.Iff):
            return self.mk_iff(self.bool_term(t.lhs), self.bool_term(t.rhs))
        if isinstance(t, F.Eq):
            return self.bits_eq(self.bv_term(t.lhs), self.bv_term(t.rhs))
        if isinstance(t, F.Ule):
            return self.bits_ule(self.bv_term(t.lhs), self.bv_term(t.rhs))
        if isinstance(t, F.Ult):
            return self.bits_ule(self.bv_term(t.lhs), self.bv_term(t.rhs), strict=True)
        if isinstance(t, F.Ite):
            return self.mk_ite(
                self.bool_term(t.cond), self.bool_term(t.then), self.bool_term(t.els)
            )
        if isinstance(t, F.TestBit):
            return self.bv_term(t.arg)[t.index]
        if isinstance(t, F.Reaches):
            return self.reach_lit(t.src, t.dst)
        raise TypeError(f"not a boolean term: {t!r}")

    def bv_term(self, t):
        key = ("v", t)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = self._bv_term(t)
        self.cache[key] = out
        return out

    def _bv_term(self, t):
        if isinstance(t, F.BVLit):
            return self.const_bits(t.value, t.width)
        if isinstance(t, F.BVVar):
            return self.names[t.name]
        if isinstance(t, F.Add):
            return self.bits_add(self.bv_term(t.lhs), self.bv_term(t.rhs))
        if isinstance(t, F.Ite):
            c = self.bool_term(t.cond)
            xs, ys = self.bv_term(t.then), self.bv_term(t.els)
            return [self.mk_ite(c, x, y) for x, y in zip(xs, ys)]
        if isinstance(t, F.OrLit):
            xs = self.bv_term(t.arg)
            return [
                self.TRUE if (t.mask >> i) & 1 else x for i, x in enumerate(xs)
            ]
        raise TypeError(f"not a bit-vector term: {t!r}")

    # -- top-level assertions ----------------------------------------------------

    def assert_term(self, t) -> None:
        add = self.sink.add_clause
        if isinstance(t, F.BoolLit):
            if not t.value:
                add([])
            return
        if isinstance(t, F.And):
            for a in t.args:
                self.assert_term(a)
            return
        if isinstance(t, F.Implies):
            rhs = t.rhs
            if isinstance(rhs, F.And):
                for a in rhs.args:
                    self.assert_term(F.Implies(t.lhs, a))
                return
            a = self.bool_term(t.lhs)
            if isinstance(rhs, F.Eq):
                xs, ys = self.bv_term(rhs.lhs), self.bv_term(rhs.rhs)
                for x, y in zip(xs, ys):
                    add([a ^ 1, x ^ 1, y])
                    add([a ^ 1, x, y ^ 1])
                return
            add([a ^ 1, self.bool_term(rhs)])
            return
        if isinstance(t, F.Or):
            add([self.bool_term(x) for x in t.args])
            return
        if isinstance(t, F.Not):
            add([self.bool_term(t.arg) ^ 1])
            return
        if isinstance(t, F.Iff):
            a, b = self.bool_term(t.lhs), self.bool_term(t.rhs)
            add([a ^ 1, b])
            add([a, b ^ 1])
            return
        if isinstance(t, F.Eq):
            xs, ys = self.bv_term(t.lhs), self.bv_term(t.rhs)
            for x, y in zip(xs, ys):
                add([x ^ 1, y])
                add([x, y ^ 1])
            return
        add([self.bool_term(t)])

    # -- model decoding ------------------------------------------------------------

    def read_model(self, values) -> dict:
        """Map declared names to python values given per-variable booleans."""
        out = {}
        for name, enc in self.names.items():
            if isinstance(enc, int):
                out[name] = values[enc >> 1] ^ bool(enc & 1)
            else:
                val = 0
                for i, lit in enumerate(enc):
                    if values[lit >> 1] ^ bool(lit & 1):
                        val |= 1 << i
                out[name] = val
        return out
