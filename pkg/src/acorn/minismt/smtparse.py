"""Parser for the SMT-LIB 2 fragment the emitters produce (QF_BV + Bool).

Handles declare-const/declare-fun, assert, check-sat, get-model and the
operator set the constraint language uses.  Strict about everything else so
malformed scripts fail loudly instead of solving the wrong problem.
"""

from __future__ import annotations

import re

from .. import formula as F


class SmtParseError(Exception):
    pass


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def tokenize(text: str):
    # strip ; comments line-wise, then split
    lines = [ln.split(";", 1)[0] for ln in text.splitlines()]
    return _TOKEN.findall("\n".join(lines))


def parse_sexprs(tokens):
    out = []
    stack = [out]
    for tok in tokens:
        if tok == "(":
            new = []
            stack[-1].append(new)
            stack.append(new)
        elif tok == ")":
            if len(stack) == 1:
                raise SmtParseError("unbalanced ')'")
            stack.pop()
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SmtParseError("unbalanced '('")
    return out


def _parse_sort(sx):
    if sx == "Bool":
        return F.BOOL
    if isinstance(sx, list) and len(sx) == 3 and sx[0] == "_" and sx[1] == "BitVec":
        return F.BVSort(int(sx[2]))
    raise SmtParseError(f"unsupported sort {sx!r}")


class _ExtractBit:
    """Marker for ((_ extract i i) t); only valid compared against #b0/#b1."""

    def __init__(self, term, index):
        self.term = term
        self.index = index


class Script:
    def __init__(self):
        self.sorts = {}  # name -> Sort
        self.assertions = []
        self.check_sat = False
        self.get_model = False


def parse_script(text: str) -> Script:
    script = Script()
    for cmd in parse_sexprs(tokenize(text)):
        if not isinstance(cmd, list) or not cmd:
            raise SmtParseError(f"bad command {cmd!r}")
        head = cmd[0]
        if head in ("set-logic", "set-option", "set-info", "exit", "push", "pop"):
            continue
        if head == "declare-const":
            script.sorts[cmd[1]] = _parse_sort(cmd[2])
        elif head == "declare-fun":
            if cmd[2] != []:
                raise SmtParseError("only zero-arity declare-fun supported")
            script.sorts[cmd[1]] = _parse_sort(cmd[3])
        elif head == "assert":
            script.assertions.append(_term(cmd[1], script.sorts))
        elif head == "check-sat":
            script.check_sat = True
        elif head == "get-model":
            script.get_model = True
        else:
            raise SmtParseError(f"unsupported command {head!r}")
    return script


def _atom(tok: str, sorts):
    if tok == "true":
        return F.TRUE
    if tok == "false":
        return F.FALSE
    if tok.startswith("#b"):
        return F.BVLit(int(tok[2:], 2), len(tok) - 2)
    if tok.startswith("#x"):
        return F.BVLit(int(tok[2:], 16), (len(tok) - 2) * 4)
    if tok in sorts:
        sort = sorts[tok]
        if isinstance(sort, F.BoolSort):
            return F.BoolVar(tok)
        return F.BVVar(tok, sort.width)
    raise SmtParseError(f"unknown symbol {tok!r}")


def _term(sx, sorts):
    if isinstance(sx, str):
        return _atom(sx, sorts)
    if not sx:
        raise SmtParseError("empty term")
    head = sx[0]
    if head == "_":
        # (_ bvN width)
        if len(sx) == 3 and sx[1].startswith("bv"):
            return F.BVLit(int(sx[1][2:]), int(sx[2]))
        raise SmtParseError(f"unsupported indexed term {sx!r}")
    if isinstance(head, list):
        # ((_ extract i j) t)
        if len(head) == 4 and head[0] == "_" and head[1] == "extract":
            i, j = int(head[2]), int(head[3])
            if i != j:
                raise SmtParseError("only single-bit extract supported")
            return _ExtractBit(_term(sx[1], sorts), i)
        raise SmtParseError(f"unsupported application {head!r}")
    args = [_term(a, sorts) for a in sx[1:]]
    if head == "not":
        return F.bnot(args[0])
    if head == "and":
        return F.band(*args)
    if head == "or":
        return F.bor(*args)
    if head == "=>":
        out = args[-1]
        for a in reversed(args[:-1]):
            out = F.implies(a, out)
        return out
    if head == "xor":
        return F.bnot(F.iff(args[0], args[1]))
    if head == "=":
        pairs = [_eq_pair(args[i], args[i + 1]) for i in range(len(args) - 1)]
        return F.band(*pairs)
    if head == "distinct":
        if len(args) != 2:
            raise SmtParseError("only binary distinct supported")
        return F.bnot(_eq_pair(args[0], args[1]))
    if head == "ite":
        return F.ite(args[0], args[1], args[2])
    if head == "bvadd":
        return F.add(args[0], args[1])
    if head == "bvule":
        return F.ule(args[0], args[1])
    if head == "bvult":
        return F.ult(args[0], args[1])
    if head == "bvuge":
        return F.ule(args[1], args[0])
    if head == "bvugt":
        return F.ult(args[1], args[0])
    if head == "bvor":
        a, b = args
        if isinstance(b, F.BVLit):
            return F.orlit(a, b.value)
        if isinstance(a, F.BVLit):
            return F.orlit(b, a.value)
        raise SmtParseError("bvor supported only with a literal operand")
    raise SmtParseError(f"unsupported operator {head!r}")


def _eq_pair(a, b):
    for x, y in ((a, b), (b, a)):
        if isinstance(x, _ExtractBit):
            if isinstance(y, F.BVLit) and y.width == 1:
                bit = F.testbit(x.term, x.index)
                return bit if y.value else F.bnot(bit)
            raise SmtParseError("extract only supported against #b0/#b1")
    if isinstance(a, _ExtractBit) or isinstance(b, _ExtractBit):
        raise SmtParseError("unsupported extract use")
    bool_like = isinstance(a, (F.BoolLit, F.BoolVar, F.Not, F.And, F.Or,
                               F.Implies, F.Iff, F.Eq, F.Ule, F.Ult,
                               F.TestBit, F.Reaches))
    bool_like_b = isinstance(b, (F.BoolLit, F.BoolVar, F.Not, F.And, F.Or,
                                 F.Implies, F.Iff, F.Eq, F.Ule, F.Ult,
                                 F.TestBit, F.Reaches))
    if bool_like or bool_like_b:
        return F.iff(a, b)
    return F.eq(a, b)
