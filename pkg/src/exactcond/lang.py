"""The Gaussian language: AST, parser, pretty-printer, typechecker and layout.

Concrete syntax (``.gauss`` files)::

    program  := stmt ((';' | newline) stmt)*
    stmt     := pattern '=' expr              # binds the rest of the block
              | expr
    expr     := 'let' pattern '=' expr 'in' program
              | sum ['=:=' sum]
    sum      := prod (('+' | '-') prod)*
    prod     := unary (('*' | '/' | '@') unary)*
    unary    := '-' unary | atom
    atom     := number | ident | 'normal' '(' [expr ',' number] ')'
              | '(' ')' | '(' program (',' program)* ')' | matrix
    pattern  := ident | '_' | '(' pattern (',' pattern)+ ')'

``s; t`` abbreviates ``let _ = s in t``.  ``normal(m, v)`` is the normal
distribution with mean ``m`` and variance ``v`` and stands for
``m + sqrt(v) * normal()``.  Multiplication needs a numeric literal on one
side; ``[[a, b], [c, d]] @ e`` multiplies a literal matrix with a tuple.
Tuples nest to the right: ``(a, b, c)`` is ``(a, (b, c))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Union

from .syntax import ParseError, Token, TokenStream, tokenize

__all__ = [
    "Var", "Const", "Add", "Scale", "Pair", "Unit", "Let", "LetPair", "Normal", "Cond",
    "Term", "R", "I", "PairTy", "Ty", "ParseError", "GaussTypeError",
    "parse", "pretty", "typecheck", "dim", "layout", "flatten", "free_vars",
    "subst", "fresh_name", "seq", "tuple_term", "pretty_type",
]


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Scale:
    alpha: float
    body: "Term"


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Unit:
    pass


@dataclass(frozen=True)
class Let:
    name: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class LetPair:
    left: str
    right: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class Normal:
    pass


@dataclass(frozen=True)
class Cond:
    left: "Term"
    right: "Term"


Term = Union[Var, Const, Add, Scale, Pair, Unit, Let, LetPair, Normal, Cond]


def seq(first: Term, *rest: Term) -> Term:
    """``first; rest[0]; ...`` as nested ``let _``."""
    if not rest:
        return first
    return Let("_", first, seq(*rest))


def tuple_term(items) -> Term:
    """Right-nested tuple; ``()`` for no items."""
    items = list(items)
    if not items:
        return Unit()
    out = items[-1]
    for t in reversed(items[:-1]):
        out = Pair(t, out)
    return out


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class _Real:
    def __repr__(self) -> str:
        return "R"


@dataclass(frozen=True)
class _UnitTy:
    def __repr__(self) -> str:
        return "I"


@dataclass(frozen=True)
class PairTy:
    left: "Ty"
    right: "Ty"

    def __repr__(self) -> str:
        return f"({self.left!r} * {self.right!r})"


R = _Real()
I = _UnitTy()
Ty = Union[_Real, _UnitTy, PairTy]


def pretty_type(ty: Ty) -> str:
    return repr(ty)


def dim(ty: Ty) -> int:
    if ty == R:
        return 1
    if ty == I:
        return 0
    return dim(ty.left) + dim(ty.right)


# ---------------------------------------------------------------- scoping helpers


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, (Const, Unit, Normal)):
        return frozenset()
    if isinstance(t, Scale):
        return free_vars(t.body)
    if isinstance(t, (Add, Pair, Cond)):
        return free_vars(t.left) | free_vars(t.right)
    if isinstance(t, Let):
        return free_vars(t.bound) | (free_vars(t.body) - {t.name})
    if isinstance(t, LetPair):
        return free_vars(t.bound) | (free_vars(t.body) - {t.left, t.right})
    raise TypeError(f"not a term: {t!r}")


def _all_names(t: Term) -> set[str]:
    names: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            names.add(u.name)
        elif isinstance(u, Scale):
            stack.append(u.body)
        elif isinstance(u, (Add, Pair, Cond)):
            stack += [u.left, u.right]
        elif isinstance(u, Let):
            names.add(u.name)
            stack += [u.bound, u.body]
        elif isinstance(u, LetPair):
            names |= {u.left, u.right}
            stack += [u.bound, u.body]
    return names


def fresh_name(avoid, base: str = "_v") -> str:
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand


def subst(t: Term, mapping: dict[str, Term]) -> Term:
    """Capture-avoiding simultaneous substitution."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, (Const, Unit, Normal)):
        return t
    if isinstance(t, Scale):
        return Scale(t.alpha, subst(t.body, mapping))
    if isinstance(t, (Add, Pair, Cond)):
        return type(t)(subst(t.left, mapping), subst(t.right, mapping))
    if isinstance(t, Let):
        body, (name,) = _subst_binder(t.body, (t.name,), mapping)
        return Let(name, subst(t.bound, mapping), body)
    if isinstance(t, LetPair):
        body, (a, b) = _subst_binder(t.body, (t.left, t.right), mapping)
        return LetPair(a, b, subst(t.bound, mapping), body)
    raise TypeError(f"not a term: {t!r}")


def _subst_binder(body: Term, binders: tuple[str, ...], mapping: dict[str, Term]):
    inner = {k: v for k, v in mapping.items() if k not in binders}
    if not inner:
        return body, binders
    incoming: set[str] = set()
    for v in inner.values():
        incoming |= free_vars(v)
    if not any(name in incoming and name != "_" for name in binders):
        return subst(body, inner), binders
    avoid = incoming | set(inner) | _all_names(body) | set(binders)
    renamed = []
    for name in binders:
        if name in incoming and name != "_":
            new = fresh_name(avoid, name + "_")
            avoid.add(new)
            inner[name] = Var(new)
            renamed.append(new)
        else:
            renamed.append(name)
    return subst(body, inner), tuple(renamed)


# ---------------------------------------------------------------- parser

_KEYWORDS = frozenset({"let", "in", "normal"})
_SYMBOLS = ("=:=", "=", "(", ")", "[", "]", ",", ";", "+", "-", "*", "/", "@")


@dataclass(frozen=True)
class _PVar:
    name: str


@dataclass(frozen=True)
class _PTuple:
    items: tuple


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text, _KEYWORDS, _SYMBOLS))
        self.avoid = {t.text for t in self.ts.tokens if t.kind == "IDENT"}

    def fresh(self) -> str:
        name = fresh_name(self.avoid, "_t")
        self.avoid.add(name)
        return name

    # program := stmt (sep stmt)*
    def program(self, stop: set[str]) -> Term:
        ts = self.ts
        ts.skip_newlines()
        stmts = []
        while True:
            stmts.append(self.stmt())
            if ts.peek.kind in (";", "NEWLINE"):
                while ts.peek.kind in (";", "NEWLINE"):
                    ts.pos += 1
                if ts.peek.kind in stop:
                    break
                continue
            break
        return self._fold(stmts)

    def _fold(self, stmts) -> Term:
        kind, payload, tok = stmts[-1]
        if kind == "bind":
            self.ts.error(tok, "expression after binding")
        out = payload
        for kind, payload, _ in reversed(stmts[:-1]):
            if kind == "bind":
                pat, bound = payload
                out = self.bind(pat, bound, out)
            else:
                out = Let("_", payload, out)
        return out

    def stmt(self):
        ts = self.ts
        start = ts.pos
        tok = ts.peek
        if tok.kind in ("IDENT", "("):
            pat = self.try_pattern()
            if pat is not None and ts.peek.kind == "=":
                ts.pos += 1
                return ("bind", (pat, self.expr()), tok)
            ts.pos = start
        return ("expr", self.expr(), tok)

    def try_pattern(self):
        ts = self.ts
        tok = ts.peek
        if tok.kind == "IDENT":
            ts.pos += 1
            return _PVar(tok.text)
        if tok.kind == "(":
            ts.pos += 1
            items = []
            while True:
                p = self.try_pattern()
                if p is None:
                    return None
                items.append(p)
                if ts.peek.kind == ",":
                    ts.pos += 1
                    continue
                break
            if ts.peek.kind != ")" or len(items) < 2:
                return None
            ts.pos += 1
            return _PTuple(tuple(items))
        return None

    def pattern(self):
        ts = self.ts
        tok = ts.accept("IDENT")
        if tok is not None:
            return _PVar(tok.text)
        ts.expect("(")
        items = [self.pattern()]
        while ts.accept(","):
            items.append(self.pattern())
        ts.expect(")")
        if len(items) < 2:
            ts.error(ts.tokens[ts.pos - 1], "tuple pattern with at least two components")
        return _PTuple(tuple(items))

    def bind(self, pat, bound: Term, body: Term) -> Term:
        if isinstance(pat, _PVar):
            return Let(pat.name, bound, body)
        head, tail = pat.items[0], pat.items[1:]
        tail = tail[0] if len(tail) == 1 else _PTuple(tail)
        a = head.name if isinstance(head, _PVar) else self.fresh()
        b = tail.name if isinstance(tail, _PVar) else self.fresh()
        if isinstance(tail, _PTuple):
            body = self.bind(tail, Var(b), body)
        if isinstance(head, _PTuple):
            body = self.bind(head, Var(a), body)
        return LetPair(a, b, bound, body)

    def expr(self) -> Term:
        ts = self.ts
        if ts.accept("let"):
            pat = self.pattern()
            ts.expect("=")
            bound = self.expr()
            ts.expect("in")
            body = self.program(stop={")", ",", "in", "EOF"})
            return self.bind(pat, bound, body)
        left = self.sum()
        if ts.accept("=:="):
            return Cond(left, self.sum())
        return left

    def sum(self) -> Term:
        ts = self.ts
        out = self.prod()
        while True:
            if ts.accept("+"):
                out = Add(out, self.prod())
            elif ts.accept("-"):
                out = Add(out, Scale(-1.0, self.prod()))
            else:
                return out

    def prod(self) -> Term:
        ts = self.ts
        out = self.unary()
        while True:
            op = ts.peek
            if ts.accept("*"):
                rhs = self.unary()
                if isinstance(out, Const):
                    out = Scale(out.value, rhs)
                elif isinstance(rhs, Const):
                    out = Scale(rhs.value, out)
                else:
                    ts.error(op, "numeric literal operand for '*'")
            elif ts.accept("/"):
                rhs = self.unary()
                if not isinstance(rhs, Const):
                    ts.error(op, "numeric literal divisor")
                if rhs.value == 0.0:
                    ts.error(op, "nonzero divisor")
                out = Scale(1.0 / rhs.value, out)
            elif ts.accept("@"):
                if not isinstance(out, _Matrix):
                    ts.error(op, "literal matrix before '@'")
                out = self.matvec(out, self.unary())
            else:
                if isinstance(out, _Matrix):
                    ts.error(ts.peek, "'@'")
                return out

    def unary(self):
        ts = self.ts
        if ts.accept("-"):
            if ts.peek.kind == "NUM":
                return Const(-self.number())
            inner = self.unary()
            if isinstance(inner, _Matrix):
                ts.error(ts.peek, "expression")
            return Scale(-1.0, inner)
        return self.atom()

    def number(self) -> float:
        tok = self.ts.expect("NUM")
        v = float(tok.text)
        if not math.isfinite(v):
            self.ts.error(tok, "finite number")
        return v

    def signed_number(self) -> float:
        if self.ts.accept("-"):
            return -self.number()
        return self.number()

    def atom(self):
        ts = self.ts
        tok = ts.peek
        if ts.check("NUM"):
            return Const(self.number())
        if ts.accept("IDENT"):
            if tok.text == "_":
                ts.error(tok, "variable (the wildcard '_' cannot be used)")
            return Var(tok.text)
        if ts.accept("normal"):
            ts.expect("(")
            if ts.accept(")"):
                return Normal()
            mean = self.expr()
            ts.expect(",")
            vtok = ts.peek
            var = self.signed_number()
            if var < 0:
                ts.error(vtok, "nonnegative variance")
            ts.expect(")")
            return Add(mean, Scale(math.sqrt(var), Normal()))
        if ts.accept("("):
            ts.skip_newlines()
            if ts.accept(")"):
                return Unit()
            items = [self.program(stop={")", ","})]
            while ts.accept(","):
                items.append(self.program(stop={")", ","}))
            ts.expect(")")
            return tuple_term(items)
        if ts.accept("["):
            rows = [self.row()]
            while ts.accept(","):
                rows.append(self.row())
            ts.expect("]")
            if len({len(r) for r in rows}) != 1:
                ts.error(tok, "rectangular matrix")
            return _Matrix(tuple(rows))
        ts.fail("expression")

    def row(self):
        ts = self.ts
        ts.expect("[")
        vals = [self.signed_number()]
        while ts.accept(","):
            vals.append(self.signed_number())
        ts.expect("]")
        return tuple(vals)

    def matvec(self, mat: "_Matrix", arg: Term) -> Term:
        n = len(mat.rows[0])
        if n == 1:
            names = [None]
            comps = [arg]
            wrap = lambda body: body
        else:
            names = [self.fresh() for _ in range(n)]
            comps = [Var(v) for v in names]
            pat = _PTuple(tuple(_PVar(v) for v in names))
            wrap = lambda body: self.bind(pat, arg, body)
        outs = []
        for row in mat.rows:
            acc = None
            for a, c in zip(row, comps):
                term = Scale(a, c)
                acc = term if acc is None else Add(acc, term)
            outs.append(acc)
        return wrap(tuple_term(outs))


@dataclass(frozen=True)
class _Matrix:
    rows: tuple


def parse(text: str) -> Term:
    """Parse a ``.gauss`` program.  Raises ``ParseError``."""
    p = _Parser(text)
    t = p.program(stop={"EOF"})
    p.ts.skip_newlines()
    p.ts.expect("EOF")
    return t


# ---------------------------------------------------------------- printer

_SEQ, _LET, _COND, _SUM, _PROD, _ATOM = range(6)


def _num(x: float) -> str:
    return repr(float(x))


def pretty(t: Term) -> str:
    """Concrete syntax for ``t``; ``parse(pretty(t)) == t``."""
    return _pp(t, _SEQ)


def _wrap(s: str, prec: int, level: int) -> str:
    return f"({s})" if prec < level else s


def _pp(t: Term, level: int) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return _num(t.value)
    if isinstance(t, Unit):
        return "()"
    if isinstance(t, Normal):
        return "normal()"
    if isinstance(t, Pair):
        items = [t.left]
        rest = t.right
        while isinstance(rest, Pair):
            items.append(rest.left)
            rest = rest.right
        items.append(rest)
        return "(" + ", ".join(_pp(u, _SEQ) for u in items) + ")"
    if isinstance(t, Scale):
        return _wrap(f"{_num(t.alpha)} * {_pp(t.body, _ATOM)}", _PROD, level)
    if isinstance(t, Add):
        return _wrap(f"{_pp(t.left, _SUM)} + {_pp(t.right, _PROD)}", _SUM, level)
    if isinstance(t, Cond):
        return _wrap(f"{_pp(t.left, _SUM)} =:= {_pp(t.right, _SUM)}", _COND, level)
    if isinstance(t, Let) and t.name == "_":
        return _wrap(f"{_pp(t.bound, _COND)}; {_pp(t.body, _SEQ)}", _SEQ, level)
    if isinstance(t, Let):
        s = f"let {t.name} = {_pp(t.bound, _LET)} in {_pp(t.body, _SEQ)}"
        return _wrap(s, _LET, level)
    if isinstance(t, LetPair):
        s = f"let ({t.left}, {t.right}) = {_pp(t.bound, _LET)} in {_pp(t.body, _SEQ)}"
        return _wrap(s, _LET, level)
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------- typing


class GaussTypeError(Exception):
    """Typing failure; ``rule`` names the typing rule that could not be applied."""

    def __init__(self, rule: str, message: str):
        self.rule = rule
        super().__init__(f"[{rule}] {message}")


def _lookup(ctx, name: str) -> Ty:
    for n, ty in reversed(list(ctx)):
        if n == name:
            return ty
    raise GaussTypeError("var", f"unbound variable {name!r}")


def typecheck(ctx, t: Term) -> Ty:
    """Type of ``t`` in the context ``ctx`` (a sequence of ``(name, Ty)``)."""
    ctx = tuple(ctx)
    if isinstance(t, Var):
        return _lookup(ctx, t.name)
    if isinstance(t, Const):
        return R
    if isinstance(t, Normal):
        return R
    if isinstance(t, Unit):
        return I
    if isinstance(t, Add):
        for side in (t.left, t.right):
            ty = typecheck(ctx, side)
            if ty != R:
                raise GaussTypeError("add", f"'+' expects R operands, got {ty!r}")
        return R
    if isinstance(t, Scale):
        ty = typecheck(ctx, t.body)
        if ty != R:
            raise GaussTypeError("scale", f"scaling expects an R operand, got {ty!r}")
        return R
    if isinstance(t, Cond):
        for side in (t.left, t.right):
            ty = typecheck(ctx, side)
            if ty != R:
                raise GaussTypeError("cond", f"'=:=' expects R operands, got {ty!r}")
        return I
    if isinstance(t, Pair):
        return PairTy(typecheck(ctx, t.left), typecheck(ctx, t.right))
    if isinstance(t, Let):
        ty = typecheck(ctx, t.bound)
        return typecheck(ctx + ((t.name, ty),), t.body)
    if isinstance(t, LetPair):
        ty = typecheck(ctx, t.bound)
        if not isinstance(ty, PairTy):
            raise GaussTypeError("let-pair", f"pattern (x, y) needs a pair type, got {ty!r}")
        return typecheck(ctx + ((t.left, ty.left), (t.right, ty.right)), t.body)
    raise TypeError(f"not a term: {t!r}")


def layout(ctx) -> dict[str, tuple[int, Ty]]:
    """Offset and type of each visible variable in the flattened context.

    Variables are laid out left to right, pair types depth first; a name
    bound twice refers to its rightmost occurrence.
    """
    out: dict[str, tuple[int, Ty]] = {}
    off = 0
    for name, ty in ctx:
        out[name] = (off, ty)
        off += dim(ty)
    return out


def flatten(ctx, t: Term) -> tuple[int, int, dict[str, tuple[int, Ty]]]:
    """``(m, n, layout)``: dimensions of the context and of the result."""
    ctx = tuple(ctx)
    ty = typecheck(ctx, t)
    return sum(dim(ty_) for _, ty_ in ctx), dim(ty), layout(ctx)
