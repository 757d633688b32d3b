"""A first-order language over finite types with exact conditioning.

Concrete syntax (``.fin`` files)::

    type coin = {heads, tails}          # optional declarations first
    let x = bernoulli(2/5) in
    let y = bernoulli(2/5) in
    x =:= y; x

Expressions: ``true``, ``false``, ``()``, declared constants, tuples,
``bernoulli(p)``, ``categorical{c1: p1, c2: p2}``, ``score(p)``,
``a =:= b`` (exact conditioning, any finite type), ``a == b``, ``not``,
``&&``, ``||``, ``fst``, ``snd``, ``ite(c, a, b)`` (a deterministic
choice between already evaluated values), ``observe(e, D)`` and
``if c then a else b``.  Probabilities are exact rationals written
``p/q`` or as decimals.  Programs containing ``if`` are in the branching
language; without it they are straight-line.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Union

from ..lang import fresh_name
from ..syntax import ParseError, TokenStream, tokenize
from .kernels import SubDist, SubKernel, proportional

# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class BoolT:
    def __repr__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class UnitT:
    def __repr__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class EnumT:
    name: str
    constants: tuple

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PairT:
    left: "FTy"
    right: "FTy"

    def __repr__(self) -> str:
        return f"({self.left!r} * {self.right!r})"


FTy = Union[BoolT, UnitT, EnumT, PairT]
BOOL, UNIT = BoolT(), UnitT()


def values(ty: FTy) -> tuple:
    """The ordered finite set of values of a type."""
    if ty == BOOL:
        return (False, True)
    if ty == UNIT:
        return ((),)
    if isinstance(ty, EnumT):
        return ty.constants
    return tuple(product(values(ty.left), values(ty.right)))


def show_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if v == ():
        return "()"
    if isinstance(v, tuple):
        return f"({show_value(v[0])}, {show_value(v[1])})"
    return str(v)


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class FVar:
    name: str


@dataclass(frozen=True)
class FConst:
    """A literal value: ``True``/``False``, ``()`` or an enum constant name."""

    value: object
    ty: FTy


@dataclass(frozen=True)
class FPair:
    left: "PTerm"
    right: "PTerm"


@dataclass(frozen=True)
class FLet:
    name: str
    bound: "PTerm"
    body: "PTerm"


@dataclass(frozen=True)
class FLetPair:
    left: str
    right: str
    bound: "PTerm"
    body: "PTerm"


@dataclass(frozen=True)
class FSample:
    """Draw from a literal distribution: ``bernoulli(p)`` or ``categorical{...}``."""

    ty: FTy
    masses: tuple  # (value, Fraction) pairs


@dataclass(frozen=True)
class FScore:
    weight: Fraction


@dataclass(frozen=True)
class FCond:
    left: "PTerm"
    right: "PTerm"


@dataclass(frozen=True)
class FPrim:
    """Deterministic primitive: ``eq``, ``not``, ``and``, ``or``, ``fst``, ``snd``, ``ite``."""

    op: str
    args: tuple


@dataclass(frozen=True)
class FIf:
    cond: "PTerm"
    then: "PTerm"
    orelse: "PTerm"


PTerm = Union[FVar, FConst, FPair, FLet, FLetPair, FSample, FScore, FCond, FPrim, FIf]

TRUE = FConst(True, BOOL)
FALSE = FConst(False, BOOL)
UNIT_V = FConst((), UNIT)


def bernoulli(p) -> FSample:
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("bernoulli parameter must lie in [0, 1]")
    return FSample(BOOL, ((True, p), (False, 1 - p)))


def fseq(first: PTerm, *rest: PTerm) -> PTerm:
    if not rest:
        return first
    return FLet("_", first, fseq(*rest))


def has_branching(t: PTerm) -> bool:
    if isinstance(t, FIf):
        return True
    for child in _children(t):
        if has_branching(child):
            return True
    return False


def _children(t: PTerm) -> tuple:
    if isinstance(t, (FPair, FCond)):
        return (t.left, t.right)
    if isinstance(t, (FLet, FLetPair)):
        return (t.bound, t.body)
    if isinstance(t, FPrim):
        return t.args
    if isinstance(t, FIf):
        return (t.cond, t.then, t.orelse)
    return ()


# ---------------------------------------------------------------- typing


class FinTypeError(Exception):
    pass


class ModeError(Exception):
    """Branching used where only straight-line programs are allowed."""


def _lookup(ctx, name):
    for n, ty in reversed(tuple(ctx)):
        if n == name:
            return ty
    raise FinTypeError(f"unbound variable {name!r}")


def typecheck_fin(ctx, t: PTerm) -> FTy:
    ctx = tuple(ctx)
    if isinstance(t, FVar):
        return _lookup(ctx, t.name)
    if isinstance(t, FConst):
        return t.ty
    if isinstance(t, FSample):
        return t.ty
    if isinstance(t, FScore):
        return UNIT
    if isinstance(t, FPair):
        return PairT(typecheck_fin(ctx, t.left), typecheck_fin(ctx, t.right))
    if isinstance(t, FCond):
        a, b = typecheck_fin(ctx, t.left), typecheck_fin(ctx, t.right)
        if a != b:
            raise FinTypeError(f"'=:=' compares {a!r} with {b!r}")
        return UNIT
    if isinstance(t, FLet):
        ty = typecheck_fin(ctx, t.bound)
        return typecheck_fin(ctx + ((t.name, ty),), t.body)
    if isinstance(t, FLetPair):
        ty = typecheck_fin(ctx, t.bound)
        if not isinstance(ty, PairT):
            raise FinTypeError(f"pair pattern against {ty!r}")
        return typecheck_fin(ctx + ((t.left, ty.left), (t.right, ty.right)), t.body)
    if isinstance(t, FIf):
        if typecheck_fin(ctx, t.cond) != BOOL:
            raise FinTypeError("if condition must be bool")
        a, b = typecheck_fin(ctx, t.then), typecheck_fin(ctx, t.orelse)
        if a != b:
            raise FinTypeError(f"if branches have types {a!r} and {b!r}")
        return a
    if isinstance(t, FPrim):
        tys = [typecheck_fin(ctx, a) for a in t.args]
        if t.op == "eq":
            if tys[0] != tys[1]:
                raise FinTypeError(f"'==' compares {tys[0]!r} with {tys[1]!r}")
            return BOOL
        if t.op in ("not", "and", "or"):
            if any(ty != BOOL for ty in tys):
                raise FinTypeError(f"'{t.op}' expects bool arguments")
            return BOOL
        if t.op in ("fst", "snd"):
            if not isinstance(tys[0], PairT):
                raise FinTypeError(f"'{t.op}' expects a pair")
            return tys[0].left if t.op == "fst" else tys[0].right
        if t.op == "ite":
            if tys[0] != BOOL or tys[1] != tys[2]:
                raise FinTypeError("ite(c, a, b) needs bool c and a, b of one type")
            return tys[1]
    raise FinTypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------- evaluation


def _eval(t: PTerm, env: dict) -> dict:
    """Subdistribution of results as ``{value: mass}`` (zero masses dropped)."""
    if isinstance(t, FVar):
        return {env[t.name]: Fraction(1)}
    if isinstance(t, FConst):
        return {t.value: Fraction(1)}
    if isinstance(t, FSample):
        return {v: p for v, p in t.masses if p}
    if isinstance(t, FScore):
        return {(): t.weight} if t.weight else {}
    if isinstance(t, FLet):
        out: dict = {}
        for v, p in _eval(t.bound, env).items():
            for w, q in _eval(t.body, {**env, t.name: v}).items():
                out[w] = out.get(w, 0) + p * q
        return out
    if isinstance(t, FLetPair):
        out = {}
        for v, p in _eval(t.bound, env).items():
            for w, q in _eval(t.body, {**env, t.left: v[0], t.right: v[1]}).items():
                out[w] = out.get(w, 0) + p * q
        return out
    if isinstance(t, FIf):
        out = {}
        for c, p in _eval(t.cond, env).items():
            for w, q in _eval(t.then if c else t.orelse, env).items():
                out[w] = out.get(w, 0) + p * q
        return out
    if isinstance(t, (FPair, FCond)):
        args = (t.left, t.right)
    else:
        args = t.args
    out = {}
    for combo, p in _eval_args(args, env):
        if isinstance(t, FPair):
            out[combo] = out.get(combo, 0) + p
        elif isinstance(t, FCond):
            if combo[0] == combo[1]:
                out[()] = out.get((), 0) + p
        else:
            v = _prim(t.op, combo)
            out[v] = out.get(v, 0) + p
    return out


def _eval_args(args, env):
    """Joint evaluation of arguments left to right."""
    results = [((), Fraction(1))]
    for a in args:
        nxt = []
        for vals, p in results:
            for v, q in _eval(a, env).items():
                nxt.append((vals + (v,), p * q))
        results = nxt
    return results


def _prim(op: str, vals: tuple):
    if op == "eq":
        return vals[0] == vals[1]
    if op == "not":
        return not vals[0]
    if op == "and":
        return vals[0] and vals[1]
    if op == "or":
        return vals[0] or vals[1]
    if op == "fst":
        return vals[0][0]
    if op == "snd":
        return vals[0][1]
    if op == "ite":
        return vals[1] if vals[0] else vals[2]
    raise ValueError(op)


def _check_mode(t: PTerm, mode: str) -> None:
    if mode not in ("p", "psl"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "psl" and has_branching(t):
        raise ModeError("if-then-else is not part of the straight-line language")


def eval_term(ctx, t: PTerm, mode: str = "p") -> SubKernel:
    """Exact denotation as a subprobability kernel from the context's values."""
    ctx = tuple(ctx)
    _check_mode(t, mode)
    ty = typecheck_fin(ctx, t)
    names = [n for n, _ in ctx]
    dom = tuple(product(*(values(cty) for _, cty in ctx)))
    cod = values(ty)
    columns = {}
    for gamma in dom:
        columns[gamma] = _eval(t, dict(zip(names, gamma)))
    return SubKernel.from_columns(dom, cod, columns)


def eval_closed(t: PTerm, mode: str = "p") -> SubDist:
    k = eval_term((), t, mode)
    return k.column(())


def equiv_fin(s: PTerm, t: PTerm, mode: str = "psl", ctx=()) -> bool:
    """``psl``: denotations proportional; ``p``: denotations equal."""
    ctx = tuple(ctx)
    a, b = typecheck_fin(ctx, s), typecheck_fin(ctx, t)
    if a != b:
        raise FinTypeError(f"type mismatch: {a!r} vs {b!r}")
    ks, kt = eval_term(ctx, s, mode), eval_term(ctx, t, mode)
    if mode == "psl":
        return proportional(ks, kt)
    return ks == kt


def evidence_wrapper(t: PTerm) -> PTerm:
    """``if bernoulli(1/2) then (t; true) else false``."""
    return FIf(bernoulli(Fraction(1, 2)), FLet("_", t, TRUE), FALSE)


@dataclass(frozen=True)
class Evidence:
    z: Fraction
    p: Fraction
    z_reconstructed: Fraction


def evidence_report(t: PTerm) -> Evidence:
    z = eval_closed(t).total()
    w = eval_closed(evidence_wrapper(t))
    total = w.total()
    p = w[True] / total
    return Evidence(z, p, p / (1 - p))


def model_evidence(t: PTerm) -> Fraction:
    """Total mass ``Z`` of a closed program, checked against the wrapper reconstruction."""
    ev = evidence_report(t)
    if ev.z != ev.z_reconstructed:
        raise AssertionError(f"evidence mismatch: {ev.z} vs {ev.z_reconstructed}")
    return ev.z


# ---------------------------------------------------------------- parser

_KEYWORDS = frozenset({
    "let", "in", "if", "then", "else", "true", "false", "bernoulli", "categorical",
    "score", "observe", "return", "type", "not", "fst", "snd", "ite",
})
_SYMBOLS = ("=:=", "==", "&&", "||", "=", "(", ")", "{", "}", ",", ";", ":", "/")


@dataclass(frozen=True)
class FinProgram:
    types: dict
    term: PTerm


class _FinParser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text, _KEYWORDS, _SYMBOLS))
        self.enums: dict[str, EnumT] = {}
        self.constants: dict[str, EnumT] = {}
        self.avoid = {t.text for t in self.ts.tokens if t.kind == "IDENT"}

    def fresh(self) -> str:
        name = fresh_name(self.avoid, "_t")
        self.avoid.add(name)
        return name

    def program(self) -> FinProgram:
        ts = self.ts
        ts.skip_newlines()
        while ts.accept("type"):
            name = ts.expect("IDENT").text
            ts.expect("=")
            ts.expect("{")
            consts = [ts.expect("IDENT").text]
            while ts.accept(","):
                consts.append(ts.expect("IDENT").text)
            ts.expect("}")
            if len(set(consts)) != len(consts):
                ts.error(ts.tokens[ts.pos - 1], "distinct constants")
            ty = EnumT(name, tuple(consts))
            for c in consts:
                if c in self.constants:
                    ts.error(ts.tokens[ts.pos - 1], f"constant {c!r} declared once")
                self.constants[c] = ty
            self.enums[name] = ty
            while ts.peek.kind in (";", "NEWLINE"):
                ts.pos += 1
        t = self.seq(stop={"EOF"})
        ts.skip_newlines()
        ts.expect("EOF")
        return FinProgram(dict(self.enums), t)

    def seq(self, stop) -> PTerm:
        ts = self.ts
        ts.skip_newlines()
        stmts = []
        while True:
            tok = ts.peek
            start = ts.pos
            pat = self.try_pattern() if tok.kind in ("IDENT", "(") else None
            if pat is not None and ts.peek.kind == "=":
                ts.pos += 1
                stmts.append(("bind", pat, self.expr(), tok))
            else:
                ts.pos = start
                stmts.append(("expr", None, self.expr(), tok))
            if ts.peek.kind in (";", "NEWLINE"):
                while ts.peek.kind in (";", "NEWLINE"):
                    ts.pos += 1
                if ts.peek.kind in stop:
                    break
                continue
            break
        kind, _, out, tok = stmts[-1]
        if kind == "bind":
            ts.error(tok, "expression after binding")
        for kind, pat, e, _ in reversed(stmts[:-1]):
            out = self.bind(pat, e, out) if kind == "bind" else FLet("_", e, out)
        return out

    def try_pattern(self):
        ts = self.ts
        tok = ts.peek
        if tok.kind == "IDENT":
            ts.pos += 1
            return tok.text
        if tok.kind == "(":
            ts.pos += 1
            items = []
            while True:
                p = self.try_pattern()
                if p is None:
                    return None
                items.append(p)
                if ts.peek.kind != ",":
                    break
                ts.pos += 1
            if ts.peek.kind != ")" or len(items) < 2:
                return None
            ts.pos += 1
            return tuple(items)
        return None

    def pattern(self):
        ts = self.ts
        tok = ts.accept("IDENT")
        if tok is not None:
            return tok.text
        ts.expect("(")
        items = [self.pattern()]
        while ts.accept(","):
            items.append(self.pattern())
        ts.expect(")")
        if len(items) < 2:
            ts.error(ts.tokens[ts.pos - 1], "tuple pattern with at least two components")
        return tuple(items)

    def bind(self, pat, bound: PTerm, body: PTerm) -> PTerm:
        if isinstance(pat, str):
            if pat in self.constants:
                raise ParseError(self.ts.peek.line, self.ts.peek.col, ["variable name"], repr(pat))
            return FLet(pat, bound, body)
        head, tail = pat[0], pat[1:]
        tail = tail[0] if len(tail) == 1 else tail
        a = head if isinstance(head, str) else self.fresh()
        b = tail if isinstance(tail, str) else self.fresh()
        if not isinstance(tail, str):
            body = self.bind(tail, FVar(b), body)
        if not isinstance(head, str):
            body = self.bind(head, FVar(a), body)
        return FLetPair(a, b, bound, body)

    def expr(self) -> PTerm:
        ts = self.ts
        if ts.accept("let"):
            pat = self.pattern()
            ts.expect("=")
            bound = self.expr()
            ts.expect("in")
            body = self.seq(stop={")", ",", "in", "then", "else", "EOF"})
            return self.bind(pat, bound, body)
        if ts.accept("if"):
            c = self.expr()
            ts.expect("then")
            a = self.expr()
            ts.expect("else")
            b = self.expr()
            return FIf(c, a, b)
        left = self.disj()
        if ts.accept("=:="):
            return FCond(left, self.disj())
        return left

    def disj(self) -> PTerm:
        out = self.conj()
        while self.ts.accept("||"):
            out = FPrim("or", (out, self.conj()))
        return out

    def conj(self) -> PTerm:
        out = self.equality()
        while self.ts.accept("&&"):
            out = FPrim("and", (out, self.equality()))
        return out

    def equality(self) -> PTerm:
        out = self.unary()
        if self.ts.accept("=="):
            out = FPrim("eq", (out, self.unary()))
        return out

    def unary(self) -> PTerm:
        ts = self.ts
        for op in ("not", "fst", "snd"):
            if ts.accept(op):
                return FPrim(op, (self.unary(),))
        if ts.accept("return"):
            return self.unary()
        return self.atom()

    def prob(self) -> Fraction:
        ts = self.ts
        tok = ts.expect("NUM")
        try:
            p = Fraction(tok.text)
            if ts.accept("/"):
                den = ts.expect("NUM")
                p = p / Fraction(den.text)
        except (ValueError, ZeroDivisionError):
            ts.error(tok, "rational probability")
        if not 0 <= p <= 1:
            ts.error(tok, "probability in [0, 1]")
        return p

    def atom(self) -> PTerm:
        ts = self.ts
        tok = ts.peek
        if ts.accept("true"):
            return TRUE
        if ts.accept("false"):
            return FALSE
        if ts.accept("IDENT"):
            if tok.text in self.constants:
                return FConst(tok.text, self.constants[tok.text])
            return FVar(tok.text)
        if ts.accept("bernoulli"):
            ts.expect("(")
            p = self.prob()
            ts.expect(")")
            return bernoulli(p)
        if ts.accept("score"):
            ts.expect("(")
            p = self.prob()
            ts.expect(")")
            return FScore(p)
        if ts.accept("categorical"):
            return self.categorical(tok)
        if ts.accept("observe"):
            ts.expect("(")
            e = self.expr()
            ts.expect(",")
            dtok = ts.peek
            d = self.atom()
            if not isinstance(d, FSample):
                ts.error(dtok, "distribution literal")
            ts.expect(")")
            y = self.fresh()
            return FLet(y, d, FCond(FVar(y), e))
        if ts.accept("ite"):
            ts.expect("(")
            args = [self.expr()]
            for _ in range(2):
                ts.expect(",")
                args.append(self.expr())
            ts.expect(")")
            return FPrim("ite", tuple(args))
        if ts.accept("("):
            ts.skip_newlines()
            if ts.accept(")"):
                return UNIT_V
            items = [self.seq(stop={")", ","})]
            while ts.accept(","):
                items.append(self.seq(stop={")", ","}))
            ts.expect(")")
            out = items[-1]
            for it in reversed(items[:-1]):
                out = FPair(it, out)
            return out
        ts.fail("expression")

    def categorical(self, tok) -> PTerm:
        ts = self.ts
        ts.expect("{")
        entries = []
        while True:
            key = ts.peek
            if ts.accept("true"):
                v, ty = True, BOOL
            elif ts.accept("false"):
                v, ty = False, BOOL
            else:
                name = ts.expect("IDENT").text
                if name not in self.constants:
                    ts.error(key, "declared constant")
                v, ty = name, self.constants[name]
            ts.expect(":")
            entries.append((v, ty, self.prob()))
            if not ts.accept(","):
                break
        ts.expect("}")
        tys = {ty for _, ty, _ in entries}
        if len(tys) != 1:
            ts.error(tok, "categorical over a single type")
        (ty,) = tys
        if sum(p for _, _, p in entries) != 1:
            ts.error(tok, "categorical masses summing to 1")
        masses = {v: Fraction(0) for v in values(ty)}
        for v, _, p in entries:
            masses[v] += p
        return FSample(ty, tuple(masses.items()))


def parse_fin(text: str) -> FinProgram:
    return _FinParser(text).program()


# ---------------------------------------------------------------- printing


def pretty_fin(t: PTerm) -> str:
    if isinstance(t, FVar):
        return t.name
    if isinstance(t, FConst):
        return show_value(t.value)
    if isinstance(t, FSample):
        if t.ty == BOOL:
            return f"bernoulli({dict(t.masses)[True]})"
        return "categorical{" + ", ".join(f"{show_value(v)}: {p}" for v, p in t.masses) + "}"
    if isinstance(t, FScore):
        return f"score({t.weight})"
    if isinstance(t, FPair):
        return f"({pretty_fin(t.left)}, {pretty_fin(t.right)})"
    if isinstance(t, FCond):
        return f"({pretty_fin(t.left)} =:= {pretty_fin(t.right)})"
    if isinstance(t, FLet):
        if t.name == "_":
            return f"({pretty_fin(t.bound)}; {pretty_fin(t.body)})"
        return f"(let {t.name} = {pretty_fin(t.bound)} in {pretty_fin(t.body)})"
    if isinstance(t, FLetPair):
        return f"(let ({t.left}, {t.right}) = {pretty_fin(t.bound)} in {pretty_fin(t.body)})"
    if isinstance(t, FIf):
        return f"(if {pretty_fin(t.cond)} then {pretty_fin(t.then)} else {pretty_fin(t.orelse)})"
    if isinstance(t, FPrim):
        if t.op in ("eq", "and", "or"):
            sym = {"eq": "==", "and": "&&", "or": "||"}[t.op]
            return f"({pretty_fin(t.args[0])} {sym} {pretty_fin(t.args[1])})"
        return f"{t.op}(" + ", ".join(pretty_fin(a) for a in t.args) + ")"
    raise TypeError(f"not a term: {t!r}")


def show_dist(d: SubDist) -> dict:
    """``{value text: fraction text}`` for reports."""
    return {show_value(v): str(m) for v, m in zip(d.space, d.masses)}
