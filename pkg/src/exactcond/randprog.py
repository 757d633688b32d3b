"""Seeded generators: random programs, channels, contexts and law instances.

Everything takes a ``numpy.random.Generator`` so test runs are
reproducible.  Coefficients are small integers to keep the numerics
well conditioned while still producing rank-deficient covariances,
redundant conditions and infeasible programs.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import cond, gauss
from .cond import Channel
from .finprob import lang as fl
from .lang import (
    I, R, Add, Cond, Const, Let, LetPair, Normal, Pair, PairTy, Scale, Term, Unit, Var,
    free_vars, seq, subst, tuple_term, typecheck,
)

# ---------------------------------------------------------------- Gaussian programs


def _coef(rng, lo=-3, hi=3, nonzero=True) -> float:
    while True:
        a = int(rng.integers(lo, hi + 1))
        if a or not nonzero:
            return float(a)


def random_affine(rng, names, max_terms: int = 2, const: bool = True) -> Term:
    """``a1 * v1 + ... + c`` over a few of ``names`` with small integer coefficients."""
    terms: list[Term] = []
    if names:
        k = int(rng.integers(1, min(max_terms, len(names)) + 1))
        for v in rng.choice(len(names), size=k, replace=False):
            a = _coef(rng)
            terms.append(Var(names[v]) if a == 1 else Scale(a, Var(names[v])))
    if const or not terms:
        c = float(rng.integers(-3, 4))
        if c or not terms:
            terms.append(Const(c))
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


class _Prog:
    def __init__(self, rng):
        self.rng = rng
        self.names: list[str] = []
        self.stmts: list[tuple] = []
        self.k = 0

    def fresh(self) -> str:
        self.k += 1
        return f"v{self.k}"

    def build(self, ret: Term) -> Term:
        out = ret
        for kind, a, b in reversed(self.stmts):
            if kind == "let":
                out = Let(a, b, out)
            elif kind == "pair":
                out = LetPair(a[0], a[1], b, out)
            else:
                out = Let("_", a, out)
        return out


def random_program(rng, max_normals: int = 6, max_conds: int = 3, max_dim: int = 4) -> Term:
    """A random closed Gaussian program.

    Uses at most ``max_normals`` calls to ``normal()`` and ``max_conds``
    conditions and returns a tuple of at most ``max_dim`` reals (or unit).
    Some conditions are deliberately contradictory.
    """
    p = _Prog(rng)
    n_norm = int(rng.integers(1, max_normals + 1))
    n_cond = int(rng.integers(0, max_conds + 1))
    events = ["N"] * n_norm + ["C"] * n_cond + ["A"] * int(rng.integers(0, 3))
    order = list(rng.permutation(len(events)))
    events = ["N"] + [events[i] for i in order if i != 0]
    conds_seen: list[Term] = []
    budget = n_norm
    for ev in events:
        if ev == "N":
            if budget <= 0:
                continue
            kind = rng.random()
            if kind < 0.15 and budget >= 2:
                a, b = p.fresh(), p.fresh()
                p.stmts.append(("pair", (a, b), Pair(Normal(), Scale(_coef(rng), Normal()))))
                p.names += [a, b]
                budget -= 2
                continue
            v = p.fresh()
            if kind < 0.4 and p.names:
                mean = random_affine(rng, p.names)
                bound: Term = Add(mean, Scale(float(rng.integers(0, 3)), Normal()))
            elif kind < 0.55:
                # a nested block that allocates and returns
                w = p.fresh()
                inner = Let(w, Normal(), Add(Scale(_coef(rng), Var(w)), Const(float(rng.integers(-2, 3)))))
                bound = inner
            else:
                bound = Normal()
            p.stmts.append(("let", v, bound))
            p.names.append(v)
            budget -= 1
        elif ev == "A":
            if not p.names:
                continue
            v = p.fresh()
            p.stmts.append(("let", v, random_affine(rng, p.names)))
            p.names.append(v)
        else:
            if not p.names:
                continue
            if conds_seen and rng.random() < 0.2:
                # contradict or repeat an earlier condition
                prev = conds_seen[int(rng.integers(len(conds_seen)))]
                shift = float(rng.integers(0, 3))
                c = Cond(prev.left, Add(prev.right, Const(shift)))
            elif len(conds_seen) >= n_norm - budget:
                continue
            else:
                lhs = random_affine(rng, p.names, const=False)
                rhs = random_affine(rng, p.names) if rng.random() < 0.5 else Const(float(rng.integers(-2, 3)))
                c = Cond(lhs, rhs)
            conds_seen.append(c)
            p.stmts.append(("seq", c, None))
    n_out = int(rng.integers(0, max_dim + 1))
    ret = tuple_term([random_affine(rng, p.names) for _ in range(n_out)])
    return p.build(ret)


# ---------------------------------------------------------------- open terms and law schemas


def random_term(rng, names, depth: int = 2, budget: list | None = None) -> Term:
    """A random term of type ``R`` over the real variables ``names``."""
    budget = budget if budget is not None else [3, 2]  # [normals, conditions]
    leaf = depth <= 0 or rng.random() < 0.3
    if leaf:
        r = rng.random()
        if r < 0.5 and names:
            return Var(names[int(rng.integers(len(names)))])
        if r < 0.75 and budget[0] > 0:
            budget[0] -= 1
            return Normal()
        return Const(float(rng.integers(-2, 3)))
    r = rng.random()
    if r < 0.25:
        return Scale(_coef(rng), random_term(rng, names, depth - 1, budget))
    if r < 0.5:
        return Add(random_term(rng, names, depth - 1, budget), random_term(rng, names, depth - 1, budget))
    if r < 0.75:
        v = _fresh(names)
        bound = random_term(rng, names, depth - 1, budget)
        return Let(v, bound, random_term(rng, names + [v], depth - 1, budget))
    if budget[1] > 0:
        budget[1] -= 1
        c = Cond(random_term(rng, names, 0, budget), random_term(rng, names, 0, budget))
        return seq(c, random_term(rng, names, depth - 1, budget))
    return random_term(rng, names, depth - 1, budget)


def _fresh(names) -> str:
    i = len(names)
    while f"u{i}" in names:
        i += 1
    return f"u{i}"


def random_value(rng, names) -> Term:
    """A deterministic value expression: an affine combination of variables."""
    return random_affine(rng, names)


def count_free(t: Term, x: str) -> int:
    if isinstance(t, Var):
        return int(t.name == x)
    if isinstance(t, (Const, Unit, Normal)):
        return 0
    if isinstance(t, Scale):
        return count_free(t.body, x)
    if isinstance(t, (Add, Pair, Cond)):
        return count_free(t.left, x) + count_free(t.right, x)
    if isinstance(t, Let):
        return count_free(t.bound, x) + (0 if t.name == x else count_free(t.body, x))
    if isinstance(t, LetPair):
        return count_free(t.bound, x) + (0 if x in (t.left, t.right) else count_free(t.body, x))
    raise TypeError(t)


def _leaf_paths(t: Term, path=()):
    if isinstance(t, (Var, Const, Normal)):
        yield path
    elif isinstance(t, Scale):
        yield from _leaf_paths(t.body, path + ("body",))
    elif isinstance(t, (Add, Pair, Cond)):
        yield from _leaf_paths(t.left, path + ("left",))
        yield from _leaf_paths(t.right, path + ("right",))
    elif isinstance(t, (Let, LetPair)):
        yield from _leaf_paths(t.bound, path + ("bound",))
        yield from _leaf_paths(t.body, path + ("body",))


def _replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    head, rest = path[0], path[1:]
    fields = dict(t.__dict__)
    fields[head] = _replace_at(getattr(t, head), rest, new)
    return type(t)(**fields)


def plant(rng, t: Term, x: str) -> Term:
    """Replace one leaf of ``t`` by the variable ``x`` (which ``t`` never binds)."""
    paths = list(_leaf_paths(t))
    return _replace_at(t, paths[int(rng.integers(len(paths)))], Var(x))


GAUSS_LAWS = (
    "let.lin", "let.val", "pair.beta", "pair.eta", "unit.eta",
    "assoc", "comm", "id", "let.beta", "let.f", "let.pair",
)


def gauss_law_instance(rng, law: str):
    """``(ctx, lhs, rhs)`` instantiating a CD-calculus law schema with random terms."""
    base = ["x", "y"]
    ctx = (("x", R), ("y", R))
    if law == "let.lin":
        e = random_term(rng, base)
        t = plant(rng, random_term(rng, base), "w")
        return ctx, Let("w", e, t), subst(t, {"w": e})
    if law == "let.val":
        v = random_value(rng, base)
        t = random_term(rng, base + ["w"])
        return ctx, Let("w", v, t), subst(t, {"w": v})
    if law == "pair.beta":
        a, b = base[int(rng.integers(2))], base[int(rng.integers(2))]
        first = rng.random() < 0.5
        lhs = LetPair("p1", "p2", Pair(Var(a), Var(b)), Var("p1" if first else "p2"))
        return ctx, lhs, Var(a if first else b)
    if law == "pair.eta":
        ctx2 = ctx + (("p", PairTy(R, R)),)
        return ctx2, LetPair("p1", "p2", Var("p"), Pair(Var("p1"), Var("p2"))), Var("p")
    if law == "unit.eta":
        ctx2 = ctx + (("u", I),)
        return ctx2, Var("u"), Unit()
    if law == "assoc":
        e1 = random_term(rng, base)
        e2 = random_term(rng, base + ["w1"])
        e = random_term(rng, base + ["w2"])
        lhs = Let("w2", Let("w1", e1, e2), e)
        rhs = Let("w1", e1, Let("w2", e2, e))
        return ctx, lhs, rhs
    if law == "comm":
        e1, e2 = random_term(rng, base), random_term(rng, base)
        e = random_term(rng, base + ["w1", "w2"])
        return ctx, Let("w1", e1, Let("w2", e2, e)), Let("w2", e2, Let("w1", e1, e))
    if law == "id":
        e = random_term(rng, base)
        return ctx, Let("w", e, Var("w")), e
    if law == "let.beta":
        x2 = base[int(rng.integers(2))]
        e = random_term(rng, base + ["w"])
        return ctx, Let("w", Var(x2), e), subst(e, {"w": Var(x2)})
    if law == "let.f":
        if rng.random() < 0.5:
            a = _coef(rng)
            e = random_term(rng, base)
            return ctx, Scale(a, e), Let("w", e, Scale(a, Var("w")))
        s, t = random_term(rng, base), random_term(rng, base)
        rhs = Let("w", Pair(s, t), LetPair("w1", "w2", Var("w"), Cond(Var("w1"), Var("w2"))))
        return ctx, Cond(s, t), rhs
    if law == "let.pair":
        s, t = random_term(rng, base), random_term(rng, base)
        return ctx, Pair(s, t), Let("w1", s, Let("w2", t, Pair(Var("w1"), Var("w2"))))
    raise ValueError(f"unknown law {law!r}")


# ---------------------------------------------------------------- channels


def random_state(rng, n: int, rank: int | None = None, scale: int = 2) -> gauss.GaussMap:
    rank = int(rng.integers(0, n + 1)) if rank is None else rank
    B = rng.integers(-scale, scale + 1, size=(n, rank)).astype(float)
    return gauss.gauss_state(rng.integers(-3, 4, size=n).astype(float), B @ B.T)


def random_map(rng, m: int, n: int) -> gauss.GaussMap:
    A = rng.integers(-2, 3, size=(n, m)).astype(float)
    rank = int(rng.integers(0, n + 1))
    B = rng.integers(-2, 3, size=(n, rank)).astype(float)
    return gauss.GaussMap(A, rng.integers(-2, 3, size=n).astype(float), B @ B.T)


def random_channel(rng, m: int, n: int, k: int | None = None, feasible_bias: float = 0.7) -> Channel:
    """A random channel ``m ~> n`` with ``k`` condition wires.

    With probability ``feasible_bias`` the observation is drawn from the
    support of the condition wires under a standard normal input, so the
    channel does not fail outright.
    """
    k = int(rng.integers(0, 3)) if k is None else k
    f = random_map(rng, m, n + k)
    if rng.random() < feasible_bias:
        prior = gauss.compose(f, gauss.standard_normal(m))
        o = prior.b[n:] + prior.cov[n:, n:] @ rng.integers(-2, 3, size=k)
    else:
        o = rng.integers(-3, 4, size=k).astype(float)
    return Channel(f, o, n)


def random_invertible(rng, n: int) -> np.ndarray:
    while True:
        S = rng.integers(-3, 4, size=(n, n)).astype(float)
        if n == 0 or abs(np.linalg.det(S)) > 0.5:
            return S


def random_orthogonal(rng, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0))
    Q, Rm = np.linalg.qr(rng.normal(size=(n, n)))
    return Q * np.sign(np.diag(Rm))


CONDITIONING_LAWS = (
    "enforcing", "initialization", "idempotence", "aggregation",
    "tautology", "isomorphic", "commutativity",
)


def _point_in_support(rng, psi: gauss.GaussMap) -> np.ndarray:
    return psi.b + psi.cov @ rng.integers(-2, 3, size=psi.cod)


def _observe_tail(n: int, o) -> Channel:
    """``(y, k) |- (k := o); y`` for ``y`` of dimension ``n``."""
    return cond.tensor(cond.identity(n), cond.observe(o))


def conditioning_law_instance(rng, law: str) -> tuple[Channel, Channel]:
    """Two channels that a law about conditioning says are equivalent.

    Each instance embeds the law in randomly generated surrounding maps,
    so the check covers more than the bare identity.
    """
    m = int(rng.integers(0, 3))
    n = int(rng.integers(0, 3))
    k = int(rng.integers(1, 3))
    h = cond.lift(random_map(rng, m, n + k))
    o = rng.integers(-2, 3, size=k).astype(float)
    if law == "enforcing":
        # (k := o); (y, k)  ==  (k := o); (y, o)
        tail = np.hstack([np.zeros((k, n)), np.eye(k)])
        keep_k = gauss.affine(np.vstack([np.eye(n + k), tail]))
        set_o = gauss.affine(
            np.vstack([np.hstack([np.eye(n), np.zeros((n, k))]), np.zeros((k, n + k)), tail]),
            np.concatenate([np.zeros(n), o, np.zeros(k)]),
        )
        lhs = cond.compose(_observe_tail(n + k, o), cond.lift(keep_k))
        rhs = cond.compose(_observe_tail(n + k, o), cond.lift(set_o))
        return cond.compose(lhs, h), cond.compose(rhs, h)
    if law == "initialization":
        # let (y, x) = psi in (x := o); (y, x)  ==  psi|_K(o) (x) o   when o << psi_K
        psi = random_state(rng, n + k)
        o = _point_in_support(rng, gauss.marginal(psi, range(n, n + k)))
        copy_k = gauss.tensor(gauss.identity(n), gauss.copy(k))
        lhs = cond.compose(_observe_tail(n + k, o), cond.lift(gauss.compose(copy_k, psi)))
        post = gauss.conditional(psi, k)(o)
        rhs = cond.lift(gauss.tensor(post, gauss.const(o)))
        return lhs, rhs
    if law == "idempotence":
        # (k := o); (k := o)  ==  (k := o)
        twice = gauss.tensor(gauss.identity(n), gauss.copy(k))
        lhs = cond.compose(_observe_tail(n, np.concatenate([o, o])), cond.compose(cond.lift(twice), h))
        rhs = cond.compose(_observe_tail(n, o), h)
        return lhs, rhs
    if law == "aggregation":
        # (k1 := o1); (k2 := o2)  ==  ((k1, k2) := (o1, o2))
        k2 = int(rng.integers(1, 3))
        h = cond.lift(random_map(rng, m, n + k + k2))
        o2 = rng.integers(-2, 3, size=k2).astype(float)
        first = _observe_tail(n + k, o2)
        second = _observe_tail(n, o)
        lhs = cond.compose(second, cond.compose(first, h))
        rhs = cond.compose(_observe_tail(n, np.concatenate([o, o2])), h)
        return lhs, rhs
    if law == "tautology":
        # (psi := o) is a no-op when o << psi
        psi = random_state(rng, k)
        o = _point_in_support(rng, psi)
        c = random_channel(rng, m, n)
        effect = cond.compose(cond.observe(o), cond.lift(psi))
        return cond.tensor(c, effect), c
    if law == "isomorphic":
        # (k := o)  ==  (alpha k := alpha o) for invertible alpha
        alpha = random_invertible(rng, k)
        lhs = cond.compose(_observe_tail(n, o), h)
        moved = cond.lift(gauss.tensor(gauss.identity(n), gauss.affine(alpha)))
        rhs = cond.compose(_observe_tail(n, alpha @ o), cond.compose(moved, h))
        return lhs, rhs
    if law == "commutativity":
        # let y1 = c1 in let y2 = c2 in (y1, y2)  ==  let y2 = c2 in let y1 = c1 in (y1, y2)
        n2 = int(rng.integers(0, 3))
        c1, c2 = random_channel(rng, m, n), random_channel(rng, m, n2)
        lhs = cond.pair(c1, c2)
        rhs = cond.compose(cond.lift(gauss.swap(n2, n)), cond.pair(c2, c1))
        return lhs, rhs
    raise ValueError(f"unknown law {law!r}")


# ---------------------------------------------------------------- closing contexts


def _components(ty, name: str, counter: list):
    """Let-pair bindings that expose the real components of a variable of type ``ty``."""
    if ty == R:
        return [name], []
    if ty == I:
        return [], []
    a, b = f"c{counter[0]}", f"c{counter[0] + 1}"
    counter[0] += 2
    binds = [(a, b, name)]
    la, ba = _components(ty.left, a, counter)
    lb, bb = _components(ty.right, b, counter)
    return la + lb, binds + ba + bb


def random_context(rng, ty):
    """A closing context ``K[-]`` for holes of type ``ty``: ``let h = [-] in body``.

    The body observes and transforms the components of the hole's value,
    possibly allocating fresh latent variables.
    """
    counter = [0]
    comps, binds = _components(ty, "h", counter)
    names = list(comps)
    stmts: list[tuple] = []
    for _ in range(int(rng.integers(0, 3))):
        v = f"c{counter[0]}"
        counter[0] += 1
        stmts.append(("let", v, Add(random_affine(rng, names) if names else Const(0.0), Normal())))
        names.append(v)
    for _ in range(int(rng.integers(0, 3))):
        if not names:
            break
        stmts.append(("seq", Cond(random_affine(rng, names, const=False), Const(float(rng.integers(-2, 3)))), None))
    ret = tuple_term([random_affine(rng, names) for _ in range(int(rng.integers(1, 3)))]) if names else Unit()

    def fill(t: Term) -> Term:
        body = ret
        for kind, a, b in reversed(stmts):
            body = Let(a, b, body) if kind == "let" else Let("_", a, body)
        for a, b, src in reversed(binds):
            body = LetPair(a, b, Var(src), body)
        return Let("h", t, body)

    return fill


# ---------------------------------------------------------------- random walk


def walk_program(n: int, obs: dict[int, float], interleaved: bool = False) -> Term:
    """``y0 = 0``, ``y_i = y_{i-1} + normal()`` for ``i < n``, conditions ``y_j =:= obs[j]``.

    Returns ``(y0, ..., y_{n-1})``.  With ``interleaved`` each condition
    follows the step that defines its variable; otherwise all conditions
    come after the walk.
    """
    for j in obs:
        if not 1 <= j < n:
            raise ValueError(f"observation index {j} outside [1, {n})")
    stmts: list[tuple] = [("let", "y0", Const(0.0))]
    for i in range(1, n):
        stmts.append(("let", f"y{i}", Add(Var(f"y{i - 1}"), Normal())))
        if interleaved and i in obs:
            stmts.append(("seq", Cond(Var(f"y{i}"), Const(float(obs[i]))), None))
    if not interleaved:
        for j in sorted(obs):
            stmts.append(("seq", Cond(Var(f"y{j}"), Const(float(obs[j]))), None))
    body = tuple_term([Var(f"y{i}") for i in range(n)])
    for kind, a, b in reversed(stmts):
        body = Let(a, b, body) if kind == "let" else Let("_", a, body)
    return body


# ---------------------------------------------------------------- finite programs

_PROBS = tuple(Fraction(k, 5) for k in range(6)) + (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3))


def _prob(rng) -> Fraction:
    return _PROBS[int(rng.integers(len(_PROBS)))]


def random_fin_expr(rng, names) -> fl.PTerm:
    """A deterministic boolean expression over boolean variables."""
    r = rng.random()
    if not names or r < 0.15:
        return fl.TRUE if rng.random() < 0.5 else fl.FALSE
    v = fl.FVar(names[int(rng.integers(len(names)))])
    if r < 0.6:
        return v
    if r < 0.75:
        return fl.FPrim("not", (v,))
    w = fl.FVar(names[int(rng.integers(len(names)))])
    op = ("and", "or", "eq")[int(rng.integers(3))]
    return fl.FPrim(op, (v, w))


def random_fin_program(rng, max_choices: int = 4, branching: bool = False) -> fl.PTerm:
    """A random closed finite program with at most ``max_choices`` coin flips.

    Conditions, scores and (if ``branching``) if-then-else appear at random.
    """
    names: list[str] = []
    stmts: list[tuple] = []
    for i in range(int(rng.integers(1, max_choices + 1))):
        v = f"b{i}"
        stmts.append(("let", v, fl.bernoulli(_prob(rng))))
        names.append(v)
        r = rng.random()
        if r < 0.35:
            stmts.append(("seq", fl.FCond(random_fin_expr(rng, names), random_fin_expr(rng, names))))
        elif r < 0.5:
            stmts.append(("seq", fl.FScore(_prob(rng))))
        elif branching and r < 0.7:
            w = f"c{i}"
            then = fl.fseq(fl.FScore(_prob(rng)), random_fin_expr(rng, names))
            orelse = fl.fseq(fl.FCond(random_fin_expr(rng, names), fl.TRUE), random_fin_expr(rng, names))
            stmts.append(("let", w, fl.FIf(random_fin_expr(rng, names), then, orelse)))
            names.append(w)
    if rng.random() < 0.5 and len(names) >= 2:
        ret: fl.PTerm = fl.FPair(random_fin_expr(rng, names), random_fin_expr(rng, names))
    else:
        ret = random_fin_expr(rng, names)
    out = ret
    for st in reversed(stmts):
        out = fl.FLet(st[1], st[2], out) if st[0] == "let" else fl.FLet("_", st[1], out)
    return out


def random_fin_term(rng, names, depth: int = 2) -> fl.PTerm:
    """A random boolean term (possibly effectful) over boolean variables ``names``."""
    if depth <= 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.4:
            return fl.bernoulli(_prob(rng))
        return random_fin_expr(rng, names)
    r = rng.random()
    if r < 0.35:
        v = _fresh(names)
        return fl.FLet(v, random_fin_term(rng, names, depth - 1), random_fin_term(rng, names + [v], depth - 1))
    if r < 0.55:
        c = fl.FCond(random_fin_term(rng, names, 0), random_fin_term(rng, names, 0))
        return fl.fseq(c, random_fin_term(rng, names, depth - 1))
    if r < 0.7:
        return fl.fseq(fl.FScore(_prob(rng)), random_fin_term(rng, names, depth - 1))
    if r < 0.85:
        return fl.FPrim("not", (random_fin_term(rng, names, depth - 1),))
    op = ("and", "or", "eq")[int(rng.integers(3))]
    return fl.FPrim(op, (random_fin_term(rng, names, depth - 1), random_fin_term(rng, names, depth - 1)))


def _fin_subst(t: fl.PTerm, x: str, e: fl.PTerm) -> fl.PTerm:
    """Substitution for generated finite terms, whose binders never clash with ``x``."""
    if isinstance(t, fl.FVar):
        return e if t.name == x else t
    if isinstance(t, (fl.FConst, fl.FSample, fl.FScore)):
        return t
    if isinstance(t, (fl.FPair, fl.FCond)):
        return type(t)(_fin_subst(t.left, x, e), _fin_subst(t.right, x, e))
    if isinstance(t, fl.FLet):
        body = t.body if t.name == x else _fin_subst(t.body, x, e)
        return fl.FLet(t.name, _fin_subst(t.bound, x, e), body)
    if isinstance(t, fl.FLetPair):
        body = t.body if x in (t.left, t.right) else _fin_subst(t.body, x, e)
        return fl.FLetPair(t.left, t.right, _fin_subst(t.bound, x, e), body)
    if isinstance(t, fl.FPrim):
        return fl.FPrim(t.op, tuple(_fin_subst(a, x, e) for a in t.args))
    if isinstance(t, fl.FIf):
        return fl.FIf(*(_fin_subst(a, x, e) for a in (t.cond, t.then, t.orelse)))
    raise TypeError(t)


def _fin_count(t: fl.PTerm, x: str) -> int:
    if isinstance(t, fl.FVar):
        return int(t.name == x)
    if isinstance(t, fl.FLet):
        return _fin_count(t.bound, x) + (0 if t.name == x else _fin_count(t.body, x))
    if isinstance(t, fl.FLetPair):
        return _fin_count(t.bound, x) + (0 if x in (t.left, t.right) else _fin_count(t.body, x))
    return sum(_fin_count(c, x) for c in fl._children(t))


FIN_LAWS = ("let.lin", "let.val", "pair.beta", "pair.eta", "unit.eta", "assoc", "comm", "id", "let.beta", "let.f", "let.pair")


def fin_law_instance(rng, law: str):
    """``(ctx, lhs, rhs)`` for a CD-calculus law over booleans."""
    base = ["a", "b"]
    ctx = (("a", fl.BOOL), ("b", fl.BOOL))
    if law == "let.lin":
        e = random_fin_term(rng, base)
        for _ in range(100):
            t = random_fin_term(rng, base + ["w"])
            if _fin_count(t, "w") == 1:
                break
        else:
            t = fl.FPrim("not", (fl.FVar("w"),))
        return ctx, fl.FLet("w", e, t), _fin_subst(t, "w", e)
    if law == "let.val":
        v = random_fin_expr(rng, base)
        t = random_fin_term(rng, base + ["w"])
        return ctx, fl.FLet("w", v, t), _fin_subst(t, "w", v)
    if law == "pair.beta":
        first = rng.random() < 0.5
        lhs = fl.FPrim("fst" if first else "snd", (fl.FPair(fl.FVar("a"), fl.FVar("b")),))
        return ctx, lhs, fl.FVar("a" if first else "b")
    if law == "pair.eta":
        ctx2 = ctx + (("p", fl.PairT(fl.BOOL, fl.BOOL)),)
        p = fl.FVar("p")
        return ctx2, fl.FPair(fl.FPrim("fst", (p,)), fl.FPrim("snd", (p,))), p
    if law == "unit.eta":
        ctx2 = ctx + (("u", fl.UNIT),)
        return ctx2, fl.FVar("u"), fl.UNIT_V
    if law == "assoc":
        e1 = random_fin_term(rng, base)
        e2 = random_fin_term(rng, base + ["w1"])
        e = random_fin_term(rng, base + ["w2"])
        return ctx, fl.FLet("w2", fl.FLet("w1", e1, e2), e), fl.FLet("w1", e1, fl.FLet("w2", e2, e))
    if law == "comm":
        e1, e2 = random_fin_term(rng, base), random_fin_term(rng, base)
        e = random_fin_term(rng, base + ["w1", "w2"])
        return ctx, fl.FLet("w1", e1, fl.FLet("w2", e2, e)), fl.FLet("w2", e2, fl.FLet("w1", e1, e))
    if law == "id":
        e = random_fin_term(rng, base)
        return ctx, fl.FLet("w", e, fl.FVar("w")), e
    if law == "let.beta":
        x2 = base[int(rng.integers(2))]
        e = random_fin_term(rng, base + ["w"])
        return ctx, fl.FLet("w", fl.FVar(x2), e), _fin_subst(e, "w", fl.FVar(x2))
    if law == "let.f":
        e = random_fin_term(rng, base)
        return ctx, fl.FPrim("not", (e,)), fl.FLet("w", e, fl.FPrim("not", (fl.FVar("w"),)))
    if law == "let.pair":
        s, t = random_fin_term(rng, base), random_fin_term(rng, base)
        return ctx, fl.FPair(s, t), fl.FLet("w1", s, fl.FLet("w2", t, fl.FPair(fl.FVar("w1"), fl.FVar("w2"))))
    raise ValueError(f"unknown law {law!r}")


def random_subkernel(rng, dom, cod):
    """A random subprobability kernel with small-denominator rational entries."""
    from .finprob.kernels import SubKernel

    cols = {}
    for x in dom:
        weights = [int(rng.integers(0, 4)) for _ in cod]
        total = sum(weights) + int(rng.integers(0, 3))
        cols[x] = {y: Fraction(w, total) if total else Fraction(0) for y, w in zip(cod, weights)}
    return SubKernel.from_columns(dom, cod, cols)


def random_subdist(rng, space):
    from .finprob.kernels import SubDist

    weights = [int(rng.integers(0, 4)) for _ in space]
    total = sum(weights) + int(rng.integers(0, 3))
    if total == 0:
        return SubDist(tuple(space), (0,) * len(space))
    return SubDist(tuple(space), tuple(Fraction(w, total) for w in weights))


def typechecks(t: Term, ctx=()) -> bool:
    try:
        typecheck(ctx, t)
    except Exception:
        return False
    return True


__all__ = [
    "random_affine", "random_program", "random_term", "random_value", "plant", "count_free",
    "GAUSS_LAWS", "gauss_law_instance", "random_state", "random_map", "random_channel",
    "random_invertible", "random_orthogonal", "CONDITIONING_LAWS", "conditioning_law_instance", "random_context", "walk_program",
    "random_fin_program", "random_fin_term", "FIN_LAWS", "fin_law_instance",
    "random_subkernel", "random_subdist", "free_vars",
]
