"""Algebraic form of Gaussian programs, axiom rewrites and normal forms.

An ``AlgTerm`` over free variables ``x1..xm`` is the flat program

    nu z1 .. zr. (L1 . (x, z) =:= c1) ... (Lk . (x, z) =:= ck) r[D (x, z) + d]

with all latent variables hoisted to the front and all conditions
collected in order.  ``rewrite`` applies one axiom of the equational
theory to such a term; ``normalize_closed`` and ``normalize_effect``
chain those rewrites into the normal forms for closed terms and for
effects (terms of type unit).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import cond, gauss, numlin
from .cond import BOTTOM, Channel, _Bottom
from .lang import (
    Add, Cond, Const, Let, LetPair, Normal, Pair, Scale, Term, Unit, Var,
    dim, typecheck,
)


class NotApplicable(Exception):
    """The axiom's side condition does not hold at the requested position."""


class Axiom(enum.Enum):
    DISC = "DISC"
    ORTH = "ORTH"
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    TAUT = "TAUT"
    FAIL = "FAIL"
    SUBS = "SUBS"
    INIT = "INIT"
    CONG = "CONG"


def _ro(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _rows(M, w: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return M if M.ndim == 2 else M.reshape(-1, w) if w else np.zeros((0, 0))


@dataclass(frozen=True, eq=False)
class AlgTerm:
    n_free: int
    n_latent: int
    cond_L: np.ndarray
    cond_c: np.ndarray
    ret_D: np.ndarray
    ret_d: np.ndarray

    def __post_init__(self):
        w = self.n_free + self.n_latent
        L = numlin.as_matrix(_rows(self.cond_L, w), None, w)
        D = numlin.as_matrix(_rows(self.ret_D, w), None, w)
        object.__setattr__(self, "cond_L", _ro(L))
        object.__setattr__(self, "cond_c", _ro(numlin.as_vector(self.cond_c, L.shape[0])))
        object.__setattr__(self, "ret_D", _ro(D))
        object.__setattr__(self, "ret_d", _ro(numlin.as_vector(self.ret_d, D.shape[0])))

    @property
    def n_cond(self) -> int:
        return self.cond_L.shape[0]

    @property
    def n_out(self) -> int:
        return self.ret_D.shape[0]

    def replace(self, **kw) -> "AlgTerm":
        fields = dict(
            n_free=self.n_free, n_latent=self.n_latent, cond_L=self.cond_L,
            cond_c=self.cond_c, ret_D=self.ret_D, ret_d=self.ret_d,
        )
        fields.update(kw)
        return AlgTerm(**fields)

    def __repr__(self) -> str:
        return f"AlgTerm({pretty_alg(self)!r})"


AlgResult = AlgTerm | _Bottom


# ---------------------------------------------------------------- translation


class _Translator:
    """Symbolic evaluation to affine rows over ``(x, z)``; rows are sparse dicts."""

    def __init__(self, m: int):
        self.m = m
        self.r = 0
        self.conds: list[tuple[dict, float]] = []

    def ev(self, t: Term, env: dict, ctx: tuple):
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Const):
            return [({}, float(t.value))]
        if isinstance(t, Unit):
            return []
        if isinstance(t, Normal):
            j = self.m + self.r
            self.r += 1
            return [({j: 1.0}, 0.0)]
        if isinstance(t, Scale):
            ((u, c),) = self.ev(t.body, env, ctx)
            return [({k: t.alpha * v for k, v in u.items()}, t.alpha * c)]
        if isinstance(t, Add):
            ((u1, c1),) = self.ev(t.left, env, ctx)
            ((u2, c2),) = self.ev(t.right, env, ctx)
            return [(_add(u1, u2), c1 + c2)]
        if isinstance(t, Pair):
            return self.ev(t.left, env, ctx) + self.ev(t.right, env, ctx)
        if isinstance(t, Cond):
            ((u1, c1),) = self.ev(t.left, env, ctx)
            ((u2, c2),) = self.ev(t.right, env, ctx)
            self.conds.append((_add(u1, {k: -v for k, v in u2.items()}), c2 - c1))
            return []
        if isinstance(t, Let):
            ty = typecheck(ctx, t.bound)
            rows = self.ev(t.bound, env, ctx)
            return self.ev(t.body, {**env, t.name: rows}, ctx + ((t.name, ty),))
        if isinstance(t, LetPair):
            ty = typecheck(ctx, t.bound)
            rows = self.ev(t.bound, env, ctx)
            k = dim(ty.left)
            inner = ctx + ((t.left, ty.left), (t.right, ty.right))
            return self.ev(t.body, {**env, t.left: rows[:k], t.right: rows[k:]}, inner)
        raise TypeError(f"not a term: {t!r}")


def _add(u: dict, v: dict) -> dict:
    out = dict(u)
    for k, x in v.items():
        out[k] = out.get(k, 0.0) + x
    return out


def to_alg(ctx, t: Term) -> AlgTerm:
    """Hoist all latent variables and conditions of ``t`` to the front."""
    ctx = tuple(ctx)
    typecheck(ctx, t)
    env = {}
    off = 0
    for name, ty in ctx:
        k = dim(ty)
        env[name] = [({off + i: 1.0}, 0.0) for i in range(k)]
        off += k
    tr = _Translator(off)
    rows = tr.ev(t, env, ctx)
    w = off + tr.r

    def dense(items):
        M = np.zeros((len(items), w))
        for i, (u, _) in enumerate(items):
            for k, v in u.items():
                M[i, k] = v
        return M

    return AlgTerm(
        off, tr.r,
        dense(tr.conds), [c for _, c in tr.conds],
        dense(rows), [c for _, c in rows],
    )


def channel_of(a: AlgResult, n_free: int | None = None, n_out: int | None = None) -> Channel:
    """The conditioning channel denoted by an algebraic term."""
    if a is BOTTOM:
        if n_free is None or n_out is None:
            raise ValueError("channel_of(BOTTOM) needs the dimensions")
        f = gauss.affine(np.zeros((n_out + 1, n_free)))
        return Channel(f, [1.0], n_out)
    m, r = a.n_free, a.n_latent
    M = np.vstack([a.ret_D, a.cond_L])
    Mx, Mz = M[:, :m], M[:, m:]
    b = np.concatenate([a.ret_d, np.zeros(a.n_cond)])
    f = gauss.GaussMap(Mx, b, Mz @ Mz.T)
    return Channel(f, a.cond_c, a.n_out)


# ---------------------------------------------------------------- rewrites


def _tol(tol):
    return numlin.default_tol() if tol is None else tol


def _zero_row(row, tol) -> bool:
    return row.size == 0 or float(np.abs(row).max()) <= tol


def rewrite(a: AlgResult, axiom: Axiom | str, tol: float | None = None, **params) -> AlgResult:
    """Apply one axiom, left to right, at the position given by ``params``.

    ``DISC(latent=j)``
        drop a latent variable no condition or output mentions.
    ``ORTH(U=...)``
        change latent coordinates ``z := U w`` for an orthogonal ``U``.
    ``C1(i=, j=)``
        exchange two conditions.
    ``C2()``, ``C3()``
        latent allocation commutes with conditions and failure absorbs
        conditions; both are built into the flat form, so ``C2`` returns
        its argument and ``C3`` applies only to ``BOTTOM``.
    ``TAUT(i=)`` / ``FAIL(i=)``
        drop the trivially true condition ``0 =:= 0`` or fail on ``0 =:= c``
        with ``c != 0``.
    ``SUBS(i=, out=, coef=)``
        add ``coef * (lhs_i - rhs_i)`` to output ``out``, which is valid
        once condition ``i`` holds.
    ``INIT(i=)``
        condition ``i`` reads ``alpha * z_j =:= c``: substitute ``z_j`` by
        ``c / alpha`` everywhere and drop the latent and the condition.
    ``CONG(S=)`` or ``CONG(system=(L, c))``
        replace the conditions by an equivalent system: ``S`` invertible, or
        an explicit system with the same solution set.
    """
    ax = Axiom(axiom.value if isinstance(axiom, Axiom) else axiom)
    t = _tol(tol)
    if ax is Axiom.C3:
        if a is not BOTTOM:
            raise NotApplicable("C3 rewrites only the failed term")
        return BOTTOM
    if a is BOTTOM:
        raise NotApplicable(f"{ax.value} does not apply to the failed term")
    m, r = a.n_free, a.n_latent
    L, c, D, d = a.cond_L, a.cond_c, a.ret_D, a.ret_d

    if ax is Axiom.C2:
        return a
    if ax is Axiom.DISC:
        j = params["latent"]
        if not 0 <= j < r:
            raise NotApplicable(f"no latent {j}")
        col = m + j
        if not (_zero_row(L[:, col], t) and _zero_row(D[:, col], t)):
            raise NotApplicable("latent is still used")
        keep = [k for k in range(m + r) if k != col]
        return a.replace(n_latent=r - 1, cond_L=L[:, keep], ret_D=D[:, keep])
    if ax is Axiom.ORTH:
        U = numlin.as_matrix(params["U"], r, r)
        if not numlin.allclose(U.T @ U, np.eye(r), t):
            raise NotApplicable("U is not orthogonal")
        L2, D2 = L.copy(), D.copy()
        L2[:, m:] = L[:, m:] @ U
        D2[:, m:] = D[:, m:] @ U
        return a.replace(cond_L=L2, ret_D=D2)
    if ax is Axiom.C1:
        i, j = params["i"], params["j"]
        if not (0 <= i < a.n_cond and 0 <= j < a.n_cond):
            raise NotApplicable("no such condition")
        order = list(range(a.n_cond))
        order[i], order[j] = order[j], order[i]
        return a.replace(cond_L=L[order], cond_c=c[order])
    if ax in (Axiom.TAUT, Axiom.FAIL):
        i = params["i"]
        if not 0 <= i < a.n_cond:
            raise NotApplicable("no such condition")
        if not _zero_row(L[i], t * max(1.0, float(np.abs(L).max(initial=0.0)))):
            raise NotApplicable("condition mentions variables")
        trivial = abs(c[i]) <= t * max(1.0, float(np.abs(c).max()))
        if ax is Axiom.TAUT:
            if not trivial:
                raise NotApplicable("condition is 0 =:= c with c != 0")
            keep = [k for k in range(a.n_cond) if k != i]
            return a.replace(cond_L=L[keep], cond_c=c[keep])
        if trivial:
            raise NotApplicable("condition is a tautology")
        return BOTTOM
    if ax is Axiom.SUBS:
        i, o, coef = params["i"], params["out"], float(params.get("coef", 1.0))
        if not (0 <= i < a.n_cond and 0 <= o < a.n_out):
            raise NotApplicable("no such condition or output")
        D2, d2 = D.copy(), d.copy()
        D2[o] += coef * L[i]
        d2[o] -= coef * c[i]
        return a.replace(ret_D=D2, ret_d=d2)
    if ax is Axiom.INIT:
        i = params["i"]
        if not 0 <= i < a.n_cond:
            raise NotApplicable("no such condition")
        row = L[i]
        scale = max(1.0, float(np.abs(row).max()))
        nz = np.flatnonzero(np.abs(row) > t * scale)
        if nz.size != 1 or nz[0] < m:
            raise NotApplicable("condition is not of the form alpha * z =:= c")
        col = int(nz[0])
        val = c[i] / row[col]
        keep_rows = [k for k in range(a.n_cond) if k != i]
        keep_cols = [k for k in range(m + r) if k != col]
        c2 = c[keep_rows] - L[keep_rows, col] * val
        d2 = d + D[:, col] * val
        return a.replace(
            n_latent=r - 1,
            cond_L=L[np.ix_(keep_rows, keep_cols)],
            cond_c=c2,
            ret_D=D[:, keep_cols],
            ret_d=d2,
        )
    if ax is Axiom.CONG:
        if "S" in params:
            S = numlin.as_matrix(params["S"], a.n_cond, a.n_cond)
            if a.n_cond and np.linalg.matrix_rank(S, tol=numlin.EIG_RTOL * max(1.0, np.abs(S).max())) < a.n_cond:
                raise NotApplicable("S is not invertible")
            return a.replace(cond_L=S @ L, cond_c=S @ c)
        L2, c2 = params["system"]
        L2 = numlin.as_matrix(L2, None, m + r)
        c2 = numlin.as_vector(c2, L2.shape[0])
        if not same_solutions(L, c, L2, c2, t):
            raise NotApplicable("the systems have different solution sets")
        return a.replace(cond_L=L2, cond_c=c2)
    raise NotApplicable(ax.value)


def _reduced(L, c, tol):
    """RREF of ``[L | c]`` restricted to nonzero rows, or None if inconsistent."""
    R, S = numlin.rref_transform(L)
    c2 = S @ c
    p = len(numlin.pivot_columns(R))
    scale = max(1.0, float(np.abs(c).max(initial=0.0)), float(np.abs(c2).max(initial=0.0)))
    if np.any(np.abs(c2[p:]) > tol * scale):
        return None
    return R[:p], c2[:p]


def same_solutions(L1, c1, L2, c2, tol: float | None = None) -> bool:
    """True iff ``L1 v = c1`` and ``L2 v = c2`` have the same solution set."""
    t = _tol(tol)
    a, b = _reduced(np.asarray(L1, float), np.asarray(c1, float), t), _reduced(np.asarray(L2, float), np.asarray(c2, float), t)
    if a is None or b is None:
        return a is None and b is None
    return a[0].shape == b[0].shape and numlin.allclose(a[0], b[0], t) and numlin.allclose(a[1], b[1], t)


# ---------------------------------------------------------------- normal forms


@dataclass(frozen=True, eq=False)
class ClosedNF:
    """``nu z. r[A z + c]`` recorded through its invariants ``c`` and ``A A^T``."""

    c: np.ndarray
    M: np.ndarray

    def __repr__(self) -> str:
        return f"ClosedNF(c={self.c.tolist()}, M={self.M.tolist()})"


@dataclass(frozen=True, eq=False)
class EffectNF:
    """``nu z. (A x =:= B z + c)`` with ``A`` in RREF; stores ``A``, ``c`` and ``B B^T``."""

    A: np.ndarray
    c: np.ndarray
    M: np.ndarray

    def __repr__(self) -> str:
        return f"EffectNF(A={self.A.tolist()}, c={self.c.tolist()}, M={self.M.tolist()})"


@dataclass(frozen=True, eq=False)
class OpenNF:
    """Conditioning-free ``nu z. r[A x + B z + c]``; stores ``A``, ``c`` and ``B B^T``."""

    A: np.ndarray
    c: np.ndarray
    M: np.ndarray


def normalize_closed(a: AlgResult, tol: float | None = None, log: list | None = None):
    """Closed normal form, or ``BOTTOM``.

    Rotates the latent space so the conditions read ``w_1..w_k =:= c`` and
    ``0 =:= c'``; the first block is eliminated with INIT, the second with
    TAUT or FAIL, and what remains is a conditioning-free return.
    """
    if a is BOTTOM:
        return BOTTOM
    if a.n_free != 0:
        raise ValueError("normalize_closed expects a closed term")
    t = _tol(tol)
    note = log.append if log is not None else (lambda _: None)
    Lz = a.cond_L
    S, T, k = numlin.rank_split(Lz)
    if a.n_cond and a.n_latent:
        a = rewrite(a, Axiom.ORTH, tol=t, U=T.T)
        note("ORTH")
        a = rewrite(a, Axiom.CONG, tol=t, S=S)
        note("CONG")
        # snap the rotated system to its exact block shape
        L = np.zeros_like(a.cond_L)
        L[np.arange(k), np.arange(k)] = 1.0
        a = a.replace(cond_L=L)
    # conditions k.. mention no latent: TAUT or FAIL
    for i in reversed(range(k, a.n_cond)):
        try:
            a = rewrite(a, Axiom.TAUT, tol=t, i=i)
            note("TAUT")
        except NotApplicable:
            note("FAIL")
            return rewrite(a, Axiom.FAIL, tol=t, i=i)
    for _ in range(k):
        a = rewrite(a, Axiom.INIT, tol=t, i=0)
        note("INIT")
    D = a.ret_D
    return ClosedNF(_ro(a.ret_d), _ro(numlin.clamp_psd(D @ D.T)))


def normalize_free(a: AlgResult) -> OpenNF:
    """Normal form of a conditioning-free term: ``(A, c, B B^T)``."""
    if a is BOTTOM or a.n_cond:
        raise ValueError("normalize_free expects a conditioning-free term")
    m = a.n_free
    B = a.ret_D[:, m:]
    return OpenNF(_ro(a.ret_D[:, :m]), _ro(a.ret_d), _ro(numlin.clamp_psd(B @ B.T)))


def normalize_effect(a: AlgResult, tol: float | None = None, log: list | None = None):
    """Effect normal form ``(A, c, B B^T)``, or ``BOTTOM``."""
    if a is BOTTOM:
        return BOTTOM
    if a.n_out != 0:
        raise ValueError("normalize_effect expects a term of unit type")
    t = _tol(tol)
    note = log.append if log is not None else (lambda _: None)
    m, r = a.n_free, a.n_latent
    R, S = numlin.rref_transform(a.cond_L[:, :m])
    p = len(numlin.pivot_columns(R))
    if a.n_cond:
        a = rewrite(a, Axiom.CONG, tol=t, S=S)
        note("CONG")
        L = a.cond_L.copy()
        L[:, :m] = R
        a = a.replace(cond_L=L)
    L, c = a.cond_L, a.cond_c
    # the rows without x: a closed problem over z, returning the residuals of the first p rows
    closed = AlgTerm(0, r, L[p:, m:], c[p:], -L[:p, m:], c[:p])
    nf = normalize_closed(closed, t, log)
    if nf is BOTTOM:
        return BOTTOM
    return EffectNF(_ro(R[:p]), nf.c, nf.M)


def closed_nf_equal(a, b, tol: float | None = None) -> bool:
    if a is BOTTOM or b is BOTTOM:
        return a is b
    return numlin.allclose(a.c, b.c, tol) and numlin.allclose(a.M, b.M, tol)


def effect_nf_equal(a, b, tol: float | None = None) -> bool:
    if a is BOTTOM or b is BOTTOM:
        return a is b
    return (
        a.A.shape == b.A.shape
        and numlin.allclose(a.A, b.A, tol)
        and numlin.allclose(a.c, b.c, tol)
        and numlin.allclose(a.M, b.M, tol)
    )


def alg_equiv(t1: Term, t2: Term, ctx=(), tol: float | None = None) -> bool:
    """Equivalence of two terms in the same context via normal forms.

    Closed terms compare closed normal forms, effects compare effect normal
    forms, conditioning-free terms compare ``(A, c, B B^T)``; anything else
    falls back to comparing canonical forms of the denotations.
    """
    from . import denot

    ctx = tuple(ctx)
    ty1, ty2 = typecheck(ctx, t1), typecheck(ctx, t2)
    if ty1 != ty2:
        raise TypeError(f"type mismatch: {ty1!r} vs {ty2!r}")
    a1, a2 = to_alg(ctx, t1), to_alg(ctx, t2)
    if a1.n_free == 0:
        return closed_nf_equal(normalize_closed(a1, tol), normalize_closed(a2, tol), tol)
    if a1.n_out == 0:
        return effect_nf_equal(normalize_effect(a1, tol), normalize_effect(a2, tol), tol)
    if a1.n_cond == 0 and a2.n_cond == 0:
        f1, f2 = normalize_free(a1), normalize_free(a2)
        return all(numlin.allclose(getattr(f1, k), getattr(f2, k), tol) for k in ("A", "c", "M"))
    return cond.equiv(denot.denote(ctx, t1), denot.denote(ctx, t2), tol)


# ---------------------------------------------------------------- printing


def _fmt(x: float) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.12g}"


def _affine_str(row, const: float, names) -> str:
    parts = []
    for coef, name in zip(row, names):
        if coef == 0:
            continue
        if coef == 1:
            parts.append(name)
        elif coef == -1:
            parts.append(f"-{name}")
        else:
            parts.append(f"{_fmt(coef)}*{name}")
    if const != 0 or not parts:
        parts.append(_fmt(const))
    return " + ".join(parts).replace("+ -", "- ")


def pretty_alg(a: AlgResult) -> str:
    """``x1, x2 |- nu z1 z2. (lhs =:= c) ... r[e1, e2]``."""
    if a is BOTTOM:
        return "bottom"
    names = [f"x{i + 1}" for i in range(a.n_free)] + [f"z{j + 1}" for j in range(a.n_latent)]
    head = ", ".join(names[: a.n_free]) + " |- " if a.n_free else ""
    nu = f"nu {' '.join(names[a.n_free:])}. " if a.n_latent else ""
    conds = "".join(
        f"({_affine_str(row, 0.0, names)} =:= {_fmt(c)}) " for row, c in zip(a.cond_L, a.cond_c)
    )
    ret = ", ".join(_affine_str(row, c, names) for row, c in zip(a.ret_D, a.ret_d))
    return f"{head}{nu}{conds}r[{ret}]"


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """A representative ``A`` with ``A A^T = M`` (symmetric square root, zero columns dropped)."""
    if M.shape[0] == 0:
        return np.zeros((0, 0))
    w, Q = np.linalg.eigh(M)
    keep = w > numlin.EIG_RTOL * max(1.0, float(w.max(initial=0.0)))
    return Q[:, keep] * np.sqrt(w[keep])


def pretty_nf(nf) -> str:
    """Text form of a normal form.

    ``ClosedNF``: ``nu w1 .. wk. r[...]`` followed by ``c`` and ``AA^T`` lines.
    ``EffectNF``: ``x1 .. xm |- nu w... (A x =:= B w + c)`` followed by
    ``A``, ``c`` and ``BB^T`` lines.
    """
    if nf is BOTTOM:
        return "bottom\n"
    if isinstance(nf, ClosedNF):
        A = psd_sqrt(nf.M)
        k = A.shape[1]
        names = [f"w{j + 1}" for j in range(k)]
        nu = f"nu {' '.join(names)}. " if k else ""
        ret = ", ".join(_affine_str(row, c, names) for row, c in zip(A, nf.c))
        return f"{nu}r[{ret}]\nc = {_vec(nf.c)}\nAA^T = {_mat(nf.M)}\n"
    if isinstance(nf, EffectNF):
        B = psd_sqrt(nf.M)
        k = B.shape[1]
        m = nf.A.shape[1]
        xs = [f"x{i + 1}" for i in range(m)]
        ws = [f"w{j + 1}" for j in range(k)]
        nu = f"nu {' '.join(ws)}. " if k else ""
        conds = " ".join(
            f"({_affine_str(a, 0.0, xs)} =:= {_affine_str(b, c, ws)})" for a, b, c in zip(nf.A, B, nf.c)
        )
        return f"{', '.join(xs)} |- {nu}{conds or 'r[]'}\nA = {_mat(nf.A)}\nc = {_vec(nf.c)}\nBB^T = {_mat(nf.M)}\n"
    raise TypeError(f"not a normal form: {nf!r}")


def _vec(v) -> str:
    return "[" + ", ".join(_fmt(x) for x in v) + "]"


def _mat(M) -> str:
    return "[" + ", ".join(_vec(r) for r in M) + "]"
