"""Small-step operational semantics of the Gaussian language.

A running configuration pairs a term whose free variables are latent
names ``z1 .. zr`` with a Gaussian state on ``R^r``.  ``normal()``
allocates a new latent coordinate, ``v =:= w`` conditions the state on
the affine constraint ``v - w = 0`` and lets substitute values.  Failed
conditions produce ``BOTTOM``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import gauss, numlin
from .cond import BOTTOM, _Bottom
from .gauss import GaussMap
from .lang import (
    Add, Cond, Const, Let, LetPair, Normal, Pair, R, Scale, Term, Unit, Var,
    pretty, subst, typecheck,
)


def latent_name(i: int) -> str:
    """Name of the ``i``-th latent variable (1-based)."""
    return f"z{i}"


@dataclass(frozen=True, eq=False)
class Running:
    term: Term
    state: GaussMap

    @property
    def r(self) -> int:
        return self.state.cod

    def latent_ctx(self):
        return tuple((latent_name(i + 1), R) for i in range(self.r))


Config = Running | _Bottom


def is_value(t: Term) -> bool:
    if isinstance(t, (Var, Const, Unit)):
        return True
    if isinstance(t, (Pair, Add)):
        return is_value(t.left) and is_value(t.right)
    if isinstance(t, Scale):
        return is_value(t.body)
    return False


def count_symbols(t: Term) -> int:
    """Occurrences of ``normal``, ``=:=`` and ``let``; bounds the number of steps."""
    if isinstance(t, Normal):
        return 1
    if isinstance(t, (Var, Const, Unit)):
        return 0
    if isinstance(t, Scale):
        return count_symbols(t.body)
    if isinstance(t, (Add, Pair)):
        return count_symbols(t.left) + count_symbols(t.right)
    if isinstance(t, Cond):
        return 1 + count_symbols(t.left) + count_symbols(t.right)
    if isinstance(t, (Let, LetPair)):
        return 1 + count_symbols(t.bound) + count_symbols(t.body)
    raise TypeError(f"not a term: {t!r}")


def value_affine(v: Term, r: int) -> tuple[np.ndarray, np.ndarray]:
    """The affine map ``R^r -> R^n`` denoted by a value over latents ``z1..zr``.

    Tuples are flattened depth first, left to right.
    """
    rows: list[tuple[np.ndarray, float]] = []
    _collect(v, r, rows)
    A = np.array([u for u, _ in rows]).reshape(len(rows), r)
    b = np.array([c for _, c in rows], dtype=float)
    return A, b


def _collect(v: Term, r: int, rows: list) -> None:
    if isinstance(v, Unit):
        return
    if isinstance(v, Pair):
        _collect(v.left, r, rows)
        _collect(v.right, r, rows)
        return
    rows.append(_real_affine(v, r))


def _real_affine(v: Term, r: int) -> tuple[np.ndarray, float]:
    if isinstance(v, Var):
        u = np.zeros(r)
        u[_latent_index(v.name, r)] = 1.0
        return u, 0.0
    if isinstance(v, Const):
        return np.zeros(r), float(v.value)
    if isinstance(v, Add):
        u1, c1 = _real_affine(v.left, r)
        u2, c2 = _real_affine(v.right, r)
        return u1 + u2, c1 + c2
    if isinstance(v, Scale):
        u, c = _real_affine(v.body, r)
        return v.alpha * u, v.alpha * c
    raise ValueError(f"not a real-valued value: {pretty(v)}")


def _latent_index(name: str, r: int) -> int:
    if name.startswith("z") and name[1:].isdigit():
        i = int(name[1:])
        if 1 <= i <= r:
            return i - 1
    raise ValueError(f"{name!r} is not a latent variable of a state of dimension {r}")


_STD1 = gauss.standard_normal(1)


class _Fail(Exception):
    pass


class _Stepper:
    def __init__(self, state: GaussMap, tol):
        self.state = state
        self.tol = tol

    def fresh_latent(self) -> Term:
        self.state = gauss.tensor(self.state, _STD1)
        return Var(latent_name(self.state.cod))

    def condition(self, v: Term, w: Term) -> None:
        r = self.state.cod
        u1, c1 = _real_affine(v, r)
        u2, c2 = _real_affine(w, r)
        u, b = u1 - u2, c1 - c2
        mu, S = self.state.b, self.state.cov
        # joint of (X, uX), then condition the last coordinate on -b
        joint_mu = np.concatenate([mu, [u @ mu]])
        Su = S @ u
        joint_S = np.block([[S, Su[:, None]], [Su[None, :], np.array([[u @ Su]])]])
        post = numlin.condition_gaussian(joint_mu, joint_S, r, [-b], self.tol)
        if post is None:
            raise _Fail
        self.state = GaussMap._trusted(np.zeros((r, 0)), post[0], post[1])

    def step(self, t: Term) -> Term:
        if isinstance(t, Normal):
            return self.fresh_latent()
        if isinstance(t, Cond):
            if not is_value(t.left):
                return Cond(self.step(t.left), t.right)
            if not is_value(t.right):
                return Cond(t.left, self.step(t.right))
            self.condition(t.left, t.right)
            return Unit()
        if isinstance(t, Let):
            if not is_value(t.bound):
                return Let(t.name, self.step(t.bound), t.body)
            return subst(t.body, {t.name: t.bound})
        if isinstance(t, LetPair):
            if not is_value(t.bound):
                return LetPair(t.left, t.right, self.step(t.bound), t.body)
            if not isinstance(t.bound, Pair):
                raise ValueError("let-pair on a non-pair value")
            return subst(t.body, {t.left: t.bound.left, t.right: t.bound.right})
        if isinstance(t, (Pair, Add)):
            if not is_value(t.left):
                return type(t)(self.step(t.left), t.right)
            return type(t)(t.left, self.step(t.right))
        if isinstance(t, Scale):
            return Scale(t.alpha, self.step(t.body))
        raise ValueError(f"no redex in a value: {pretty(t)}")


def step(c: Config, tol: float | None = None) -> Config:
    """One reduction step of a running, non-value configuration."""
    if c is BOTTOM or is_value(c.term):
        raise ValueError("step expects a running configuration with a non-value term")
    s = _Stepper(c.state, tol)
    try:
        t = s.step(c.term)
    except _Fail:
        return BOTTOM
    return Running(t, s.state)


def initial(t: Term) -> Running:
    return Running(t, gauss.gauss_state(np.zeros(0), np.zeros((0, 0))))


@dataclass(eq=False)
class RunResult:
    config: Config
    steps: int
    bound: int
    trace: list[dict] | None = field(default=None)

    @property
    def failed(self) -> bool:
        return self.config is BOTTOM

    @property
    def value(self) -> Term:
        return self.config.term

    @property
    def state(self) -> GaussMap:
        return self.config.state

    def outcome(self) -> GaussMap | _Bottom:
        """Observable result: the pushforward of the state along the value, or ``BOTTOM``."""
        if self.failed:
            return BOTTOM
        return observable(self.value, self.state)

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(rec) + "\n" for rec in self.trace or [])


def _trace_record(i: int, c: Config) -> dict:
    if c is BOTTOM:
        return {"step": i, "term": None, "status": "bottom"}
    return {
        "step": i,
        "term": pretty(c.term),
        "mean": c.state.b.tolist(),
        "cov": c.state.cov.tolist(),
    }


def run(t: Term, tol: float | None = None, trace: bool = False, check_types: bool = True) -> RunResult:
    """Reduce a closed term to a value configuration or ``BOTTOM``."""
    if check_types:
        typecheck((), t)
    bound = count_symbols(t)
    c: Config = initial(t)
    log = [_trace_record(0, c)] if trace else None
    n = 0
    while c is not BOTTOM and not is_value(c.term):
        c = step(c, tol)
        n += 1
        if n > bound:
            raise AssertionError(f"reduction exceeded the symbol bound {bound}")
        if trace:
            log.append(_trace_record(n, c))
    return RunResult(c, n, bound, log)


def observable(v: Term, psi: GaussMap) -> GaussMap:
    """Pushforward of ``psi`` along the affine map denoted by the value ``v``."""
    A, b = value_affine(v, psi.cod)
    return gauss.compose(gauss.affine(A, b), psi)


def evaluate(t: Term, tol: float | None = None) -> GaussMap | _Bottom:
    """Observable outcome of running a closed term."""
    return run(t, tol).outcome()
