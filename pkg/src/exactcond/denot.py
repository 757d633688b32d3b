"""Denotational semantics: typed terms to conditioning channels.

A term ``Gamma |- e : tau`` denotes a channel ``m ~> n`` where ``m`` and
``n`` are the flattened dimensions of ``Gamma`` and ``tau``.  The
translation is compositional; conditions become ``observe(0)`` applied
to the difference of the two sides.
"""

from __future__ import annotations

import numpy as np

from . import cond, gauss
from .cond import BOTTOM, Channel, _Bottom
from .gauss import GaussMap
from .lang import (
    Add, Cond, Const, Let, LetPair, Normal, Pair, Scale, Term, Unit, Var,
    dim, layout, typecheck,
)


def _det(A, b=None) -> Channel:
    return cond.lift(gauss.affine(A, b))


def denote(ctx, t: Term) -> Channel:
    """Channel denoted by ``t`` in context ``ctx``; ``t`` must typecheck."""
    ctx = tuple(ctx)
    typecheck(ctx, t)
    return _denote(ctx, t)


def _denote(ctx, t: Term) -> Channel:
    m = sum(dim(ty) for _, ty in ctx)
    if isinstance(t, Var):
        off, ty = layout(ctx)[t.name]
        k = dim(ty)
        P = np.zeros((k, m))
        P[:, off:off + k] = np.eye(k)
        return _det(P)
    if isinstance(t, Const):
        return _det(np.zeros((1, m)), [t.value])
    if isinstance(t, Unit):
        return _det(np.zeros((0, m)))
    if isinstance(t, Normal):
        return cond.lift(gauss.compose(gauss.standard_normal(1), gauss.delete(m)))
    if isinstance(t, Scale):
        return cond.compose(_det([[t.alpha]]), _denote(ctx, t.body))
    if isinstance(t, Add):
        both = cond.pair(_denote(ctx, t.left), _denote(ctx, t.right))
        return cond.compose(_det([[1.0, 1.0]]), both)
    if isinstance(t, Pair):
        return cond.pair(_denote(ctx, t.left), _denote(ctx, t.right))
    if isinstance(t, Cond):
        both = cond.pair(_denote(ctx, t.left), _denote(ctx, t.right))
        return cond.compose(cond.observe([0.0]), cond.compose(_det([[1.0, -1.0]]), both))
    if isinstance(t, Let):
        ty = typecheck(ctx, t.bound)
        extend = cond.pair(cond.identity(m), _denote(ctx, t.bound))
        return cond.compose(_denote(ctx + ((t.name, ty),), t.body), extend)
    if isinstance(t, LetPair):
        ty = typecheck(ctx, t.bound)
        extend = cond.pair(cond.identity(m), _denote(ctx, t.bound))
        inner = ctx + ((t.left, ty.left), (t.right, ty.right))
        return cond.compose(_denote(inner, t.body), extend)
    raise TypeError(f"not a term: {t!r}")


def evaluate(t: Term, tol: float | None = None) -> GaussMap | _Bottom:
    """Posterior of a closed term computed from its denotation."""
    return cond.eval_state(denote((), t), tol)


def agree(t: Term, tol: float | None = None) -> bool:
    """True iff the operational and denotational results of a closed term coincide."""
    from . import opsem

    return cond.results_equal(opsem.evaluate(t, tol), evaluate(t, tol), tol)


__all__ = ["denote", "evaluate", "agree", "BOTTOM"]
