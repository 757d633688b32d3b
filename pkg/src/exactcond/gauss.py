"""The Markov category of affine maps with Gaussian noise.

A morphism ``m -> n`` is a triple ``(A, b, cov)`` meaning
``x |-> A x + b + N(0, cov)``.  States are the morphisms out of ``0``
and are ordinary Gaussian distributions ``N(b, cov)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import numlin


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GaussMap:
    A: np.ndarray
    b: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        A = numlin.as_matrix(self.A)
        n, m = A.shape
        b = numlin.as_vector(self.b, n)
        cov = numlin.as_psd(numlin.as_matrix(self.cov, n, n))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "cov", _frozen(cov))

    @classmethod
    def _trusted(cls, A: np.ndarray, b: np.ndarray, cov: np.ndarray) -> "GaussMap":
        """Skip validation for results that are PSD by construction; only symmetrize."""
        self = object.__new__(cls)
        object.__setattr__(self, "A", _frozen(np.asarray(A, dtype=float)))
        object.__setattr__(self, "b", _frozen(np.asarray(b, dtype=float)))
        object.__setattr__(self, "cov", _frozen(0.5 * (cov + cov.T)))
        return self

    @property
    def dom(self) -> int:
        return self.A.shape[1]

    @property
    def cod(self) -> int:
        return self.A.shape[0]

    @property
    def mean(self) -> np.ndarray:
        """Mean of a state (the offset ``b``)."""
        return self.b

    def is_state(self) -> bool:
        return self.dom == 0

    def __call__(self, x) -> "GaussMap":
        """Evaluate at a point: the state ``f(x)``."""
        return compose(self, const(x))

    def __repr__(self) -> str:
        if self.is_state():
            return f"N(mean={self.b.tolist()}, cov={self.cov.tolist()})"
        return f"GaussMap(A={self.A.tolist()}, b={self.b.tolist()}, cov={self.cov.tolist()})"


def gauss_state(mean, cov) -> GaussMap:
    mean = numlin.as_vector(mean)
    return GaussMap(np.zeros((mean.shape[0], 0)), mean, cov)


def standard_normal(n: int = 1) -> GaussMap:
    return gauss_state(np.zeros(n), np.eye(n))


def affine(A, b=None) -> GaussMap:
    """Deterministic map ``x |-> A x + b``."""
    A = numlin.as_matrix(A)
    n = A.shape[0]
    b = np.zeros(n) if b is None else numlin.as_vector(b, n)
    return GaussMap._trusted(A, b, np.zeros((n, n)))


def identity(n: int) -> GaussMap:
    return affine(np.eye(n))


def copy(n: int) -> GaussMap:
    return affine(np.vstack([np.eye(n), np.eye(n)]))


def delete(n: int) -> GaussMap:
    return affine(np.zeros((0, n)))


def swap(m: int, n: int) -> GaussMap:
    """``R^m (x) R^n -> R^n (x) R^m``."""
    P = np.zeros((m + n, m + n))
    P[:n, m:] = np.eye(n)
    P[n:, :m] = np.eye(m)
    return affine(P)


def const(v) -> GaussMap:
    """The deterministic state at ``v``."""
    v = numlin.as_vector(v)
    return affine(np.zeros((v.shape[0], 0)), v)


def permutation(order: Sequence[int]) -> GaussMap:
    """Deterministic map sending ``x`` to ``(x[order[0]], x[order[1]], ...)``."""
    order = list(order)
    n = len(order)
    P = np.zeros((n, n))
    P[np.arange(n), order] = 1.0
    return affine(P)


def compose(g: GaussMap, f: GaussMap) -> GaussMap:
    """``g . f``: first ``f``, then ``g``."""
    if g.dom != f.cod:
        raise ValueError(f"cannot compose: dom(g)={g.dom} but cod(f)={f.cod}")
    return GaussMap._trusted(g.A @ f.A, g.A @ f.b + g.b, g.A @ f.cov @ g.A.T + g.cov)


def tensor(f: GaussMap, g: GaussMap) -> GaussMap:
    """Independent parallel composition, block-diagonal in everything."""
    A = np.zeros((f.cod + g.cod, f.dom + g.dom))
    A[: f.cod, : f.dom] = f.A
    A[f.cod :, f.dom :] = g.A
    cov = np.zeros((f.cod + g.cod, f.cod + g.cod))
    cov[: f.cod, : f.cod] = f.cov
    cov[f.cod :, f.cod :] = g.cov
    return GaussMap._trusted(A, np.concatenate([f.b, g.b]), cov)


def pair(f: GaussMap, g: GaussMap) -> GaussMap:
    """``<f, g> = (f (x) g) . copy``; the two noises stay independent."""
    return compose(tensor(f, g), copy(f.dom))


def marginal(psi: GaussMap, keep: Sequence[int]) -> GaussMap:
    keep = list(keep)
    for i in keep:
        if not 0 <= i < psi.cod:
            raise IndexError(f"coordinate {i} out of range for dimension {psi.cod}")
    return GaussMap._trusted(psi.A[keep], psi.b[keep], psi.cov[np.ix_(keep, keep)])


def equal(f: GaussMap, g: GaussMap, tol: float | None = None) -> bool:
    return (
        f.A.shape == g.A.shape
        and numlin.allclose(f.A, g.A, tol)
        and numlin.allclose(f.b, g.b, tol)
        and numlin.allclose(f.cov, g.cov, tol)
    )


def is_deterministic(f: GaussMap, tol: float | None = None) -> bool:
    tol = numlin.default_tol() if tol is None else tol
    return f.cod == 0 or float(np.abs(f.cov).max()) <= tol


def conditional(psi: GaussMap, k_dim: int) -> GaussMap:
    """Conditional of a state over ``X (x) K`` given its trailing ``k_dim`` coordinates.

    The result ``K -> X`` uses the Moore-Penrose inverse of the ``K``
    covariance; any other choice agrees with it on the support of the
    ``K`` marginal.
    """
    if not psi.is_state():
        raise ValueError("conditional expects a state")
    n = psi.cod - k_dim
    mu, S = psi.b, psi.cov
    Sxk = S[:n, n:]
    gain = Sxk @ numlin.pinv(S[n:, n:])
    cov = numlin.clamp_psd(S[:n, :n] - gain @ Sxk.T)
    return GaussMap(gain, mu[:n] - gain @ mu[n:], cov)


def abs_cont(mu: GaussMap, nu: GaussMap, tol: float | None = None) -> bool:
    """``mu << nu``: the support of ``mu`` lies inside the support of ``nu``.

    With ``mu`` deterministic this is the test "the point lies in the
    support of ``nu``".
    """
    if mu.cod != nu.cod or not (mu.is_state() and nu.is_state()):
        raise ValueError("abs_cont expects two states of equal dimension")
    tol = numlin.default_tol() if tol is None else tol
    if not numlin.in_col_space(nu.cov, mu.b - nu.b, tol):
        return False
    if mu.cod == 0:
        return True
    P = numlin.col_projector(nu.cov)
    resid = P @ mu.cov - mu.cov
    scale = max(1.0, float(np.abs(mu.cov).max()))
    return float(np.abs(resid).max()) <= tol * scale


def in_support(x, mu: GaussMap, tol: float | None = None) -> bool:
    return abs_cont(const(x), mu, tol)


def almost_sure_equal(f: GaussMap, g: GaussMap, mu: GaussMap, tol: float | None = None) -> bool:
    """``<id, f> mu == <id, g> mu``."""
    if f.dom != mu.cod or g.dom != mu.cod or f.cod != g.cod:
        raise ValueError("dimension mismatch")
    n = mu.cod
    return equal(compose(pair(identity(n), f), mu), compose(pair(identity(n), g), mu), tol)


@dataclass(frozen=True, eq=False)
class InferenceProblem:
    """A model over ``X (x) K`` (``K`` trailing) together with an observed value of ``K``."""

    k_dim: int
    model: GaussMap
    obs: np.ndarray

    def __post_init__(self):
        if not self.model.is_state():
            raise ValueError("the model must be a state")
        if self.model.cod < self.k_dim:
            raise ValueError("model has fewer coordinates than the condition")
        object.__setattr__(self, "obs", _frozen(numlin.as_vector(self.obs, self.k_dim)))


def solve_inference(problem: InferenceProblem, tol: float | None = None) -> GaussMap | None:
    """Posterior ``model|_K (obs)``, or ``None`` if ``obs`` is outside the support of ``model_K``."""
    psi, k = problem.model, problem.k_dim
    n = psi.cod - k
    psi_k = marginal(psi, range(n, psi.cod))
    if not in_support(problem.obs, psi_k, tol):
        return None
    return conditional(psi, k)(problem.obs)
