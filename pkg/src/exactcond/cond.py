"""Conditioning channels: Gaussian maps with attached exact observations.

A channel ``X ~> Y`` is a Gaussian map ``f : X -> Y (x) K`` together with
an observed value ``o`` of the trailing ``K`` wires.  It stands for the
open program

    x |- let (y, k) = f(x) in (k := o); y

Channels compose by collecting their condition wires; two channels are
identified when they produce the same posteriors (or both fail) under
every prior.  ``canonicalize`` computes a normal form that decides this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import gauss, numlin
from .gauss import GaussMap


class _Bottom:
    """The failed inference result."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


@dataclass(frozen=True, eq=False)
class Channel:
    f: GaussMap
    obs: np.ndarray
    cod: int

    def __post_init__(self):
        k = self.f.cod - self.cod
        if k < 0:
            raise ValueError("channel output larger than underlying map")
        obs = numlin.as_vector(self.obs, k)
        obs.flags.writeable = False
        object.__setattr__(self, "obs", obs)

    @property
    def dom(self) -> int:
        return self.f.dom

    @property
    def k_dim(self) -> int:
        return self.f.cod - self.cod

    def __repr__(self) -> str:
        return f"Channel({self.dom} ~> {self.cod}, k_dim={self.k_dim}, f={self.f!r}, obs={self.obs.tolist()})"


def lift(g: GaussMap) -> Channel:
    return Channel(g, np.zeros(0), g.cod)


def identity(n: int) -> Channel:
    return lift(gauss.identity(n))


def observe(o) -> Channel:
    """The conditioning effect ``(:= o) : K ~> 0``."""
    o = numlin.as_vector(o)
    return Channel(gauss.identity(o.shape[0]), o, 0)


def compose(g: Channel, f: Channel) -> Channel:
    """``g . f``; the result's condition wires are ``g``'s followed by ``f``'s."""
    if g.dom != f.cod:
        raise ValueError(f"cannot compose: dom(g)={g.dom} but cod(f)={f.cod}")
    h = gauss.compose(gauss.tensor(g.f, gauss.identity(f.k_dim)), f.f)
    return Channel(h, np.concatenate([g.obs, f.obs]), g.cod)


def tensor(f: Channel, g: Channel) -> Channel:
    """Parallel composition; outputs ``Y_f, Y_g`` first, then ``K_f, K_g``."""
    h = gauss.tensor(f.f, g.f)
    yf, kf, yg, kg = f.cod, f.k_dim, g.cod, g.k_dim
    order = (
        list(range(yf))
        + list(range(yf + kf, yf + kf + yg))
        + list(range(yf, yf + kf))
        + list(range(yf + kf + yg, yf + kf + yg + kg))
    )
    h = gauss.compose(gauss.permutation(order), h)
    return Channel(h, np.concatenate([f.obs, g.obs]), yf + yg)


def pair(f: Channel, g: Channel) -> Channel:
    if f.dom != g.dom:
        raise ValueError("pair expects channels with a common domain")
    return compose(tensor(f, g), lift(gauss.copy(f.dom)))


def eval_state(c: Channel, tol: float | None = None) -> GaussMap | _Bottom:
    """Posterior of a closed channel, or ``BOTTOM`` if its observation is infeasible."""
    if c.dom != 0:
        raise ValueError("eval_state expects a channel out of the unit (dom 0)")
    post = gauss.solve_inference(gauss.InferenceProblem(c.k_dim, c.f, c.obs), tol)
    return BOTTOM if post is None else post


def results_equal(a, b, tol: float | None = None) -> bool:
    """Equality of two ``eval_state`` results."""
    if a is BOTTOM or b is BOTTOM:
        return a is b
    return gauss.equal(a, b, tol)


@dataclass(frozen=True, eq=False)
class CanonicalChannel:
    """Normal form of a non-failing channel.

    ``cond`` is an RREF matrix without zero rows, ``out`` vanishes on the
    pivot columns of ``cond`` and ``noise`` is the joint state of the
    condition residual (``cond.shape[0]`` coordinates) and the output noise.
    The channel it stands for is

        x |- let (e, n) ~ noise in (cond x := e); out x + n
    """

    cond: np.ndarray
    out: np.ndarray
    noise: GaussMap

    def __repr__(self) -> str:
        return (
            f"CanonicalChannel(cond={self.cond.tolist()}, out={self.out.tolist()}, "
            f"noise_mean={self.noise.b.tolist()}, noise_cov={self.noise.cov.tolist()})"
        )


def _factor(cov: np.ndarray) -> np.ndarray:
    """``L`` with ``L L^T = cov``, dropping null directions."""
    if cov.shape[0] == 0:
        return np.zeros((0, 0))
    w, Q = np.linalg.eigh(cov)
    keep = w > numlin.EIG_RTOL * max(1.0, float(w.max(initial=0.0)))
    return Q[:, keep] * np.sqrt(w[keep])


def canonicalize(c: Channel, tol: float | None = None) -> CanonicalChannel | _Bottom:
    """Normal form of a channel, or ``BOTTOM`` if it fails for every input."""
    ny, nk = c.cod, c.k_dim
    F, b = c.f.A, c.f.b
    L = _factor(c.f.cov)
    q = L.shape[1]
    FY, FK = F[:ny], F[ny:]
    bY, rhs = b[:ny], c.obs - b[ny:]
    LY, LK = L[:ny], L[ny:]
    # condition: FK x = rhs - LK z with z ~ N(0, I_q)
    R, S = numlin.rref_transform(FK)
    piv = numlin.pivot_columns(R)
    p = len(piv)
    SLK, Srhs = S @ LK, S @ rhs

    # rows without x-part constrain the latent noise alone
    W, w = SLK[p:], Srhs[p:]
    z_model = gauss.compose(gauss.pair(gauss.identity(q), gauss.affine(W)), gauss.standard_normal(q))
    z_post = gauss.solve_inference(gauss.InferenceProblem(nk - p, z_model, w), tol)
    if z_post is None:
        return BOTTOM

    A = R[:p]
    # residual e = Srhs[:p] - SLK[:p] z, output noise n = LY z + bY
    to_noise = gauss.affine(np.vstack([-SLK[:p], LY]), np.concatenate([Srhs[:p], bY]))
    noise = gauss.compose(to_noise, z_post)
    # substitute the pivot coordinates: x_P = e - A_N x_N
    DP = FY[:, piv]
    out = FY - DP @ A
    out[:, piv] = 0.0
    mix = np.zeros((p + ny, p + ny))
    mix[:p, :p] = np.eye(p)
    mix[p:, :p] = DP
    mix[p:, p:] = np.eye(ny)
    noise = gauss.compose(gauss.affine(mix), noise)
    return CanonicalChannel(A, out, noise)


def canonical_equal(a, b, tol: float | None = None) -> bool:
    if a is BOTTOM or b is BOTTOM:
        return a is b
    return (
        a.cond.shape == b.cond.shape
        and a.out.shape == b.out.shape
        and numlin.allclose(a.cond, b.cond, tol)
        and numlin.allclose(a.out, b.out, tol)
        and gauss.equal(a.noise, b.noise, tol)
    )


def equiv(c1: Channel, c2: Channel, tol: float | None = None) -> bool:
    """Observational equivalence, decided by comparing canonical forms."""
    if (c1.dom, c1.cod) != (c2.dom, c2.cod):
        raise ValueError(f"type mismatch: {c1.dom}~>{c1.cod} vs {c2.dom}~>{c2.cod}")
    return canonical_equal(canonicalize(c1, tol), canonicalize(c2, tol), tol)


def probe(c: Channel, prior: GaussMap, tol: float | None = None):
    """Evaluate ``(id (x) c) . copy . prior``: the joint posterior over input and output."""
    n = prior.cod
    joint = compose(tensor(identity(n), c), lift(gauss.compose(gauss.copy(n), prior)))
    return eval_state(joint, tol)


def probe_equiv(c1: Channel, c2: Channel, priors: Iterable[GaussMap], tol: float | None = None) -> bool:
    """Semi-decide equivalence by comparing joint posteriors under the given priors."""
    if (c1.dom, c1.cod) != (c2.dom, c2.cod):
        raise ValueError("type mismatch")
    return all(results_equal(probe(c1, phi, tol), probe(c2, phi, tol), tol) for phi in priors)


def standard_priors(n: int, rng: np.random.Generator) -> list[GaussMap]:
    """Prior family for ``probe_equiv``: standard normal, 8 full-rank, 8 rank-deficient, 4 point masses."""
    priors = [gauss.standard_normal(n)]
    for _ in range(8):
        B = rng.normal(size=(n, n))
        priors.append(gauss.gauss_state(rng.normal(size=n), B @ B.T + 0.1 * np.eye(n)))
    for _ in range(8):
        r = int(rng.integers(0, n)) if n > 0 else 0
        B = rng.normal(size=(n, r))
        priors.append(gauss.gauss_state(rng.normal(size=n), B @ B.T))
    for _ in range(4):
        priors.append(gauss.const(rng.integers(-3, 4, size=n).astype(float)))
    return priors

