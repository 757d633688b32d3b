"""Finite subprobability distributions and kernels with exact rational masses."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Hashable, Sequence

Rat = Fraction


def rat(x) -> Fraction:
    """Exact rational from an int, Fraction or decimal/fraction string."""
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a string or Fraction")
    return Fraction(x)


def _space(xs) -> tuple:
    xs = tuple(xs)
    if len(set(xs)) != len(xs):
        raise ValueError("outcome space has repeated elements")
    return xs


@dataclass(frozen=True)
class SubDist:
    space: tuple
    masses: tuple

    def __post_init__(self):
        space = _space(self.space)
        masses = tuple(rat(m) for m in self.masses)
        if len(masses) != len(space):
            raise ValueError("one mass per outcome expected")
        if any(m < 0 for m in masses):
            raise ValueError("masses must be nonnegative")
        if sum(masses) > 1:
            raise ValueError("total mass exceeds 1")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_dict(cls, space: Sequence[Hashable], masses: dict) -> "SubDist":
        return cls(tuple(space), tuple(rat(masses.get(x, 0)) for x in space))

    def __getitem__(self, x) -> Fraction:
        return self.masses[self.space.index(x)]

    def total(self) -> Fraction:
        return sum(self.masses, Fraction(0))

    def as_dict(self) -> dict:
        return dict(zip(self.space, self.masses))

    def support(self) -> tuple:
        return tuple(x for x, m in zip(self.space, self.masses) if m)


def point(space, x) -> SubDist:
    return SubDist.from_dict(space, {x: 1})


def uniform(space) -> SubDist:
    space = tuple(space)
    n = len(space)
    return SubDist(space, (Fraction(1, n),) * n)


def normalize_dist(phi: SubDist) -> SubDist:
    """Divide by the total mass; the zero subdistribution is returned unchanged."""
    z = phi.total()
    if z == 0:
        return phi
    return SubDist(phi.space, tuple(m / z for m in phi.masses))


def conditioning_product(p: SubDist, q: SubDist) -> SubDist:
    """Pointwise product ``(p . q)(x) = p(x) q(x)``."""
    if p.space != q.space:
        raise ValueError("conditioning product needs a common outcome space")
    return SubDist(p.space, tuple(a * b for a, b in zip(p.masses, q.masses)))


@dataclass(frozen=True)
class SubKernel:
    """Subprobability kernel ``p(y|x)``; ``p[i][j]`` is the mass of ``cod[i]`` given ``dom[j]``."""

    dom: tuple
    cod: tuple
    p: tuple

    def __post_init__(self):
        dom, cod = _space(self.dom), _space(self.cod)
        rows = tuple(tuple(rat(v) for v in row) for row in self.p)
        if len(rows) != len(cod) or any(len(r) != len(dom) for r in rows):
            raise ValueError("kernel matrix has the wrong shape")
        for j in range(len(dom)):
            col = [rows[i][j] for i in range(len(cod))]
            if any(v < 0 for v in col):
                raise ValueError("kernel entries must be nonnegative")
            if sum(col) > 1:
                raise ValueError(f"column {dom[j]!r} has mass above 1")
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "cod", cod)
        object.__setattr__(self, "p", rows)

    @classmethod
    def from_columns(cls, dom, cod, columns: dict) -> "SubKernel":
        """Build from ``{x: {y: mass}}``."""
        dom, cod = tuple(dom), tuple(cod)
        return cls(dom, cod, tuple(tuple(rat(columns[x].get(y, 0)) for x in dom) for y in cod))

    def __call__(self, y, x) -> Fraction:
        return self.p[self.cod.index(y)][self.dom.index(x)]

    def column(self, x) -> SubDist:
        j = self.dom.index(x)
        return SubDist(self.cod, tuple(row[j] for row in self.p))

    def column_sums(self) -> tuple:
        return tuple(sum((row[j] for row in self.p), Fraction(0)) for j in range(len(self.dom)))

    def scale(self, lam) -> "SubKernel":
        lam = rat(lam)
        return SubKernel(self.dom, self.cod, tuple(tuple(lam * v for v in row) for row in self.p))


def identity(space) -> SubKernel:
    space = tuple(space)
    n = len(space)
    return SubKernel(space, space, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))


def dist_kernel(d: SubDist) -> SubKernel:
    """A subdistribution as a kernel out of the one-point space."""
    return SubKernel(((),), d.space, tuple((m,) for m in d.masses))


def compose(q: SubKernel, p: SubKernel) -> SubKernel:
    """``q . p``: ``(q . p)(z|x) = sum_y q(z|y) p(y|x)``."""
    if q.dom != p.cod:
        raise ValueError("cannot compose: spaces differ")
    rows = []
    for qi in q.p:
        rows.append(tuple(
            sum((qi[k] * p.p[k][j] for k in range(len(p.cod))), Fraction(0)) for j in range(len(p.dom))
        ))
    return SubKernel(p.dom, q.cod, tuple(rows))


def tensor(p: SubKernel, q: SubKernel) -> SubKernel:
    dom = tuple(product(p.dom, q.dom))
    cod = tuple(product(p.cod, q.cod))
    rows = []
    for i1, i2 in product(range(len(p.cod)), range(len(q.cod))):
        rows.append(tuple(p.p[i1][j1] * q.p[i2][j2] for j1, j2 in product(range(len(p.dom)), range(len(q.dom)))))
    return SubKernel(dom, cod, tuple(rows))


def proportional(p: SubKernel, q: SubKernel) -> bool:
    """``p ∝ q``: ``p = lam * q`` for some rational ``lam > 0``."""
    if p.dom != q.dom or p.cod != q.cod:
        raise ValueError("proportional expects kernels of the same shape")
    ratio = None
    for rp, rq in zip(p.p, q.p):
        for a, b in zip(rp, rq):
            if (a == 0) != (b == 0):
                return False
            if a:
                r = a / b
                if ratio is None:
                    ratio = r
                elif r != ratio:
                    return False
    return True


def is_discardable(p: SubKernel) -> bool:
    """Every column has the same, nonzero total mass."""
    sums = set(p.column_sums())
    return len(sums) == 1 and 0 not in sums


@dataclass(frozen=True)
class FinChannel:
    """A stochastic kernel ``q : X -> Y x K`` with an observed value ``k0`` of ``K``."""

    K: tuple
    q: SubKernel
    k0: Hashable
    Y: tuple

    def __post_init__(self):
        if tuple(product(self.Y, self.K)) != self.q.cod:
            raise ValueError("kernel codomain must be Y x K")
        if self.k0 not in self.K:
            raise ValueError("observation outside K")
        if any(s != 1 for s in self.q.column_sums()):
            raise ValueError("channel kernel must be stochastic")


def subkernel_of_channel(Q: FinChannel) -> SubKernel:
    """Likelihood slice ``rho(y|x) = q(y, k0|x)``."""
    rows = tuple(Q.q.p[Q.q.cod.index((y, Q.k0))] for y in Q.Y)
    return SubKernel(Q.q.dom, Q.Y, rows)


def channel_of_subkernel(rho: SubKernel) -> FinChannel:
    """Channel with a boolean observation ``1``: ``q(y, 1|x) = rho(y|x)``.

    The missing mass ``1 - sum_y rho(y|x)`` goes to ``(y0, 0)`` with ``y0``
    the first outcome, making every column sum to exactly one.
    """
    if not rho.cod:
        raise ValueError("channel_of_subkernel needs a nonempty codomain")
    K = (0, 1)
    cod = tuple(product(rho.cod, K))
    sums = rho.column_sums()
    rows = []
    for y, b in cod:
        i = rho.cod.index(y)
        if b == 1:
            rows.append(rho.p[i])
        elif i == 0:
            rows.append(tuple(1 - s for s in sums))
        else:
            rows.append((Fraction(0),) * len(rho.dom))
    return FinChannel(K, SubKernel(rho.dom, cod, tuple(rows)), 1, rho.cod)


def channel_posterior(Q: FinChannel, prior: SubDist) -> SubDist:
    """Normalized joint posterior over ``X x Y`` after observing ``k0``."""
    joint = {}
    for x, px in zip(prior.space, prior.masses):
        for y in Q.Y:
            joint[(x, y)] = px * Q.q((y, Q.k0), x)
    space = tuple(product(prior.space, Q.Y))
    return normalize_dist(SubDist.from_dict(space, joint))


def kernel_posterior(rho: SubKernel, prior: SubDist) -> SubDist:
    """Normalize ``(x, y) |-> p(x) rho(y|x)``."""
    space = tuple(product(prior.space, rho.cod))
    joint = {(x, y): px * rho(y, x) for x, px in zip(prior.space, prior.masses) for y in rho.cod}
    return normalize_dist(SubDist.from_dict(space, joint))
