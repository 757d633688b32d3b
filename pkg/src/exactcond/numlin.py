"""Dense real linear algebra for Gaussian conditioning.

Matrices and vectors are plain ``numpy`` float64 arrays.  Covariance
matrices are symmetric positive semidefinite; every function that takes
one re-symmetrizes it and clamps tiny negative eigenvalues first.

Tolerance policy (shared by the whole Gaussian side):

* eigenvalue / singular-value cutoff: ``EIG_RTOL * max(1, largest)``
* support / equality tolerance: ``default_tol()``, 1e-8 relative, which
  the ``GAUSS_COND_TOL`` environment variable overrides.
"""

from __future__ import annotations

import os

import numpy as np

EIG_RTOL = 1e-9
DEFAULT_TOL = 1e-8


def default_tol() -> float:
    env = os.environ.get("GAUSS_COND_TOL")
    return float(env) if env else DEFAULT_TOL


def as_matrix(M, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a finite 2-d float array, checking the shape if given."""
    A = np.array(M, dtype=float)
    if A.ndim == 1 and A.size == 0:
        A = A.reshape(rows or 0, cols or 0)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {A.shape}")
    if rows is not None and A.shape[0] != rows or cols is not None and A.shape[1] != cols:
        raise ValueError(f"expected shape ({rows}, {cols}), got {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError("matrix entries must be finite")
    return A


def as_vector(v, dim: int | None = None) -> np.ndarray:
    x = np.array(v, dtype=float).reshape(-1)
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"expected vector of length {dim}, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise ValueError("vector entries must be finite")
    return x


def _cutoff(largest: float) -> float:
    return EIG_RTOL * max(1.0, largest)


def as_psd(M) -> np.ndarray:
    """Validate a covariance matrix and return its symmetrized, clamped form.

    Raises ``ValueError`` if the matrix is not symmetric within
    ``1e-9 * max(1, ||M||_inf)`` or has an eigenvalue below minus the
    eigenvalue cutoff.
    """
    S = as_matrix(M)
    n = S.shape[0]
    if S.shape != (n, n):
        raise ValueError(f"covariance must be square, got {S.shape}")
    if n == 0 or not S.any():
        return S
    scale = max(1.0, float(np.abs(S).sum(axis=1).max()))
    if np.abs(S - S.T).max() > EIG_RTOL * scale:
        raise ValueError("covariance matrix is not symmetric")
    S = 0.5 * (S + S.T)
    w, Q = np.linalg.eigh(S)
    cut = _cutoff(float(w.max(initial=0.0)))
    if w.min() < -cut:
        raise ValueError(f"covariance matrix is not PSD (eigenvalue {w.min():.3g})")
    if w.min() >= cut:
        return S
    w = np.where(w < cut, 0.0, w)
    S = (Q * w) @ Q.T
    return 0.5 * (S + S.T)


def clamp_psd(S: np.ndarray) -> np.ndarray:
    """Symmetrize and zero out eigenvalues below the cutoff, no validation."""
    S = 0.5 * (S + S.T)
    if S.shape[0] == 0:
        return S
    w, Q = np.linalg.eigh(S)
    cut = _cutoff(float(w.max(initial=0.0)))
    if w.min() >= cut:
        return S
    w = np.where(w < cut, 0.0, w)
    S = (Q * w) @ Q.T
    return 0.5 * (S + S.T)


def pinv(M) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric PSD matrix.

    Computed from the symmetric eigendecomposition; eigenvalues below the
    cutoff count as zero, so the zero matrix maps to the zero matrix.
    """
    S = np.asarray(M, dtype=float)
    if S.shape[0] == 0:
        return S.copy()
    w, Q = np.linalg.eigh(0.5 * (S + S.T))
    keep = w > _cutoff(float(w.max(initial=0.0)))
    Qk = Q[:, keep]
    return (Qk / w[keep]) @ Qk.T


def col_projector(S) -> np.ndarray:
    """Orthogonal projector onto the column space of a PSD matrix."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    w, Q = np.linalg.eigh(0.5 * (S + S.T))
    Qk = Q[:, w > _cutoff(float(w.max(initial=0.0)))]
    return Qk @ Qk.T


def in_col_space(S, v, tol: float | None = None) -> bool:
    """True iff ``v`` lies in the column space of the PSD matrix ``S``.

    The test is ``||S pinv(S) v - v|| <= tol * max(1, ||v||)``; borderline
    residuals count as inside.
    """
    tol = default_tol() if tol is None else tol
    S = np.asarray(S, dtype=float)
    v = as_vector(v)
    if S.shape != (v.shape[0], v.shape[0]):
        raise ValueError(f"dimension mismatch: matrix {S.shape}, vector {v.shape[0]}")
    if v.shape[0] == 0:
        return True
    resid = col_projector(S) @ v - v
    return float(np.linalg.norm(resid)) <= tol * max(1.0, float(np.linalg.norm(v)))


def rref_transform(M) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon form ``R`` of ``M`` and an invertible ``S`` with ``R = S M``.

    Gauss-Jordan elimination with partial pivoting.  Candidate pivots whose
    magnitude is below ``1e-9 * max(1, max|M|)`` count as zero, and every
    entry below that cutoff is snapped to exactly 0 after each elimination
    step.  Pivots are exactly 1 and pivot columns are exact unit vectors.
    """
    R = as_matrix(M).copy()
    m, n = R.shape
    S = np.eye(m)
    if m == 0 or n == 0:
        return R, S
    cut = EIG_RTOL * max(1.0, float(np.abs(R).max()))
    row = 0
    for col in range(n):
        if row == m:
            break
        k = row + int(np.argmax(np.abs(R[row:, col])))
        if abs(R[k, col]) <= cut:
            R[row:, col] = 0.0
            continue
        if k != row:
            R[[row, k]] = R[[k, row]]
            S[[row, k]] = S[[k, row]]
        p = R[row, col]
        R[row] /= p
        S[row] /= p
        for i in range(m):
            if i != row and R[i, col] != 0.0:
                f = R[i, col]
                R[i] -= f * R[row]
                S[i] -= f * S[row]
        R[np.abs(R) <= cut] = 0.0
        R[row, col] = 1.0
        R[np.arange(m) != row, col] = 0.0
        row += 1
    return R, S


def pivot_columns(R: np.ndarray) -> list[int]:
    """Pivot column of each nonzero row of a matrix in RREF."""
    cols = []
    for r in R:
        nz = np.flatnonzero(r)
        if nz.size:
            cols.append(int(nz[0]))
    return cols


def rank_split(A) -> tuple[np.ndarray, np.ndarray, int]:
    """Factor ``A`` (m x n) as ``S A T^-1 = [[I_r, 0], [0, 0]]`` with ``T`` orthogonal.

    Built from the SVD ``A = U diag(s) V^T``: ``T = V^T`` and ``S`` rescales
    the first ``r`` rows of ``U^T`` by ``1/s``.  Singular vectors are sign
    normalized so the largest-magnitude entry of each right singular vector
    is positive.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m == 0 or n == 0:
        return np.eye(m), np.eye(n), 0
    U, s, Vt = np.linalg.svd(A)
    r = int(np.sum(s > _cutoff(float(s.max(initial=0.0)))))
    if r == 0:
        return np.eye(m), np.eye(n), 0
    for i in range(r):
        j = int(np.argmax(np.abs(Vt[i])))
        if Vt[i, j] < 0:
            Vt[i] = -Vt[i]
            U[:, i] = -U[:, i]
    S = U.T.copy()
    S[:r] /= s[:r, None]
    return S, Vt, r


def condition_gaussian(mu, Sigma, n_keep: int, a, tol: float | None = None):
    """Condition ``N(mu, Sigma)`` on its trailing coordinates being equal to ``a``.

    Returns the posterior ``(mean, cov)`` over the first ``n_keep``
    coordinates, or ``None`` when ``a`` is outside the support of the
    observed block.  Any generalized inverse of the observed covariance
    would do; the Moore-Penrose one is used.
    """
    mu = as_vector(mu)
    Sigma = np.asarray(Sigma, dtype=float)
    n = mu.shape[0]
    a = as_vector(a, n - n_keep)
    mu1, mu2 = mu[:n_keep], mu[n_keep:]
    S11 = Sigma[:n_keep, :n_keep]
    S12 = Sigma[:n_keep, n_keep:]
    S22 = Sigma[n_keep:, n_keep:]
    d = a - mu2
    tol = default_tol() if tol is None else tol
    # one eigendecomposition serves both the support test and the pseudoinverse
    if S22.shape[0]:
        w, Q = np.linalg.eigh(0.5 * (S22 + S22.T))
        keep = w > _cutoff(float(w.max(initial=0.0)))
        Qk = Q[:, keep]
        resid = Qk @ (Qk.T @ d) - d
        if float(np.linalg.norm(resid)) > tol * max(1.0, float(np.linalg.norm(d))):
            return None
        G = S12 @ ((Qk / w[keep]) @ Qk.T)
    else:
        G = np.zeros((n_keep, 0))
    mean = mu1 + G @ d
    cov = clamp_psd(S11 - G @ S12.T)
    return mean, cov


def allclose(a, b, tol: float | None = None) -> bool:
    """Entrywise comparison ``|a - b| <= tol * max(1, |a|, |b|)`` over the arrays."""
    tol = default_tol() if tol is None else tol
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    if a.size == 0:
        return True
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max()) <= tol * scale
