"""Small dense real-matrix kernel: inverse, Cholesky, symmetric eigenvalues.

Matrices are 2-D float ``numpy`` arrays; numpy supplies storage and the
matrix product, the factorizations below are written out.  Intended for
n <= 50.
"""

from __future__ import annotations

import math

import numpy as np

from .config import DEFAULT
from .core import NumericError


class SingularMatrixError(NumericError):
    def __init__(self, pivot: float, message: str = ""):
        self.pivot = pivot
        super().__init__(message or f"matrix is singular to working precision (pivot {pivot:.3g})")


class NotPositiveDefiniteError(NumericError):
    def __init__(self, pivot: float):
        self.pivot = pivot
        super().__init__(f"matrix is not positive semi-definite (pivot {pivot:.3g})")


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def symmetrize(m: np.ndarray) -> np.ndarray:
    m = as_matrix(m)
    return 0.5 * (m + m.T)


def is_symmetric(m: np.ndarray, tol: float = DEFAULT.symmetry) -> bool:
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return m.shape[0] == m.shape[1] and float(np.max(np.abs(m - m.T), initial=0.0)) <= tol * scale


def mat_inverse(m) -> np.ndarray:
    """Gauss-Jordan elimination with partial pivoting."""
    a = as_matrix(m)
    n, k = a.shape
    if n != k:
        raise ValueError("only square matrices have inverses")
    aug = np.hstack([a, np.eye(n)])
    scale = float(np.max(np.abs(a))) if n else 1.0
    threshold = n * np.finfo(float).eps * max(scale, np.finfo(float).tiny)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        pivot = aug[piv, col]
        if abs(pivot) <= threshold:
            raise SingularMatrixError(abs(pivot))
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= pivot
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def cholesky(p, clamp: float = DEFAULT.psd_clamp) -> np.ndarray:
    """Lower-triangular L with L L^T = P.

    Pivots in [-clamp, 0] are treated as zero (semi-definite boundary); below
    that :class:`NotPositiveDefiniteError` is raised.
    """
    a = as_matrix(p)
    n = a.shape[0]
    if not is_symmetric(a):
        raise ValueError("cholesky needs a symmetric matrix")
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - float(L[j, :j] @ L[j, :j])
        if d < -clamp:
            raise NotPositiveDefiniteError(d)
        if d <= clamp:
            # zero pivot: the column below must vanish too
            L[j, j] = 0.0
            rest = a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]
            if np.any(np.abs(rest) > math.sqrt(clamp)):
                raise NotPositiveDefiniteError(d)
            continue
        L[j, j] = math.sqrt(d)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def is_psd(p, clamp: float = DEFAULT.psd_clamp) -> bool:
    try:
        cholesky(symmetrize(as_matrix(p)), clamp)
    except NotPositiveDefiniteError:
        return False
    return True


def is_pd(p, tol: float = 0.0) -> bool:
    """Strict positive definiteness: every Cholesky pivot above ``tol``."""
    a = as_matrix(p)
    if not is_symmetric(a):
        return False
    try:
        L = cholesky(a)
    except NotPositiveDefiniteError:
        return False
    return bool(np.all(np.diag(L) ** 2 > tol))


def sym_eigenvalues(s, tol: float = DEFAULT.jacobi_offdiag,
                    max_sweeps: int = DEFAULT.jacobi_max_sweeps) -> list:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = as_matrix(s)
    n = a.shape[0]
    if not is_symmetric(a):
        raise ValueError("sym_eigenvalues needs a symmetric matrix")
    a = symmetrize(a)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.tril(a, -1) ** 2)))
        if off < tol * scale:
            return sorted(float(v) for v in np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                # A <- R^T A R with R the (p, q) plane rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def relative_eigenvalues(p, q) -> list:
    """Eigenvalues of P Q^-1 for SPD P, Q via the similar matrix L^-1 P L^-T."""
    L = cholesky(q)
    Linv = mat_inverse(L)
    return sym_eigenvalues(symmetrize(Linv @ as_matrix(p) @ Linv.T))
