"""Pointwise dense Hermitian linear algebra.

Every function accepts a single ``(m, m)`` matrix or a stack ``(..., m, m)``
and works on the last two axes.  Positive definiteness is certified by a
successful Cholesky factorization (LAPACK rejects any nonpositive pivot).
"""
from __future__ import annotations

import numpy as np

# Hermitian drift (relative, max-entry) up to this level is silently symmetrized.
DRIFT_TOL = 1e-10


class NotPositiveDefinite(np.linalg.LinAlgError):
    """A matrix failed its Cholesky factorization.

    ``index`` is the position of the first failing matrix in the stack (an
    empty tuple for a single matrix), or None when it was not located.
    """

    def __init__(self, message: str, index: tuple[int, ...] | None = None):
        super().__init__(message)
        self.index = index


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _symmetrized(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    ah = np.conj(np.swapaxes(a, -1, -2))
    scale = np.max(np.abs(a)) if a.size else 0.0
    drift = np.max(np.abs(a - ah)) if a.size else 0.0
    if drift > DRIFT_TOL * max(scale, 1.0):
        raise ValueError(f"matrix is not Hermitian (drift {drift:.3e})")
    return 0.5 * (a + ah)


def _locate_failure(a: np.ndarray) -> tuple[int, ...]:
    stack = a.reshape((-1,) + a.shape[-2:])
    for flat, mat in enumerate(stack):
        try:
            np.linalg.cholesky(mat)
        except np.linalg.LinAlgError:
            return tuple(int(i) for i in np.unravel_index(flat, a.shape[:-2]))
    return ()


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with positive real diagonal; raises NotPositiveDefinite."""
    a = _symmetrized(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        index = _locate_failure(a)
        where = f" at {index}" if index else ""
        raise NotPositiveDefinite(f"matrix is not positive definite{where}", index) from None


def is_pd(a: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(_symmetrized(a))
    except np.linalg.LinAlgError:
        return False
    return True


def logdet_pd(a: np.ndarray) -> np.ndarray | float:
    chol = cholesky(a)
    diag = np.diagonal(chol, axis1=-2, axis2=-1).real
    out = 2.0 * np.sum(np.log(diag), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def inverse_pd(a: np.ndarray) -> np.ndarray:
    chol = cholesky(a)
    m = chol.shape[-1]
    eye = np.broadcast_to(np.eye(m, dtype=chol.dtype), chol.shape)
    linv = np.linalg.solve(chol, eye)
    inv = np.conj(np.swapaxes(linv, -1, -2)) @ linv
    return hermitian_part(inv)
