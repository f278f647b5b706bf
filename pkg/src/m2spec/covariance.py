"""Covariance lags estimated from one realization of a vector field.

The estimates are the Fourier moments of the ridge-regularized periodogram,
so a positive definite spectrum matching them exists by construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import GridShape, LagBox, as_shape, check_assumption, dft_field, moment_map


@dataclass
class CovarianceSet:
    """Matrix lags ``Sigma_k`` over a lag box, stored in the box's lag order."""

    box: LagBox
    matrices: np.ndarray

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=complex)
        if self.matrices.shape[0] != self.box.size:
            raise ValueError(
                f"expected {self.box.size} lag matrices, got {self.matrices.shape[0]}"
            )

    @property
    def m(self) -> int:
        return self.matrices.shape[-1]

    def __getitem__(self, lag: Sequence[int]) -> np.ndarray:
        return self.matrices[self.box.index(lag)]

    @property
    def zero_lag(self) -> np.ndarray:
        return self.matrices[self.box.center]

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrices))

    def symmetry_defect(self) -> float:
        """Max deviation from ``Sigma_{-k} = Sigma_k^*``."""
        flipped = np.conj(np.swapaxes(self.matrices[self.box.negation()], -1, -2))
        return float(np.max(np.abs(self.matrices - flipped)))


@dataclass
class Periodogram:
    field: np.ndarray
    epsilon: float

    @property
    def shape(self) -> GridShape:
        return GridShape(self.field.shape[:-2])


def _vector_field(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim < 2:
        raise ValueError("a vector field needs at least one grid axis and a channel axis")
    return y


def finite_fourier(y: np.ndarray) -> np.ndarray:
    y = _vector_field(y)
    return dft_field(y, y.ndim - 1, "forward")


def sample_zero_lag(y: np.ndarray) -> np.ndarray:
    """``(1/|N|) sum_t y(t) y(t)^*`` without any ridge."""
    y = _vector_field(y)
    flat = y.reshape(-1, y.shape[-1])
    return flat.T @ flat.conj() / flat.shape[0]


def default_epsilon(y: np.ndarray) -> float:
    """Scale-relative ridge: ``1e-6 * trace(raw Sigma_0) / m``, floored at 1e-12."""
    raw = sample_zero_lag(y)
    eps = 1e-6 * float(np.trace(raw).real) / raw.shape[0]
    return max(eps, 1e-12)


def periodogram(
    y: np.ndarray,
    epsilon: float | None = None,
    shape: GridShape | Sequence[int] | None = None,
) -> Periodogram:
    """``(1/|N|) yhat yhat^* + (epsilon/|N|) I`` at every grid point."""
    y = _vector_field(y)
    if shape is not None and as_shape(shape).dims != y.shape[:-1]:
        raise ValueError(
            f"data of grid shape {y.shape[:-1]} does not cover the grid {as_shape(shape).dims}"
        )
    if epsilon is None:
        epsilon = default_epsilon(y)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n_total = int(np.prod(y.shape[:-1]))
    m = y.shape[-1]
    yhat = finite_fourier(y)
    field = yhat[..., :, None] * np.conj(yhat[..., None, :]) / n_total
    field += (epsilon / n_total) * np.eye(m)
    return Periodogram(field, float(epsilon))


def covariance_from_periodogram(p: Periodogram, box: LagBox) -> CovarianceSet:
    return CovarianceSet(box, moment_map(p.field, box))


def estimate_covariances(
    y: np.ndarray, box: LagBox, epsilon: float | None = None
) -> tuple[CovarianceSet, Periodogram]:
    p = periodogram(y, epsilon)
    return covariance_from_periodogram(p, box), p


def covariance_direct_oracle(y: np.ndarray, box: LagBox, epsilon: float) -> CovarianceSet:
    """Circular correlation sums, one lag at a time.  Test oracle only."""
    y = _vector_field(y)
    d = y.ndim - 1
    check_assumption(box.radii, y.shape[:d])
    n_total = int(np.prod(y.shape[:d]))
    m = y.shape[-1]
    axes = tuple(range(d))
    out = np.empty((box.size, m, m), dtype=complex)
    for i, k in enumerate(box.lags):
        # shifted[s] = y((s + k) mod N)
        shifted = np.roll(y, tuple(-int(kj) for kj in k), axis=axes)
        out[i] = shifted.reshape(-1, m).T @ np.conj(y.reshape(-1, m)) / n_total
    out[box.center] += (epsilon / n_total) * np.eye(m)
    return CovarianceSet(box, out)


def circular_covariance_at(y: np.ndarray, lag: Sequence[int]) -> np.ndarray:
    """Ridge-free circular correlation at an arbitrary (possibly wrapped) lag."""
    y = _vector_field(y)
    d = y.ndim - 1
    shifted = np.roll(y, tuple(-int(k) for k in lag), axis=tuple(range(d)))
    flat = shifted.reshape(-1, y.shape[-1])
    return flat.T @ np.conj(y.reshape(flat.shape)) / flat.shape[0]
