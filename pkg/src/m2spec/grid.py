"""Multi-index bookkeeping on the discrete torus and exact DFTs of fields.

Fields are plain numpy arrays whose leading ``d`` axes index the grid
(row-major, axis order ``l_1, ..., l_d``) and whose trailing axes hold the
per-point value: ``(*dims, m)`` for vector fields, ``(*dims, m, m)`` for
matrix fields.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class AssumptionViolation(ValueError):
    """Raised when a lag box is too wide for the grid (needs N_j > 2 n_j)."""


@dataclass(frozen=True)
class GridShape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 1:
            raise ValueError("grid needs at least one axis")
        if any(n < 1 for n in dims):
            raise ValueError(f"grid dims must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def frequencies(self, index: Sequence[int]) -> np.ndarray:
        """Angular frequency of a grid point, wrapped into (-pi, pi]."""
        theta = 2.0 * np.pi * np.asarray(index, dtype=float) / np.asarray(self.dims)
        return np.where(theta > np.pi, theta - 2.0 * np.pi, theta)

    def axis_angles(self, axis: int) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.dims[axis]) / self.dims[axis]


def as_shape(shape: GridShape | Sequence[int]) -> GridShape:
    return shape if isinstance(shape, GridShape) else GridShape(tuple(shape))


@dataclass(frozen=True)
class LagBox:
    """The symmetric box of lags ``|k_j| <= n_j``, enumerated lexicographically.

    ``lags[i]`` is the i-th lag.  Because the enumeration is lexicographic and
    the box is symmetric, the zero lag sits at ``center`` and lag ``i`` has its
    negative at ``size - 1 - i``.  The canonical half used to parametrize
    Hermitian-symmetric coefficient sets is ``[center, center+1, ..., size-1]``
    (zero lag first, then the lexicographically positive lags).
    """

    radii: tuple[int, ...]
    lags: np.ndarray = field(compare=False, repr=False)

    @property
    def d(self) -> int:
        return len(self.radii)

    @property
    def size(self) -> int:
        return len(self.lags)

    @property
    def center(self) -> int:
        return (self.size - 1) // 2

    @property
    def half(self) -> np.ndarray:
        return np.arange(self.center, self.size)

    def negation(self) -> np.ndarray:
        return np.arange(self.size)[::-1]

    def index(self, lag: Sequence[int]) -> int:
        lag = tuple(int(k) for k in lag)
        if len(lag) != self.d or any(abs(k) > n for k, n in zip(lag, self.radii)):
            raise KeyError(f"lag {lag} outside box with radii {self.radii}")
        i = 0
        for k, n in zip(lag, self.radii):
            i = i * (2 * n + 1) + (k + n)
        return i

    def wrapped(self, shape: GridShape | Sequence[int]) -> tuple[np.ndarray, ...]:
        """Grid coordinates of every lag, as a fancy-index tuple."""
        dims = np.asarray(as_shape(shape).dims)
        return tuple((self.lags % dims).T)


def make_lag_box(radii: Sequence[int]) -> LagBox:
    radii = tuple(int(n) for n in radii)
    if any(n < 0 for n in radii):
        raise ValueError(f"lag radii must be nonnegative, got {radii}")
    ranges = [range(-n, n + 1) for n in radii]
    lags = np.array(list(itertools.product(*ranges)), dtype=int).reshape(-1, len(radii))
    return LagBox(radii, lags)


def check_assumption(radii: Sequence[int], shape: GridShape | Sequence[int]) -> None:
    shape = as_shape(shape)
    if len(radii) != shape.d:
        raise ValueError(f"lag radii have length {len(radii)} but the grid has d={shape.d}")
    for axis, (n, big_n) in enumerate(zip(radii, shape.dims)):
        if not big_n > 2 * n:
            raise AssumptionViolation(
                f"axis {axis}: grid size {big_n} must exceed twice the lag radius {n}"
            )


def lambda_box(radii: Sequence[int], shape: GridShape | Sequence[int]) -> LagBox:
    check_assumption(radii, shape)
    return make_lag_box(radii)


def wrap_lag(k: Iterable[int], shape: GridShape | Sequence[int]) -> tuple[int, ...]:
    dims = as_shape(shape).dims
    return tuple(int(kj) % n for kj, n in zip(k, dims))


def dft_field(f: np.ndarray, d: int, direction: str = "forward") -> np.ndarray:
    """Entrywise d-dimensional DFT over the leading ``d`` axes.

    Forward multiplies by ``exp(-i<t, theta_l>)`` and sums, without scaling;
    inverse uses ``exp(+i<t, theta_l>)`` and divides by the grid size.
    """
    axes = tuple(range(d))
    if direction == "forward":
        return np.fft.fftn(f, axes=axes)
    if direction == "inverse":
        return np.fft.ifftn(f, axes=axes)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def eval_trig_polynomial(
    coeffs: np.ndarray, box: LagBox, shape: GridShape | Sequence[int]
) -> np.ndarray:
    """Evaluate ``Q(zeta_l) = sum_k Q_k exp(-i<k, theta_l>)`` on the grid.

    ``coeffs`` has shape ``(box.size, m, m)`` in the box's lag order.
    """
    shape = as_shape(shape)
    check_assumption(box.radii, shape)
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != box.size:
        raise ValueError(f"expected {box.size} coefficients, got {coeffs.shape[0]}")
    grid = np.zeros(shape.dims + coeffs.shape[1:], dtype=complex)
    grid[box.wrapped(shape)] = coeffs
    return dft_field(grid, shape.d, "forward")


def moment_map(phi: np.ndarray, box: LagBox) -> np.ndarray:
    """Fourier moments ``(1/|N|) sum_l zeta_l^k Phi(zeta_l)`` for every lag in the box.

    Returns an array of shape ``(box.size, m, m)``.
    """
    d = box.d
    shape = GridShape(phi.shape[:d])
    check_assumption(box.radii, shape)
    return dft_field(phi, d, "inverse")[box.wrapped(shape)]
