"""Seeded two-channel test fields: a 3-d sinusoid in noise and a 3-d AR field in noise.

Both mimic two receive arrays separated by ``antenna_ratio`` element spacings:
channel 2 sees channel 1's signal rotated by ``exp(i M theta_3)``.  Complex
noise is circular with ``E|w|^2`` equal to the stated variance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .grid import GridShape, as_shape

RADAR_DIMS = (30, 30, 8)
RADAR_THETA = (0.8101, -0.5872, 2.1798)


def complex_noise(rng: np.random.Generator, shape: tuple[int, ...], variance: float) -> np.ndarray:
    z = rng.standard_normal(shape + (2,))
    return np.sqrt(variance / 2.0) * (z[..., 0] + 1j * z[..., 1])


def r_matrix(theta3: float, antenna_ratio: int) -> np.ndarray:
    phase = np.exp(1j * antenna_ratio * theta3)
    return np.array([[1.0, np.conj(phase)], [phase, 1.0]], dtype=complex)


def _check_theta(theta: Sequence[float]) -> tuple[float, ...]:
    theta = tuple(float(t) for t in theta)
    if len(theta) != 3:
        raise ValueError(f"theta must have 3 components, got {len(theta)}")
    if any(not -np.pi <= t <= np.pi for t in theta):
        raise ValueError(f"theta components must lie in [-pi, pi], got {theta}")
    return theta


@dataclass
class SinusoidConfig:
    dims: tuple[int, ...] = RADAR_DIMS
    amplitude: float = 1.0
    theta: tuple[float, ...] = RADAR_THETA
    antenna_ratio: int = 20
    noise_var: float = 2.0
    seed: int = 0

    def __post_init__(self):
        self.dims = as_shape(self.dims).dims
        if len(self.dims) != 3:
            raise ValueError(f"dims: the sinusoid model is 3-d, got {self.dims}")
        self.theta = _check_theta(self.theta)
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be nonnegative, got {self.noise_var}")


@dataclass
class ArConfig:
    dims: tuple[int, ...] = RADAR_DIMS
    pole_moduli: tuple[float, ...] = (0.3, 0.3, 0.3)
    theta: tuple[float, ...] = RADAR_THETA
    antenna_ratio: int = 20
    noise_var: float = 2.0
    burn_in: int | tuple[int, ...] = 200
    seed: int = 0

    def __post_init__(self):
        self.dims = as_shape(self.dims).dims
        if len(self.dims) != 3:
            raise ValueError(f"dims: the AR model is 3-d, got {self.dims}")
        self.theta = _check_theta(self.theta)
        self.pole_moduli = tuple(float(r) for r in self.pole_moduli)
        if len(self.pole_moduli) != 3 or any(not 0 <= r < 1 for r in self.pole_moduli):
            raise ValueError(f"pole_moduli must be 3 values in [0, 1), got {self.pole_moduli}")
        if not sum(self.pole_moduli) < 1:
            raise ValueError(f"pole_moduli must sum below 1 for a stable recursion, got {sum(self.pole_moduli)}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be nonnegative, got {self.noise_var}")
        burn = (self.burn_in,) * 3 if np.isscalar(self.burn_in) else tuple(self.burn_in)
        if len(burn) != 3 or any(int(b) < 0 for b in burn):
            raise ValueError(f"burn_in must be a nonnegative integer or 3 of them, got {self.burn_in}")
        self.burn_in = tuple(int(b) for b in burn)

    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.pole_moduli) * np.exp(1j * np.asarray(self.theta))


def simulate_sinusoid(cfg: SinusoidConfig) -> np.ndarray:
    """Two-channel sinusoid-in-noise field of shape ``(*dims, 2)``."""
    rng = np.random.default_rng(cfg.seed)
    phi0 = rng.uniform(-np.pi, np.pi)
    grids = np.meshgrid(*[np.arange(n) for n in cfg.dims], indexing="ij")
    phase = sum(t * g for t, g in zip(cfg.theta, grids)) + phi0
    s = cfg.amplitude * np.exp(1j * phase)
    y = np.empty(cfg.dims + (2,), dtype=complex)
    y[..., 0] = s + complex_noise(rng, cfg.dims, cfg.noise_var)
    y[..., 1] = s * np.exp(1j * cfg.antenna_ratio * cfg.theta[2]) + complex_noise(rng, cfg.dims, cfg.noise_var)
    return y


def ar_recursion(w_source, dims: tuple[int, int, int], alpha: Sequence[complex]) -> np.ndarray:
    """Run ``x(t) = sum_j alpha_j x(t - e_j) + w(t)`` with zero boundary on a 3-d grid.

    The recursion is swept over anti-diagonals ``t_1 + t_2 = s``; along the last
    axis it is a first-order IIR filter.  ``w_source(n)`` returns the innovations
    for the ``n`` points of the next diagonal as an ``(n, dims[2])`` array.
    Returns the full field.
    """
    n1, n2, n3 = dims
    a1, a2, a3 = alpha
    x = np.zeros(dims, dtype=complex)
    for s in range(n1 + n2 - 1):
        i = np.arange(max(0, s - n2 + 1), min(s, n1 - 1) + 1)
        j = s - i
        u = w_source(len(i)).astype(complex)
        has_up = i >= 1
        u[has_up] += a1 * x[i[has_up] - 1, j[has_up]]
        has_left = j >= 1
        u[has_left] += a2 * x[i[has_left], j[has_left] - 1]
        x[i, j] = lfilter([1.0], [1.0, -a3], u, axis=-1)
    return x


def simulate_ar(cfg: ArConfig) -> np.ndarray:
    """Two-channel AR-in-noise field of shape ``(*dims, 2)``, unit innovation variance."""
    rng = np.random.default_rng(cfg.seed)
    full = tuple(n + b for n, b in zip(cfg.dims, cfg.burn_in))
    x = ar_recursion(lambda n: complex_noise(rng, (n, full[2]), 1.0), full, cfg.alpha)
    x = x[tuple(slice(b, None) for b in cfg.burn_in)]
    y = np.empty(cfg.dims + (2,), dtype=complex)
    y[..., 0] = x + complex_noise(rng, cfg.dims, cfg.noise_var)
    y[..., 1] = x * np.exp(1j * cfg.antenna_ratio * cfg.theta[2]) + complex_noise(rng, cfg.dims, cfg.noise_var)
    return y


@dataclass
class SpectralAtom:
    """A point mass ``weight * R`` at frequency ``theta`` (kept symbolic)."""

    theta: tuple[float, ...]
    weight: float
    matrix: np.ndarray


@dataclass
class GroundTruth:
    kind: str  # "ideal-sinusoid" or "rational-ar"
    theta: tuple[float, ...]
    antenna_ratio: int
    noise_var: float
    amplitude: float = 1.0
    pole_moduli: tuple[float, ...] = (0.0, 0.0, 0.0)
    innovation_var: float = 1.0

    @property
    def r(self) -> np.ndarray:
        return r_matrix(self.theta[2], self.antenna_ratio)

    @classmethod
    def from_config(cls, cfg: SinusoidConfig | ArConfig) -> "GroundTruth":
        if isinstance(cfg, ArConfig):
            return cls("rational-ar", cfg.theta, cfg.antenna_ratio, cfg.noise_var, pole_moduli=cfg.pole_moduli)
        return cls("ideal-sinusoid", cfg.theta, cfg.antenna_ratio, cfg.noise_var, amplitude=cfg.amplitude)


@dataclass
class TrueSpectrum:
    field: np.ndarray
    atom: SpectralAtom | None = None


def ar_spectral_density(omega: np.ndarray, pole_moduli, theta, innovation_var: float = 1.0) -> np.ndarray:
    """``Var(w) / |1 - sum_j alpha_j exp(-i omega_j)|^2`` at frequencies ``omega[..., 3]``."""
    alpha = np.asarray(pole_moduli) * np.exp(1j * np.asarray(theta))
    denom = 1.0 - np.sum(alpha * np.exp(-1j * np.asarray(omega)), axis=-1)
    return innovation_var / np.abs(denom) ** 2


def true_spectrum(truth: GroundTruth, shape: GridShape | Sequence[int]) -> TrueSpectrum:
    shape = as_shape(shape)
    background = truth.noise_var * np.eye(2)
    if truth.kind == "ideal-sinusoid":
        field = np.broadcast_to(background, shape.dims + (2, 2)).astype(complex)
        return TrueSpectrum(field, SpectralAtom(truth.theta, truth.amplitude**2, truth.r))
    if truth.kind != "rational-ar":
        raise ValueError(f"unknown ground-truth kind {truth.kind!r}")
    grids = np.meshgrid(*[shape.axis_angles(j) for j in range(shape.d)], indexing="ij")
    omega = np.stack(grids, axis=-1)
    phi_x = ar_spectral_density(omega, truth.pole_moduli, truth.theta, truth.innovation_var)
    return TrueSpectrum(phi_x[..., None, None] * truth.r + background)
