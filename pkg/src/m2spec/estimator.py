"""End-to-end spectral estimators, peak extraction and the Monte-Carlo harness."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .covariance import covariance_from_periodogram, finite_fourier, periodogram
from .grid import GridShape, lambda_box
from .isdual import Prior, SolveOptions, SolveReport, primal_recover, solve_dual
from .models import (
    ArConfig,
    GroundTruth,
    SinusoidConfig,
    simulate_ar,
    simulate_sinusoid,
    true_spectrum,
)

log = logging.getLogger(__name__)

METHODS = ("is", "rect", "bart")
PRIOR_KINDS = ("constant", "identity", "field")


@dataclass
class EstimatorSpec:
    lag_radii: tuple[int, ...] = (1, 1, 1)
    prior: str = "constant"
    prior_field: np.ndarray | None = None
    epsilon: float | None = None
    solver: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if self.prior not in PRIOR_KINDS:
            raise ValueError(f"prior must be one of {PRIOR_KINDS}, got {self.prior!r}")
        if self.prior == "field" and self.prior_field is None:
            raise ValueError("prior='field' needs prior_field")


@dataclass
class WindowSpec:
    kind: str
    widths: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("rectangular", "bartlett"):
            raise ValueError(f"window kind must be 'rectangular' or 'bartlett', got {self.kind!r}")
        self.widths = tuple(int(w) for w in self.widths)
        if any(w < 1 for w in self.widths):
            raise ValueError(f"window widths must be positive, got {self.widths}")


RECT = WindowSpec("rectangular", (8, 8, 2))
BART = WindowSpec("bartlett", (12, 12, 3))


@dataclass
class TrialResult:
    trial: int
    method: str
    seed: int
    peak_error: float
    spectrum_rel_error: float | None = None


@dataclass
class Peak:
    index: tuple[int, ...]  # 0-based
    frequencies: np.ndarray  # wrapped into (-pi, pi]

    @property
    def one_based(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in self.index)


def estimate_is(y: np.ndarray, spec: EstimatorSpec) -> tuple[np.ndarray, SolveReport]:
    d = y.ndim - 1
    shape = GridShape(y.shape[:d])
    m = y.shape[-1]
    box = lambda_box(spec.lag_radii, shape)
    sigma = covariance_from_periodogram(periodogram(y, spec.epsilon), box)
    if spec.prior == "constant":
        psi = Prior.constant(sigma.zero_lag, shape)
    elif spec.prior == "identity":
        psi = Prior.identity(shape, m)
    else:
        psi = Prior(spec.prior_field, d)
    q, report = solve_dual(psi, sigma, spec.solver)
    return primal_recover(q, psi), report


def lag_window(w: WindowSpec, shape: GridShape) -> np.ndarray:
    """Separable window weights laid out on the wrapped lag grid.

    Each grid lag is represented by its smallest-magnitude signed lag, so a
    window wider than half the grid covers every circular lag exactly once.
    """
    if len(w.widths) != shape.d:
        raise ValueError(f"window has {len(w.widths)} widths but the grid has d={shape.d}")
    weights = np.ones(shape.dims)
    for axis, (width, n) in enumerate(zip(w.widths, shape.dims)):
        if width > n:
            raise ValueError(f"window width {width} exceeds grid size {n} on axis {axis}")
        k = np.arange(n)
        k = np.where(k > n // 2, k - n, k)
        if w.kind == "rectangular":
            wk = (np.abs(k) < width).astype(float)
        else:
            wk = np.clip(1.0 - np.abs(k) / width, 0.0, None)
        view = [1] * shape.d
        view[axis] = n
        weights = weights * wk.reshape(view)
    return weights


def windowed_periodogram(y: np.ndarray, w: WindowSpec) -> np.ndarray:
    """Lag-window (Blackman-Tukey) estimate built from circular covariance estimates."""
    d = y.ndim - 1
    shape = GridShape(y.shape[:d])
    yhat = finite_fourier(y)
    raw = yhat[..., :, None] * np.conj(yhat[..., None, :]) / shape.total
    axes = tuple(range(d))
    lags = np.fft.ifftn(raw, axes=axes)
    weights = lag_window(w, shape)[(...,) + (None, None)]
    out = np.fft.fftn(weights * lags, axes=axes)
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def frobenius_sq(phi: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(phi) ** 2, axis=(-2, -1))


def peak_find(phi: np.ndarray) -> Peak:
    power = frobenius_sq(phi)
    index = tuple(int(i) for i in np.unravel_index(np.argmax(power), power.shape))
    return Peak(index, GridShape(power.shape).frequencies(index))


def cross_sections(phi: np.ndarray, center: Sequence[int]) -> list[np.ndarray]:
    """Squared Frobenius norm along each axis through the 0-based ``center``."""
    power = frobenius_sq(phi)
    out = []
    for axis in range(power.ndim):
        idx = list(center)
        idx[axis] = slice(None)
        out.append(power[tuple(idx)])
    return out


def peak_contrast(section: np.ndarray) -> float:
    return float(np.max(section) / np.median(section))


def wrapped_error(theta_hat: Sequence[float], theta: Sequence[float]) -> float:
    diff = np.angle(np.exp(1j * (np.asarray(theta_hat) - np.asarray(theta))))
    return float(np.linalg.norm(diff))


def relative_error(phi_hat: np.ndarray, phi: np.ndarray) -> float:
    return float(np.linalg.norm(phi_hat - phi) / np.linalg.norm(phi))


def run_method(y: np.ndarray, method: str, spec: EstimatorSpec | None = None,
               windows: dict[str, WindowSpec] | None = None) -> np.ndarray:
    if method == "is":
        return estimate_is(y, spec or EstimatorSpec())[0]
    windows = windows or {"rect": RECT, "bart": BART}
    if method not in windows:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return windowed_periodogram(y, windows[method])


@dataclass
class MonteCarloSetup:
    family: str = "ar"
    methods: tuple[str, ...] = METHODS
    trials: int = 100
    base_seed: int = 0
    dims: tuple[int, ...] = (30, 30, 8)
    amplitude: float = 1.0
    antenna_ratio: int = 20
    noise_var: float = 2.0
    pole_moduli: tuple[float, ...] = (0.3, 0.3, 0.3)
    burn_in: int = 200
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    windows: dict[str, WindowSpec] = field(default_factory=lambda: {"rect": RECT, "bart": BART})

    def __post_init__(self):
        if self.family not in ("sinusoid", "ar"):
            raise ValueError(f"family must be 'sinusoid' or 'ar', got {self.family!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for method in self.methods:
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def _draw_theta(seed: int) -> tuple[float, ...]:
    rng = np.random.default_rng([seed, 1])
    return tuple(float(t) for t in rng.uniform(-np.pi, np.pi, 3))


def run_trial(setup: MonteCarloSetup, trial: int) -> list[TrialResult]:
    seed = setup.base_seed + trial
    theta = _draw_theta(seed)
    if setup.family == "sinusoid":
        cfg = SinusoidConfig(setup.dims, setup.amplitude, theta, setup.antenna_ratio, setup.noise_var, seed)
        y = simulate_sinusoid(cfg)
        truth = None
    else:
        cfg = ArConfig(setup.dims, setup.pole_moduli, theta, setup.antenna_ratio, setup.noise_var,
                       setup.burn_in, seed)
        y = simulate_ar(cfg)
        truth = true_spectrum(GroundTruth.from_config(cfg), setup.dims).field
    results = []
    for method in setup.methods:
        phi_hat = run_method(y, method, setup.estimator, setup.windows)
        peak = peak_find(phi_hat)
        rel = relative_error(phi_hat, truth) if truth is not None else None
        results.append(TrialResult(trial, method, seed, wrapped_error(peak.frequencies, theta), rel))
    return results


def monte_carlo(setup: MonteCarloSetup, threads: int = 1) -> list[TrialResult]:
    """Paired trials: every method sees the same realization; ordered by trial index."""
    trials = range(setup.trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(lambda t: run_trial(setup, t), trials))
    else:
        batches = [run_trial(setup, t) for t in trials]
    return [r for batch in batches for r in batch]


def summarize(results: Iterable[TrialResult]) -> dict[str, dict[str, float]]:
    by_method: dict[str, list[TrialResult]] = {}
    for r in results:
        by_method.setdefault(r.method, []).append(r)
    out = {}
    for method, rs in by_method.items():
        row = {"median_peak_error": float(np.median([r.peak_error for r in rs]))}
        rel = [r.spectrum_rel_error for r in rs if r.spectrum_rel_error is not None]
        if rel:
            row["median_spectrum_rel_error"] = float(np.median(rel))
        out[method] = row
    return out
