import numpy as np
import pytest

from helpers import random_certificate, random_pd_field
from m2spec.covariance import periodogram, sample_zero_lag
from m2spec.estimator import (
    BART,
    RECT,
    EstimatorSpec,
    MonteCarloSetup,
    WindowSpec,
    cross_sections,
    estimate_is,
    lag_window,
    monte_carlo,
    peak_contrast,
    peak_find,
    relative_error,
    run_method,
    summarize,
    windowed_periodogram,
    wrapped_error,
)
from m2spec.grid import GridShape, lambda_box
from m2spec.isdual import Prior, primal_recover
from m2spec.models import SinusoidConfig, simulate_sinusoid


def signal_with_periodogram(phi: np.ndarray, epsilon: float) -> np.ndarray:
    """Scalar field whose periodogram (with ridge ``epsilon``) is exactly ``phi``."""
    dims = phi.shape[:-2]
    total = int(np.prod(dims))
    yhat = np.sqrt(total * (phi[..., 0, 0].real - epsilon / total))
    return np.fft.ifftn(yhat)[..., None]


class TestEstimateIs:
    def test_recovers_injected_spectrum(self, rng):
        dims = (7, 6, 5)
        box = lambda_box([1, 1, 1], dims)
        psi = Prior(random_pd_field(rng, dims, 1), 3)
        q = random_certificate(rng, box, psi, 0.6)
        phi_true = primal_recover(q, psi)
        eps = 1e-3
        y = signal_with_periodogram(phi_true, eps)
        np.testing.assert_allclose(periodogram(y, eps).field, phi_true, atol=1e-12)
        phi, report = estimate_is(y, EstimatorSpec(prior="field", prior_field=psi.field, epsilon=eps))
        assert report.converged
        assert np.max(np.abs(phi - phi_true)) / np.max(np.abs(phi_true)) < 1e-7

    def test_zero_lag_box_identity_prior_returns_sample_covariance(self, rng):
        y = rng.standard_normal((6, 5, 2)) + 1j * rng.standard_normal((6, 5, 2))
        phi, _ = estimate_is(y, EstimatorSpec(lag_radii=(0, 0), prior="identity", epsilon=0.1))
        expected = sample_zero_lag(y) + 0.1 / 30 * np.eye(2)
        np.testing.assert_allclose(phi, np.broadcast_to(expected, phi.shape), atol=1e-9)

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="prior"):
            EstimatorSpec(prior="flat")
        with pytest.raises(ValueError, match="prior_field"):
            EstimatorSpec(prior="field")

    def test_noiseless_on_grid_sinusoid(self):
        shape = GridShape((30, 30, 8))
        idx = (5, 24, 3)
        theta = tuple(float(t) for t in shape.frequencies(idx))
        y = simulate_sinusoid(SinusoidConfig(theta=theta, noise_var=0.0, seed=1))
        # a noise-free field puts the moments next to the feasibility boundary;
        # a visible ridge keeps the Newton path short
        phi, _ = estimate_is(y, EstimatorSpec(epsilon=10.0))
        peak = peak_find(phi)
        assert peak.index == idx
        assert wrapped_error(peak.frequencies, theta) == 0.0


class TestWindows:
    def test_bartlett_weights(self):
        w = lag_window(WindowSpec("bartlett", (3,)), GridShape((8,)))
        np.testing.assert_allclose(w, [1, 2 / 3, 1 / 3, 0, 0, 0, 1 / 3, 2 / 3])

    def test_rectangular_weights(self):
        w = lag_window(WindowSpec("rectangular", (2, 1)), GridShape((6, 4)))
        expected = np.zeros((6, 4))
        expected[[0, 1, 5], 0] = 1
        np.testing.assert_array_equal(w, expected)

    def test_unit_width_is_flat(self, rng):
        y = rng.standard_normal((6, 5, 2)) + 1j * rng.standard_normal((6, 5, 2))
        for kind in ("rectangular", "bartlett"):
            phi = windowed_periodogram(y, WindowSpec(kind, (1, 1)))
            np.testing.assert_allclose(phi, np.broadcast_to(sample_zero_lag(y), phi.shape), atol=1e-12)

    def test_full_width_reproduces_periodogram(self, rng):
        y = rng.standard_normal((6, 5, 2)) + 1j * rng.standard_normal((6, 5, 2))
        phi = windowed_periodogram(y, WindowSpec("rectangular", (6, 5)))
        raw = periodogram(y, 1.0).field - 1.0 / 30 * np.eye(2)
        np.testing.assert_allclose(phi, raw, atol=1e-12)

    def test_translation_invariant(self, rng):
        y = rng.standard_normal((8, 8, 4, 2)) + 1j * rng.standard_normal((8, 8, 4, 2))
        shifted = np.roll(y, (3, -2, 1), axis=(0, 1, 2))
        for w in (WindowSpec("rectangular", (4, 4, 2)), WindowSpec("bartlett", (5, 5, 2))):
            np.testing.assert_allclose(windowed_periodogram(shifted, w), windowed_periodogram(y, w), atol=1e-12)

    def test_hermitian_output(self, rng):
        y = rng.standard_normal((8, 8, 4, 2)) + 1j * rng.standard_normal((8, 8, 4, 2))
        phi = windowed_periodogram(y, WindowSpec("bartlett", (5, 5, 2)))
        assert np.max(np.abs(phi - np.conj(np.swapaxes(phi, -1, -2)))) == 0

    def test_validation(self):
        with pytest.raises(ValueError, match="kind"):
            WindowSpec("hann", (2,))
        with pytest.raises(ValueError, match="positive"):
            WindowSpec("bartlett", (0,))
        with pytest.raises(ValueError, match="exceeds"):
            lag_window(WindowSpec("bartlett", (9,)), GridShape((8,)))
        with pytest.raises(ValueError, match="widths"):
            lag_window(RECT, GridShape((8, 8)))

    def test_baseline_windows(self):
        assert RECT.widths == (8, 8, 2) and BART.widths == (12, 12, 3)


class TestPeaks:
    def test_injected_atom(self):
        phi = np.broadcast_to(np.eye(2), (30, 30, 8, 2, 2)).copy()
        phi[4, 27, 3] += np.ones((2, 2))
        peak = peak_find(phi)
        assert peak.index == (4, 27, 3) and peak.one_based == (5, 28, 4)
        np.testing.assert_allclose(peak.frequencies, [0.8378, -0.6283, 2.3562], atol=5e-5)

    def test_constant_field_tie_breaks_to_first(self):
        assert peak_find(np.broadcast_to(np.eye(2), (4, 5, 2, 2))).index == (0, 0)

    def test_scaling_invariant(self, rng):
        phi = random_pd_field(rng, (6, 5, 4), 2)
        assert peak_find(phi).index == peak_find(7.5 * phi).index

    def test_cross_sections(self, rng):
        phi = random_pd_field(rng, (6, 5, 4), 2)
        sections = cross_sections(phi, (1, 2, 3))
        assert [len(s) for s in sections] == [6, 5, 4]
        power = np.sum(np.abs(phi) ** 2, axis=(-2, -1))
        np.testing.assert_allclose(sections[1], power[1, :, 3])
        assert peak_contrast(np.array([1.0, 2.0, 10.0])) == 5.0

    def test_errors(self):
        assert wrapped_error([np.pi - 0.1, 0, 0], [-np.pi + 0.1, 0, 0]) == pytest.approx(0.2)
        assert relative_error(2 * np.ones(4), np.ones(4)) == 1.0


def test_run_method_unknown():
    with pytest.raises(ValueError, match="unknown method"):
        run_method(np.zeros((4, 4, 4, 2)), "mvdr")


class TestMonteCarlo:
    windows = {"rect": WindowSpec("rectangular", (3, 3, 2)), "bart": WindowSpec("bartlett", (4, 4, 2))}

    def make_setup(self, **kwargs):
        base = dict(trials=2, dims=(8, 8, 6), burn_in=20, windows=self.windows, base_seed=3)
        base.update(kwargs)
        return MonteCarloSetup(**base)

    def test_deterministic_and_thread_independent(self):
        a = monte_carlo(self.make_setup())
        b = monte_carlo(self.make_setup(), threads=2)
        assert a == b
        assert [(r.trial, r.method) for r in a] == [(t, m) for t in range(2) for m in ("is", "rect", "bart")]
        assert [r.seed for r in a] == [3, 3, 3, 4, 4, 4]
        assert all(r.spectrum_rel_error is not None for r in a)

    def test_sinusoid_family(self):
        results = monte_carlo(self.make_setup(family="sinusoid", methods=("is",)))
        assert len(results) == 2 and all(r.spectrum_rel_error is None for r in results)
        assert "median_spectrum_rel_error" not in summarize(results)["is"]

    def test_summarize(self):
        stats = summarize(monte_carlo(self.make_setup()))
        assert set(stats) == {"is", "rect", "bart"}
        assert all("median_spectrum_rel_error" in row for row in stats.values())

    def test_validation(self):
        with pytest.raises(ValueError, match="family"):
            MonteCarloSetup(family="ma")
        with pytest.raises(ValueError, match="trials"):
            MonteCarloSetup(trials=0)
        with pytest.raises(ValueError, match="method"):
            MonteCarloSetup(methods=("is", "capon"))
