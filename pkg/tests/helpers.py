"""Independent oracles and random-instance builders shared by the tests.

The oracles here use explicit loops over grid points and lags; they never
call the FFT-based code paths they are used to check.
"""
from __future__ import annotations

import itertools

import numpy as np

from m2spec.grid import GridShape, LagBox
from m2spec.isdual import DualCertificate, Prior, n_params


def grid_points(dims):
    return list(itertools.product(*[range(n) for n in dims]))


def naive_dft(f: np.ndarray, d: int, inverse: bool = False) -> np.ndarray:
    dims = f.shape[:d]
    sign = 1.0 if inverse else -1.0
    out = np.zeros(f.shape, dtype=complex)
    points = grid_points(dims)
    for ell in points:
        acc = 0
        for t in points:
            phase = sum(2 * np.pi * tj * lj / nj for tj, lj, nj in zip(t, ell, dims))
            acc = acc + f[t] * np.exp(1j * sign * phase)
        out[ell] = acc / (np.prod(dims) if inverse else 1)
    return out


def naive_trig_poly(coeffs: np.ndarray, box: LagBox, dims) -> np.ndarray:
    m = coeffs.shape[-1]
    out = np.zeros(tuple(dims) + (m, m), dtype=complex)
    for ell in grid_points(dims):
        theta = 2 * np.pi * np.asarray(ell) / np.asarray(dims)
        for k, q in zip(box.lags, coeffs):
            out[ell] += q * np.exp(-1j * np.dot(k, theta))
    return out


def naive_moments(phi: np.ndarray, box: LagBox) -> np.ndarray:
    dims = phi.shape[: box.d]
    m = phi.shape[-1]
    out = np.zeros((box.size, m, m), dtype=complex)
    for i, k in enumerate(box.lags):
        for ell in grid_points(dims):
            theta = 2 * np.pi * np.asarray(ell) / np.asarray(dims)
            out[i] += np.exp(1j * np.dot(k, theta)) * phi[ell]
    return out / np.prod(dims)


def random_pd_field(rng: np.random.Generator, dims, m: int, floor: float = 0.5) -> np.ndarray:
    b = rng.standard_normal(tuple(dims) + (m, m)) + 1j * rng.standard_normal(tuple(dims) + (m, m))
    b /= np.sqrt(2 * m)
    return b @ np.conj(np.swapaxes(b, -1, -2)) + floor * np.eye(m)


def random_hermitian_field(rng: np.random.Generator, dims, m: int) -> np.ndarray:
    b = rng.standard_normal(tuple(dims) + (m, m)) + 1j * rng.standard_normal(tuple(dims) + (m, m))
    return 0.5 * (b + np.conj(np.swapaxes(b, -1, -2)))


def random_certificate(rng: np.random.Generator, box: LagBox, psi: Prior, margin: float = 0.5) -> DualCertificate:
    """A random Q with ``||Q(zeta_l)||_2 <= margin * min eig Psi^{-1}`` on the grid."""
    m = psi.m
    q = DualCertificate.unpack(box, m, rng.standard_normal(n_params(box, m)))
    values = q.evaluate(psi.shape)
    q_norm = np.max(np.linalg.norm(values, ord=2, axis=(-2, -1)))
    floor = np.min(np.linalg.eigvalsh(psi.inverse))
    return DualCertificate(box, q.half * (margin * floor / q_norm))


def random_shape(rng: np.random.Generator, d: int, low: int = 5, high: int = 16) -> GridShape:
    return GridShape(tuple(int(n) for n in rng.integers(low, high + 1, size=d)))
