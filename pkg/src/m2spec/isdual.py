"""Itakura-Saito covariance extension on the discrete torus, solved in the dual.

Given a prior spectrum ``Psi`` and covariance lags ``Sigma`` over a lag box,
the estimate is ``Phi = (Psi^{-1} + Q)^{-1}`` where the matrix trigonometric
polynomial ``Q`` minimizes the strictly convex dual function

    J(Q) = <Q, Sigma> - mean_l log det(Psi^{-1} + Q)(zeta_l)

over the open set where ``Psi^{-1} + Q`` is positive definite on the grid.

Real coordinates
----------------
Only the canonical half of the box is free (``Q_{-k} = Q_k^*``).  The real
parameter vector holds Q_0 as its upper triangle (diagonal reals, then
re/im of each strictly-upper entry in row-major order) followed by re/im of
every entry of Q_k for each positive lag k, giving ``m^2 * |box|`` reals.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .covariance import CovarianceSet
from .grid import GridShape, LagBox, check_assumption, eval_trig_polynomial, make_lag_box, moment_map
from .hermitian import NotPositiveDefinite, cholesky, inverse_pd, is_pd, logdet_pd

log = logging.getLogger(__name__)


class Infeasible(ValueError):
    """Psi^{-1} + Q is not positive definite at some grid point."""


class SolverError(RuntimeError):
    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


class MaxIterationsExceeded(SolverError):
    pass


class InfeasibleMoments(SolverError):
    """Line search stalled; the covariances are most likely not feasible."""


# --------------------------------------------------------------------------
# parametrization


@functools.lru_cache(maxsize=64)
def _basis(radii: tuple[int, ...], m: int) -> np.ndarray:
    """Full coefficient sets of the real coordinate directions, shape (p, K, m, m)."""
    box = make_lag_box(radii)
    size, center = box.size, box.center
    n_half = size - 1 - center
    p = m * m + n_half * 2 * m * m
    basis = np.zeros((p, size, m, m), dtype=complex)
    i = 0
    for a in range(m):
        basis[i, center, a, a] = 1.0
        i += 1
    for a in range(m):
        for b in range(a + 1, m):
            basis[i, center, a, b] = 1.0
            basis[i, center, b, a] = 1.0
            basis[i + 1, center, a, b] = 1j
            basis[i + 1, center, b, a] = -1j
            i += 2
    for pos in range(center + 1, size):
        neg = size - 1 - pos
        for a in range(m):
            for b in range(m):
                basis[i, pos, a, b] = 1.0
                basis[i, neg, b, a] = 1.0
                basis[i + 1, pos, a, b] = 1j
                basis[i + 1, neg, b, a] = -1j
                i += 2
    basis.setflags(write=False)
    return basis


def n_params(box: LagBox, m: int) -> int:
    return m * m * box.size


@dataclass
class DualCertificate:
    """Lagrange-multiplier coefficients; only the canonical half is stored.

    ``half[0]`` is Q_0 (Hermitian), ``half[j]`` is Q_k for the j-th positive lag.
    """

    box: LagBox
    half: np.ndarray

    def __post_init__(self):
        self.half = np.array(self.half, dtype=complex)
        self.half[0] = 0.5 * (self.half[0] + self.half[0].conj().T)

    @property
    def m(self) -> int:
        return self.half.shape[-1]

    @classmethod
    def zeros(cls, box: LagBox, m: int) -> "DualCertificate":
        return cls(box, np.zeros((len(box.half), m, m), dtype=complex))

    @classmethod
    def from_full(cls, box: LagBox, coeffs: np.ndarray) -> "DualCertificate":
        return cls(box, np.asarray(coeffs)[box.half])

    def full(self) -> np.ndarray:
        c = self.box.center
        out = np.empty((self.box.size,) + self.half.shape[1:], dtype=complex)
        out[c:] = self.half
        out[:c] = np.conj(np.swapaxes(self.half[1:][::-1], -1, -2))
        return out

    def pack(self) -> np.ndarray:
        m = self.m
        q0 = self.half[0]
        parts = [q0.diagonal().real]
        iu = np.triu_indices(m, 1)
        upper = q0[iu]
        parts.append(np.column_stack([upper.real, upper.imag]).ravel())
        rest = self.half[1:].reshape(-1)
        parts.append(np.column_stack([rest.real, rest.imag]).ravel())
        return np.concatenate(parts)

    @classmethod
    def unpack(cls, box: LagBox, m: int, x: np.ndarray) -> "DualCertificate":
        x = np.asarray(x, dtype=float)
        if x.shape != (n_params(box, m),):
            raise ValueError(f"expected {n_params(box, m)} parameters, got {x.shape}")
        full = np.tensordot(x, _basis(box.radii, m), axes=1)
        return cls.from_full(box, full)

    def evaluate(self, shape: GridShape | Sequence[int]) -> np.ndarray:
        return eval_trig_polynomial(self.full(), self.box, shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.full()))


@dataclass
class Prior:
    """A positive definite spectral field, with its pointwise inverse cached."""

    field: np.ndarray
    d: int
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.field = np.asarray(self.field, dtype=complex)
        try:
            self.inverse = inverse_pd(self.field)
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(f"prior is not positive definite at grid point {exc.index}", exc.index) from None

    @classmethod
    def constant(cls, matrix: np.ndarray, shape: GridShape | Sequence[int]) -> "Prior":
        shape = shape if isinstance(shape, GridShape) else GridShape(tuple(shape))
        matrix = np.asarray(matrix, dtype=complex)
        return cls(np.broadcast_to(matrix, shape.dims + matrix.shape).copy(), shape.d)

    @classmethod
    def identity(cls, shape: GridShape | Sequence[int], m: int) -> "Prior":
        return cls.constant(np.eye(m), shape)

    @property
    def shape(self) -> GridShape:
        return GridShape(self.field.shape[: self.d])

    @property
    def m(self) -> int:
        return self.field.shape[-1]


@dataclass
class SolveOptions:
    tol: float = 1e-9
    moment_tol: float = 1e-6
    max_iter: int = 200
    armijo: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-14
    method: str = "newton"  # or "bfgs"


@dataclass
class SolveReport:
    iterations: int = 0
    final_gradient_norm: float = float("nan")
    final_dual_value: float = float("nan")
    moment_residual: float = float("nan")
    backtracking_steps: int = 0
    converged: bool = False
    dual_values: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_gradient_norm": self.final_gradient_norm,
            "final_dual_value": self.final_dual_value,
            "moment_residual": self.moment_residual,
            "backtracking_steps": self.backtracking_steps,
            "converged": self.converged,
        }


# --------------------------------------------------------------------------
# evaluation


def _check_compat(box: LagBox, psi: Prior, m: int) -> None:
    if box.d != psi.d:
        raise ValueError(f"lag box has d={box.d} but the prior lives on d={psi.d}")
    if m != psi.m:
        raise ValueError(f"certificate is {m}x{m} but the prior is {psi.m}x{psi.m}")
    check_assumption(box.radii, psi.shape)


def _inner(box: LagBox, sigma: np.ndarray) -> np.ndarray:
    """Coordinates of the linear functional ``x -> <Q(x), Sigma>``."""
    m = sigma.shape[-1]
    basis = _basis(box.radii, m).reshape(n_params(box, m), -1)
    return (basis @ np.conj(sigma.reshape(-1))).real


def _dual_matrix(x: np.ndarray, box: LagBox, psi: Prior) -> np.ndarray:
    q = DualCertificate.unpack(box, psi.m, x)
    return psi.inverse + q.evaluate(psi.shape)


class _Point:
    """Everything the solver needs at one feasible iterate."""

    def __init__(self, x: np.ndarray, box: LagBox, psi: Prior, sigma: np.ndarray):
        self.x = x
        self.box = box
        self.psi = psi
        a = _dual_matrix(x, box, psi)
        try:
            logdet = logdet_pd(a)
        except NotPositiveDefinite as exc:
            raise Infeasible(f"Psi^-1 + Q is not positive definite at grid point {exc.index}") from None
        self.phi = inverse_pd(a)
        self.value = float(x @ _inner(box, sigma) - np.mean(logdet))
        self.moments = moment_map(self.phi, box)
        self.gradient = _inner(box, sigma - self.moments)

    def hessian(self) -> np.ndarray:
        return _hessian(self.phi, self.box, self.psi.d)


def _hessian(phi: np.ndarray, box: LagBox, d: int) -> np.ndarray:
    """Real Hessian ``mean_l tr(Phi B_i Phi B_j)`` over the coordinate directions."""
    m = phi.shape[-1]
    shape = GridShape(phi.shape[:d])
    # prod[..., a, b, c, e] = Phi_ea * Phi_bc
    prod = np.einsum("...ea,...bc->...abce", phi, phi)
    spectrum = np.fft.ifftn(prod, axes=tuple(range(d)))
    lags = box.lags
    sums = -(lags[:, None, :] + lags[None, :, :])  # mean zeta^{-(k+l)} -> inverse DFT at -(k+l)
    idx = tuple(np.moveaxis(sums % np.asarray(shape.dims), -1, 0))
    cross = spectrum[idx]  # (K, K, a, b, c, e)
    size = box.size
    gmat = cross.transpose(0, 2, 3, 1, 4, 5).reshape(size * m * m, size * m * m)
    basis = _basis(box.radii, m).reshape(n_params(box, m), -1)
    hess = (basis @ gmat @ basis.T).real
    return 0.5 * (hess + hess.T)


def _as_sigma(sigma: CovarianceSet | np.ndarray) -> np.ndarray:
    return sigma.matrices if isinstance(sigma, CovarianceSet) else np.asarray(sigma, dtype=complex)


# --------------------------------------------------------------------------
# public operations


def is_distance(phi: np.ndarray, psi: np.ndarray, d: int | None = None) -> float:
    """Discrete IS pseudo-distance ``mean_l [log det(Phi^-1 Psi) + tr(Psi^-1 (Phi - Psi))]``."""
    phi = np.asarray(phi)
    psi = np.asarray(psi)
    if phi.shape != psi.shape:
        raise ValueError(f"shape mismatch: {phi.shape} vs {psi.shape}")
    m = phi.shape[-1]
    try:
        logdet_phi = logdet_pd(phi)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"Phi is not positive definite at grid point {exc.index}", exc.index) from None
    try:
        logdet_psi = logdet_pd(psi)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"Psi is not positive definite at grid point {exc.index}", exc.index) from None
    psi_inv = inverse_pd(psi)
    trace = np.einsum("...ab,...ba->...", psi_inv, phi).real
    return float(np.mean(logdet_psi - logdet_phi + trace - m))


def feasible(q: DualCertificate, psi: Prior) -> bool:
    _check_compat(q.box, psi, q.m)
    return is_pd(psi.inverse + q.evaluate(psi.shape))


def dual_value(q: DualCertificate, psi: Prior, sigma: CovarianceSet | np.ndarray) -> float:
    _check_compat(q.box, psi, q.m)
    return _Point(q.pack(), q.box, psi, _as_sigma(sigma)).value


def dual_gradient(q: DualCertificate, psi: Prior, sigma: CovarianceSet | np.ndarray) -> np.ndarray:
    _check_compat(q.box, psi, q.m)
    return _Point(q.pack(), q.box, psi, _as_sigma(sigma)).gradient


def dual_hessian(q: DualCertificate, psi: Prior) -> np.ndarray:
    _check_compat(q.box, psi, q.m)
    phi = primal_recover(q, psi)
    return _hessian(phi, q.box, psi.d)


def primal_recover(q: DualCertificate, psi: Prior) -> np.ndarray:
    _check_compat(q.box, psi, q.m)
    a = psi.inverse + q.evaluate(psi.shape)
    try:
        return inverse_pd(a)
    except NotPositiveDefinite as exc:
        raise Infeasible(f"Psi^-1 + Q is not positive definite at grid point {exc.index}") from None


def moment_residual(phi: np.ndarray, sigma: CovarianceSet) -> float:
    return float(np.linalg.norm(moment_map(phi, sigma.box) - sigma.matrices) / sigma.norm())


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    try:
        return -scipy.linalg.cho_solve(scipy.linalg.cho_factor(hess), grad)
    except np.linalg.LinAlgError:
        pass
    ridge = 1e-12 * max(np.trace(hess) / len(grad), 1.0)
    try:
        return -scipy.linalg.cho_solve(scipy.linalg.cho_factor(hess + ridge * np.eye(len(grad))), grad)
    except np.linalg.LinAlgError:
        log.warning("Newton system numerically singular; taking a gradient step")
        return -grad


def _is_recession(direction: np.ndarray, box: LagBox, psi: Prior, linear: np.ndarray) -> bool:
    """True when ``Q(direction)`` is PSD on the grid yet pairs negatively with Sigma.

    Such a direction certifies that the dual decreases without bound, which
    happens exactly when Sigma is not the moment sequence of any PD spectrum.
    """
    pairing = float(direction @ linear)
    if pairing >= -1e-12 * np.linalg.norm(direction) * np.linalg.norm(linear):
        return False
    values = DualCertificate.unpack(box, psi.m, direction).evaluate(psi.shape)
    return bool(np.min(np.linalg.eigvalsh(values)) >= 0.0)


def solve_dual(
    psi: Prior,
    sigma: CovarianceSet,
    opts: SolveOptions | None = None,
    start: DualCertificate | None = None,
) -> tuple[DualCertificate, SolveReport]:
    """Minimize the dual function by damped Newton (or BFGS) from ``start`` (default Q=0)."""
    opts = opts or SolveOptions()
    if opts.method not in ("newton", "bfgs"):
        raise ValueError(f"unknown method {opts.method!r}")
    box = sigma.box
    m = sigma.m
    _check_compat(box, psi, m)
    sig = sigma.matrices
    sig_norm = sigma.norm()
    x = np.zeros(n_params(box, m)) if start is None else start.pack()

    linear = _inner(box, sig)
    report = SolveReport()
    try:
        point = _Point(x, box, psi, sig)
    except Infeasible:
        raise Infeasible("starting point is not feasible") from None
    report.dual_values.append(point.value)
    inv_hess = None

    def finish(pt: _Point) -> DualCertificate:
        report.final_gradient_norm = float(np.linalg.norm(pt.gradient))
        report.final_dual_value = pt.value
        report.moment_residual = float(np.linalg.norm(pt.moments - sig) / sig_norm)
        return DualCertificate.unpack(box, m, pt.x)

    while True:
        gnorm = np.linalg.norm(point.gradient)
        residual = np.linalg.norm(point.moments - sig) / sig_norm
        if gnorm / (1.0 + sig_norm) <= opts.tol and residual <= opts.moment_tol:
            report.converged = True
            return finish(point), report
        if report.iterations >= opts.max_iter:
            finish(point)
            raise MaxIterationsExceeded(
                f"no convergence after {opts.max_iter} iterations (gradient norm {gnorm:.3e})", report
            )

        if opts.method == "newton":
            direction = _newton_direction(point.hessian(), point.gradient)
        else:
            if inv_hess is None:
                inv_hess = np.linalg.inv(point.hessian())
            direction = -inv_hess @ point.gradient
        slope = float(point.gradient @ direction)
        if slope >= 0:
            direction, slope = -point.gradient, -float(gnorm**2)
        if _is_recession(direction, box, psi, linear):
            finish(point)
            raise InfeasibleMoments(
                "the dual is unbounded below: no positive definite spectrum matches the covariances",
                report,
            )

        step = 1.0
        # Newton decrements below rounding level cannot show an Armijo decrease.
        negligible = -slope < 1e-13 * max(1.0, abs(point.value))
        while True:
            trial = point.x + step * direction
            candidate = None
            if is_pd(_dual_matrix(trial, box, psi)):
                candidate = _Point(trial, box, psi, sig)
                if candidate.value <= point.value + opts.armijo * step * slope or negligible:
                    break
            step *= opts.backtrack
            report.backtracking_steps += 1
            if step < opts.min_step:
                finish(point)
                raise InfeasibleMoments(
                    "line search stalled; the covariance data may not admit a positive definite spectrum",
                    report,
                )

        if opts.method == "bfgs":
            s = candidate.x - point.x
            yv = candidate.gradient - point.gradient
            sy = float(s @ yv)
            if sy > 1e-300:
                rho = 1.0 / sy
                eye = np.eye(len(s))
                inv_hess = (eye - rho * np.outer(s, yv)) @ inv_hess @ (eye - rho * np.outer(yv, s)) + rho * np.outer(s, s)
        point = candidate
        report.iterations += 1
        report.dual_values.append(point.value)
        log.debug("iter %d value %.12g step %.3g", report.iterations, point.value, step)
