"""Matrix-valued spectral estimation for multidimensional fields via Itakura-Saito covariance extension."""
from .covariance import (
    CovarianceSet,
    Periodogram,
    covariance_direct_oracle,
    covariance_from_periodogram,
    estimate_covariances,
    finite_fourier,
    periodogram,
)
from .estimator import (
    EstimatorSpec,
    MonteCarloSetup,
    TrialResult,
    WindowSpec,
    estimate_is,
    monte_carlo,
    peak_find,
    windowed_periodogram,
)
from .grid import GridShape, LagBox, dft_field, eval_trig_polynomial, lambda_box, moment_map, wrap_lag
from .isdual import (
    DualCertificate,
    Infeasible,
    InfeasibleMoments,
    MaxIterationsExceeded,
    Prior,
    SolveOptions,
    SolveReport,
    dual_gradient,
    dual_hessian,
    dual_value,
    feasible,
    is_distance,
    primal_recover,
    solve_dual,
)
from .models import ArConfig, GroundTruth, SinusoidConfig, simulate_ar, simulate_sinusoid, true_spectrum

__version__ = "0.1.0"
