"""Minimum-norm and ridge regression over complex-exponential model classes,
with singular-value diagnostics and seeded double descent experiments."""

__version__ = "0.1.0"

from .estimators import (
    MIN_NORM,
    Estimator,
    FittedModel,
    bias_report,
    decompose_error,
    fit_min_norm,
    fit_ridge,
    predict,
    prediction_variance,
    row_space_bias_indicator,
    variance_optimality_gap,
)
from .harness import CaseResult, ExperimentConfig, double_descent_profile, nmse, run_case, test_grid
from .linalg import SvdConvergenceError, SvdFactorization, pseudo_inverse_apply, svd
from .spectrum import check_sigma_min_monotonicity, sweep_spectrum, theta_star_norm_trend, verify_interlacing
from .structures import (
    DataGenerator,
    Dataset,
    ModelStructure,
    build_linear,
    build_optimal,
    evaluate_f0,
    generate_dataset,
    regression_matrix,
)
