"""Minimum-norm and ridge least squares with closed-form bias and variance.

Every estimator here is a spectral filter on the SVD of the regression
matrix: mode ``k`` gets gain ``1/s_k`` (minimum norm) or
``s_k/(s_k^2 + lam)`` (ridge). Modes at or below the factorization's rank
tolerance are dropped, never clamped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import SvdFactorization, as_complex_matrix, as_complex_vector, pseudo_inverse_apply, svd
from .structures import ModelStructure, regression_matrix


@dataclass(frozen=True)
class Estimator:
    """``lam=None`` is the minimum-norm solution, ``lam>0`` is ridge."""

    lam: float | None = None

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"ridge parameter must be positive, got {self.lam}")

    @property
    def kind(self) -> str:
        return "min_norm" if self.lam is None else "ridge"

    def gains(self, sigma: np.ndarray) -> np.ndarray:
        s = np.asarray(sigma, dtype=np.float64)
        if self.lam is None:
            with np.errstate(divide="ignore"):
                return 1.0 / s
        return s / (s * s + self.lam)

    def variance_weights(self, sigma: np.ndarray) -> np.ndarray:
        return self.gains(sigma) ** 2

    def __str__(self):
        return self.kind if self.lam is None else f"ridge({self.lam!r})"


MIN_NORM = Estimator()


def _factor(phi) -> SvdFactorization:
    return phi if isinstance(phi, SvdFactorization) else svd(phi)


@dataclass(frozen=True, eq=False)
class FittedModel:
    theta: np.ndarray
    estimator: Estimator = MIN_NORM
    structure: ModelStructure | None = None

    @property
    def estimator_kind(self) -> str:
        return self.estimator.kind

    @property
    def order(self) -> int:
        return self.theta.shape[0]


def solve(f: SvdFactorization, y, estimator: Estimator = MIN_NORM) -> np.ndarray:
    """Filtered pseudo-inverse solve; ``y`` may hold several right-hand sides as columns."""
    if estimator.lam is None:
        return pseudo_inverse_apply(f, y)
    return pseudo_inverse_apply(f, y, weights=estimator.gains(f.singular_values))


def _fit(phi, y, estimator, structure):
    f = _factor(phi)
    rows, cols = f.shape
    yv = as_complex_vector(y, rows)
    if structure is not None and structure.order != cols:
        raise ValueError(f"structure has order {structure.order} but matrix has {cols} columns")
    theta = solve(f, yv, estimator)
    theta.setflags(write=False)
    return FittedModel(theta, estimator, structure)


def fit_min_norm(phi, y, structure: ModelStructure | None = None) -> FittedModel:
    """Minimum-norm least-squares fit ``theta = pinv(phi) @ y``.

    ``phi`` may be a matrix or a precomputed :class:`SvdFactorization`.
    """
    return _fit(phi, y, MIN_NORM, structure)


def fit_ridge(phi, y, lam: float, structure: ModelStructure | None = None) -> FittedModel:
    if not lam > 0:
        raise ValueError("ridge requires lam > 0; use fit_min_norm for lam = 0")
    return _fit(phi, y, Estimator(lam), structure)


def predict(model: FittedModel, x):
    """Evaluate ``phi(x) @ theta`` at a scalar or an array of inputs."""
    if model.structure is None:
        raise ValueError("model has no structure attached; cannot evaluate basis functions")
    xa = np.asarray(x, dtype=np.float64)
    if xa.ndim == 0:
        return complex(model.structure.basis_row(float(xa)) @ model.theta)
    return regression_matrix(model.structure, xa) @ model.theta


@dataclass(frozen=True, eq=False)
class ErrorDecomposition:
    """``theta_hat = theta_star + theta_tilde`` with ``cov(theta_tilde) = r_z * covariance_factor``."""

    theta_star: np.ndarray
    covariance_factor: np.ndarray
    weights: np.ndarray
    r_z: float
    factorization: SvdFactorization
    estimator: Estimator


def decompose_error(phi, f0_values, estimator: Estimator = MIN_NORM, r_z: float = 1.0) -> ErrorDecomposition:
    if r_z < 0:
        raise ValueError("noise variance must be nonnegative")
    f = _factor(phi)
    f0 = as_complex_vector(f0_values, f.shape[0])
    theta_star = solve(f, f0, estimator)
    r = f.rank
    w = estimator.variance_weights(f.singular_values[:r])
    v = f.right_vectors[:, :r]
    cov = (v * w) @ v.conj().T
    cov = 0.5 * (cov + cov.conj().T)
    return ErrorDecomposition(theta_star, cov, w, float(r_z), f, estimator)


def prediction_variance(decomp: ErrorDecomposition, s: ModelStructure, x) -> float:
    """``R_e(x) = r_z * sum_k w_k |phi(x) v_k|^2``."""
    phi_x = s.basis_row(x)
    r = decomp.factorization.rank
    proj = phi_x @ decomp.factorization.right_vectors[:, :r]
    return float(decomp.r_z * np.sum(decomp.weights * np.abs(proj) ** 2))


@dataclass(frozen=True, eq=False)
class BiasReport:
    test_points: np.ndarray
    expected_error: np.ndarray
    projection_rank: int

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.expected_error)))


def bias_report(phi, s: ModelStructure, theta0_or_f0, test_points, inputs=None) -> BiasReport:
    """Expected prediction error of the noise-free minimum-norm fit.

    With a parameter vector ``theta0`` the model is taken as correctly specified
    and the bias is ``phi(x') (pinv(Phi) Phi - I) theta0``. With a callable
    ``f0`` (which needs the training ``inputs``) it is ``phi(x') pinv(Phi) f0(x) - f0(x')``.
    """
    f = _factor(phi)
    n = f.shape[1]
    if s.order != n:
        raise ValueError(f"structure has order {s.order} but matrix has {n} columns")
    xt = np.asarray(test_points, dtype=np.float64).reshape(-1)
    phi_t = regression_matrix(s, xt)
    if callable(theta0_or_f0):
        if inputs is None:
            raise ValueError("misspecified bias needs the training inputs")
        f0: Callable = theta0_or_f0
        f0_train = np.asarray([f0(x) for x in np.asarray(inputs, dtype=np.float64)], dtype=np.complex128)
        f0_test = np.asarray([f0(x) for x in xt], dtype=np.complex128)
        err = phi_t @ pseudo_inverse_apply(f, f0_train) - f0_test
    else:
        theta0 = as_complex_vector(theta0_or_f0, n)
        err = -(phi_t @ _null_component(f, theta0))
    return BiasReport(xt, err, n - f.rank)


def _null_component(f: SvdFactorization, theta0: np.ndarray) -> np.ndarray:
    # (I - pinv(Phi) Phi) theta0
    v = f.right_vectors[:, : f.rank]
    return theta0 - v @ (v.conj().T @ theta0)


def row_space_bias_indicator(phi, theta0) -> float:
    """``||(pinv(Phi) Phi - I) theta0||``; zero iff theta0 is in the row space."""
    f = _factor(phi)
    t0 = as_complex_vector(theta0, f.shape[1])
    return float(np.linalg.norm(_null_component(f, t0)))


def variance_optimality_gap(f: SvdFactorization) -> float:
    """``sum 1/s_k^2 - r^2 / sum s_k^2``, zero exactly when all singular values agree."""
    s = np.asarray(f.singular_values if isinstance(f, SvdFactorization) else f, dtype=np.float64)
    if np.any(s <= 0):
        raise ValueError("variance optimality gap undefined for a zero singular value")
    r = s.shape[0]
    gap = float(np.sum(1.0 / s**2) - r * r / np.sum(s**2))
    return max(gap, 0.0)


def null_space_basis(phi) -> np.ndarray:
    """Orthonormal basis (as columns) of the null space of ``phi``."""
    a = as_complex_matrix(phi)
    rows, cols = a.shape
    if rows < cols:
        # zero rows leave the null space unchanged and make V square
        a = np.vstack([a, np.zeros((cols - rows, cols), dtype=np.complex128)])
    f = svd(a)
    return np.array(f.right_vectors[:, f.rank :])
