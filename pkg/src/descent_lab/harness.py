"""Seeded Monte-Carlo reproduction of the four experiment cases A-D.

Every random draw comes from :func:`descent_lab.structures.substream`:
stream 0 of a case holds the fixed coefficient vector, stream ``i + 1``
holds replicate ``i``. A case is therefore a pure function of its config.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from .estimators import Estimator, solve
from .linalg import SvdConvergenceError, svd
from .structures import (
    DataGenerator,
    evaluate_f0,
    family_builder,
    regression_matrix,
    sample_alpha,
    sample_noise,
    substream,
)

log = logging.getLogger(__name__)

FAMILIES = ("linear", "optimal")
ALPHA_MODES = ("fixed_per_case", "resample_per_replicate")

# epsilon and generator per case; every case uses N=10, n_max=30
CASES = {
    "A": (0.5, "lin"),
    "B": (0.0, "lin"),
    "C": (0.5, "opt"),
    "D": (0.0, "opt"),
}


class EmptySignalError(ValueError):
    """NMSE is undefined when the true signal is identically zero."""


@dataclass(frozen=True)
class ExperimentConfig:
    case_id: str
    epsilon: float
    generator_kind: str
    N: int = 10
    n_max: int = 30
    r_z: float = 0.1
    replicates: int = 500
    base_seed: int = 0
    lam: float | None = None
    alpha_mode: str = "fixed_per_case"

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.generator_kind not in ("lin", "opt"):
            raise ValueError(f"generator_kind must be 'lin' or 'opt', got {self.generator_kind!r}")
        if self.alpha_mode not in ALPHA_MODES:
            raise ValueError(f"alpha_mode must be one of {ALPHA_MODES}, got {self.alpha_mode!r}")
        if not 1 <= self.N <= self.n_max:
            raise ValueError("need 1 <= N <= n_max")
        if self.r_z < 0:
            raise ValueError("r_z must be nonnegative")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must be an unsigned 64-bit integer")
        Estimator(self.lam)

    @classmethod
    def for_case(cls, case_id: str, **overrides) -> "ExperimentConfig":
        key = str(case_id).upper()
        if key not in CASES:
            raise ValueError(f"unknown case {case_id!r}; expected one of {', '.join(CASES)}")
        epsilon, kind = CASES[key]
        values = {"epsilon": epsilon, "generator_kind": kind, **overrides}
        return cls(case_id=key, **values)

    @property
    def estimator(self) -> Estimator:
        return Estimator(self.lam)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


def test_grid(N: int, epsilon: float) -> np.ndarray:
    """Test inputs ``t + epsilon`` for ``t = 0..N-1``."""
    return np.arange(N, dtype=np.float64) + float(epsilon)


test_grid.__test__ = False  # not a pytest test despite the name


def nmse(true_values, predicted) -> float:
    t = np.asarray(true_values, dtype=np.complex128)
    p = np.asarray(predicted, dtype=np.complex128)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    denom = float(np.sum(np.abs(t) ** 2))
    if denom == 0:
        raise EmptySignalError("true values are all zero")
    return float(np.sum(np.abs(t - p) ** 2)) / denom


def _nmse_columns(true_values: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    denom = np.sum(np.abs(true_values) ** 2, axis=0)
    if np.any(denom == 0):
        raise EmptySignalError("true values are all zero for some replicate")
    return np.sum(np.abs(true_values - predicted) ** 2, axis=0) / denom


@dataclass(frozen=True, eq=False)
class FamilyCurves:
    """Per-order results for one model family; arrays are indexed by ``order - 1``.

    ``nmse_noisy`` holds per-replicate values (replicates x orders);
    ``nmse_noisefree`` has one row under a fixed coefficient vector.
    Medians are robustness diagnostics only; the reported curve is the mean.
    """

    family: str
    nmse_noisy: np.ndarray
    nmse_noisefree: np.ndarray
    inv_sigma_min: np.ndarray
    theta_star_norm: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def nmse_noisy_mean(self) -> np.ndarray:
        return self.nmse_noisy.mean(axis=0)

    @property
    def nmse_noisefree_mean(self) -> np.ndarray:
        return self.nmse_noisefree.mean(axis=0)

    @property
    def nmse_noisy_median(self) -> np.ndarray:
        return np.median(self.nmse_noisy, axis=0)

    @property
    def nmse_noisefree_median(self) -> np.ndarray:
        return np.median(self.nmse_noisefree, axis=0)


@dataclass(frozen=True, eq=False)
class CaseResult:
    config: ExperimentConfig
    orders: np.ndarray
    families: dict
    alphas: np.ndarray

    def __getitem__(self, family: str) -> FamilyCurves:
        return self.families[family]


@dataclass(frozen=True, eq=False)
class ReplicateData:
    """Training and test signals for all replicates, stacked as columns."""

    train_inputs: np.ndarray
    test_inputs: np.ndarray
    alphas: np.ndarray
    y: np.ndarray
    noise: np.ndarray
    f0_train: np.ndarray
    f0_test: np.ndarray


def case_alpha(cfg: ExperimentConfig) -> np.ndarray:
    return sample_alpha(substream(cfg.base_seed, cfg.case_id, 0))


def make_replicates(cfg: ExperimentConfig) -> ReplicateData:
    x = np.arange(cfg.N, dtype=np.float64)
    xt = test_grid(cfg.N, cfg.epsilon)
    fixed = case_alpha(cfg) if cfg.alpha_mode == "fixed_per_case" else None
    alphas, ys, zs, f_tr, f_te = [], [], [], [], []
    for i in range(cfg.replicates):
        rng = substream(cfg.base_seed, cfg.case_id, i + 1)
        alpha = fixed if fixed is not None else sample_alpha(rng)
        g = DataGenerator(alpha, cfg.generator_kind, cfg.n_max, cfg.N, cfg.r_z)
        f0x = evaluate_f0(g, x)
        z = sample_noise(rng, cfg.N, cfg.r_z)
        alphas.append(alpha)
        zs.append(z)
        ys.append(f0x + z)
        f_tr.append(f0x)
        f_te.append(evaluate_f0(g, xt))
    return ReplicateData(
        x, xt, np.array(alphas), np.array(ys).T, np.array(zs).T, np.array(f_tr).T, np.array(f_te).T
    )


@functools.lru_cache(maxsize=512)
def _factorization(family: str, n: int, N: int, n_max: int):
    s = family_builder(family, N, n_max)(n)
    x = np.arange(N, dtype=np.float64)
    return s, svd(regression_matrix(s, x))


def run_case(cfg: ExperimentConfig) -> CaseResult:
    """Fit every replicate at every order for both families and score on the test grid."""
    data = make_replicates(cfg)
    fixed = cfg.alpha_mode == "fixed_per_case"
    # under a fixed alpha every noise-free replicate is the same dataset
    clean_train = data.f0_train[:, :1] if fixed else data.f0_train
    clean_test = data.f0_test[:, :1] if fixed else data.f0_test
    est = cfg.estimator
    orders = np.arange(1, cfg.n_max + 1)
    families = {}
    for family in FAMILIES:
        noisy = np.full((cfg.replicates, cfg.n_max), np.nan)
        clean = np.full((clean_train.shape[1], cfg.n_max), np.nan)
        inv_smin = np.full(cfg.n_max, np.nan)
        tnorm = np.full(cfg.n_max, np.nan)
        failures = {}
        for j, n in enumerate(orders):
            try:
                s, f = _factorization(family, int(n), cfg.N, cfg.n_max)
            except SvdConvergenceError as exc:
                log.warning("case %s %s order %d: %s", cfg.case_id, family, n, exc)
                failures[int(n)] = str(exc)
                continue
            phi_test = regression_matrix(s, data.test_inputs)
            theta = solve(f, data.y, est)
            noisy[:, j] = _nmse_columns(data.f0_test, phi_test @ theta)
            theta_star = solve(f, clean_train, est)
            clean[:, j] = _nmse_columns(clean_test, phi_test @ theta_star)
            tnorm[j] = float(np.mean(np.linalg.norm(theta_star, axis=0)))
            with np.errstate(divide="ignore"):
                inv_smin[j] = 1.0 / f.sigma_min
        families[family] = FamilyCurves(family, noisy, clean, inv_smin, tnorm, failures)
    return CaseResult(cfg, orders, families, data.alphas)


@dataclass(frozen=True)
class DescentProfile:
    peak_order: int | None
    descends: bool
    flat: bool


def double_descent_profile(result: CaseResult, family: str, rel_flat: float = 1e-12) -> DescentProfile:
    """Peak of the mean noisy NMSE over orders ``2..n_max-1`` and whether order ``n_max`` beats it."""
    curve = result[family].nmse_noisy_mean
    orders = result.orders
    inner = curve[1:-1]
    if inner.size == 0 or not np.any(np.isfinite(inner)):
        return DescentProfile(None, False, True)
    lo, hi = np.nanmin(inner), np.nanmax(inner)
    if hi - lo <= rel_flat * max(abs(hi), 1e-300):
        return DescentProfile(None, False, True)
    k = int(np.nanargmax(inner)) + 1
    return DescentProfile(int(orders[k]), bool(curve[-1] < curve[k]), False)
