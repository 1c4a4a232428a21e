"""Exit criteria for the package; each test carries its criterion number.

Run ``pytest tests/test_acceptance.py`` to get the pass/fail summary block.
"""

import time

import numpy as np
import pytest

from descent_lab.cli import main
from descent_lab.estimators import fit_min_norm, fit_ridge, decompose_error, predict, prediction_variance
from descent_lab.harness import ExperimentConfig, double_descent_profile, make_replicates, run_case
from descent_lab.linalg import svd
from descent_lab.spectrum import check_sigma_min_monotonicity, sweep_spectrum, verify_interlacing
from descent_lab.structures import (
    DataGenerator,
    build_linear,
    linear_family,
    optimal_family,
    regression_matrix,
    sample_noise,
    substream,
)

from conftest import random_complex

N, N_MAX = 10, 30
X = np.arange(N, dtype=float)
CASE_SEEDS = range(10)


def criterion(number, text):
    return pytest.mark.criterion(number, text)


@pytest.fixture(scope="module")
def cases():
    return {c: run_case(ExperimentConfig.for_case(c, base_seed=0)) for c in "ABCD"}


def first_order_below(curve, tol):
    hits = np.flatnonzero(curve <= tol)
    return int(hits[0]) + 1 if hits.size else None


@criterion(1, "optimal ordering: all singular values sqrt(10), flat 1/sigma_min for n <= 10")
def test_spectrum_exactness():
    start = time.perf_counter()
    family = optimal_family(N, N_MAX)
    for n in range(1, N + 1):
        sigma = svd(regression_matrix(family(n), X)).singular_values
        assert np.all(np.abs(sigma - np.sqrt(10)) <= 1e-10)
    sweep = sweep_spectrum(family, X, N)
    assert np.all(np.abs(sweep.inv_sigma_min - 1 / np.sqrt(10)) <= 1e-10)
    assert time.perf_counter() - start < 1.0


@criterion(2, "linear ordering: 1/sigma_min peaks at n=10, sigma_min monotone on both sides")
def test_peak_location():
    start = time.perf_counter()
    sweep = sweep_spectrum(linear_family(N_MAX), X, N_MAX)
    assert sweep.peak_order() == 10
    s = sweep.sigma_min
    assert np.all(np.diff(s[:10]) <= 1e-9)
    assert np.all(np.diff(s[9:]) >= -1e-9)
    assert check_sigma_min_monotonicity(sweep, N).passed
    assert time.perf_counter() - start < 5.0


@criterion(3, "interlacing holds on 500 random matrices and every column append of both families")
def test_interlacing_suite():
    rng = np.random.default_rng(2024)
    violations = []
    regimes = {"underparametrized": 0, "overparametrized": 0}
    for i in range(500):
        rows = int(rng.integers(1, 21))
        cols = int(rng.integers(1, 31))
        v = verify_interlacing(random_complex(rng, rows, cols), random_complex(rng, rows, 1)[:, 0])
        regimes[v.regime] += 1
        violations += [(i, c) for c in v.violations]
    for family in (linear_family(N_MAX), optimal_family(N, N_MAX)):
        for n in range(1, N_MAX):
            v = verify_interlacing(regression_matrix(family(n), X), regression_matrix(family(n + 1), X)[:, -1])
            violations += [(family.family, n, c) for c in v.violations]
    assert min(regimes.values()) > 0
    assert violations == []


@criterion(4, "case A, linear, noise-free: NMSE <= 1e-10 at n=10")
def test_recovery_case_a_linear(cases):
    assert cases["A"]["linear"].nmse_noisefree_mean[9] <= 1e-10


@criterion(4, "case C, optimal, noise-free: NMSE <= 1e-10 at n=10")
def test_recovery_case_c_optimal(cases):
    assert cases["C"]["optimal"].nmse_noisefree_mean[9] <= 1e-10


@criterion(4, "case A, optimal, noise-free: NMSE first <= 1e-10 at n=16")
def test_recovery_case_a_optimal(cases):
    assert first_order_below(cases["A"]["optimal"].nmse_noisefree_mean, 1e-10) == 16


@criterion(4, "case C, linear, noise-free: NMSE first <= 1e-10 at n=28")
def test_recovery_case_c_linear(cases):
    assert first_order_below(cases["C"]["linear"].nmse_noisefree_mean, 1e-10) == 28


@criterion(4, "case D, linear, noise-free: NMSE first <= 1e-10 at n=28")
def test_recovery_case_d_linear(cases):
    assert first_order_below(cases["D"]["linear"].nmse_noisefree_mean, 1e-10) == 28


@criterion(5, "cases B and D, n >= 10: training-point NMSE equals noise energy ratio")
def test_interpolation(cases):
    for case in "BD":
        result = cases[case]
        data = make_replicates(result.config)
        ratio = np.sum(np.abs(data.noise) ** 2, axis=0) / np.sum(np.abs(data.f0_train) ** 2, axis=0)
        for family in ("linear", "optimal"):
            curves = result[family]
            for j in range(N - 1, N_MAX):
                assert np.all(np.abs(curves.nmse_noisy[:, j] - ratio) <= 1e-8 * ratio)
                assert np.all(curves.nmse_noisefree[:, j] <= 1e-12)


def _descent_over_seeds(case):
    peaks, at_max, at_n = [], [], []
    for seed in CASE_SEEDS:
        result = run_case(ExperimentConfig.for_case(case, base_seed=seed))
        peaks.append(double_descent_profile(result, "linear").peak_order)
        curve = result["linear"].nmse_noisy_mean
        at_max.append(curve[N_MAX - 1])
        at_n.append(curve[N - 1])
    return peaks, np.mean(at_max), np.mean(at_n)


@criterion(6, "case A, linear: noisy NMSE peaks at n=10 in >= 9 of 10 seeds and NMSE(30) < NMSE(10)")
def test_double_descent_case_a():
    peaks, m30, m10 = _descent_over_seeds("A")
    assert sum(p == 10 for p in peaks) >= 9, peaks
    assert m30 < m10


@criterion(6, "case C, linear: noisy NMSE peaks at n=10 in >= 9 of 10 seeds and NMSE(30) < NMSE(10)")
def test_double_descent_case_c():
    peaks, m30, m10 = _descent_over_seeds("C")
    assert sum(p == 10 for p in peaks) >= 9, peaks
    assert m30 < m10


@criterion(7, "closed-form prediction variance and mean of theta agree with 2000 Monte-Carlo runs")
def test_closed_form_vs_monte_carlo():
    s = build_linear(8, N_MAX)
    phi = regression_matrix(s, X)
    f = svd(phi)
    cfg = ExperimentConfig.for_case("A", base_seed=0)
    g = DataGenerator(make_replicates(cfg.replace(replicates=1)).alphas[0], "lin", N_MAX, N, cfg.r_z)
    f0 = regression_matrix(build_linear(10, N_MAX), X) @ g.alpha
    decomp = decompose_error(f, f0, r_z=cfg.r_z)
    rng = substream(7, "criterion-7", 0)
    thetas, preds = [], []
    for _ in range(2000):
        model = fit_min_norm(f, f0 + sample_noise(rng, N, cfg.r_z), structure=s)
        thetas.append(model.theta)
        preds.append(predict(model, 0.5))
    thetas, preds = np.array(thetas), np.array(preds)
    empirical = np.mean(np.abs(preds - preds.mean()) ** 2)
    closed = prediction_variance(decomp, s, 0.5)
    assert abs(empirical - closed) <= 0.10 * closed
    for part in (np.real, np.imag):
        se = part(thetas).std(axis=0, ddof=1) / np.sqrt(len(thetas))
        assert np.all(np.abs(part(thetas).mean(axis=0) - part(decomp.theta_star)) <= 3 * se)


LAMBDAS = (1e-3, 1e-2, 1e-1, 1.0)


def _case_a_fits():
    y = make_replicates(ExperimentConfig.for_case("A", base_seed=0, replicates=1)).y[:, 0]
    for family in (linear_family(N_MAX), optimal_family(N, N_MAX)):
        for n in range(1, N_MAX + 1):
            phi = regression_matrix(family(n), X)
            yield family.family, n, phi, svd(phi), y


@criterion(8, "ridge: lambda=1e-12 fit matches min-norm within 1e-6 relative on case A data")
def test_ridge_small_lambda_limit():
    bad = []
    for family, n, _, f, y in _case_a_fits():
        mn = fit_min_norm(f, y).theta
        rel = np.linalg.norm(fit_ridge(f, y, 1e-12).theta - mn) / np.linalg.norm(mn)
        if rel > 1e-6:
            bad.append((family, n, rel))
    assert bad == []


@criterion(8, "ridge: parameter norm strictly decreasing over lambda in {1e-3,1e-2,1e-1,1} on case A data")
def test_ridge_shrinkage():
    for family, n, _, f, y in _case_a_fits():
        norms = [np.linalg.norm(fit_ridge(f, y, lam).theta) for lam in LAMBDAS]
        assert all(b < a for a, b in zip(norms, norms[1:])), (family, n, norms)


@criterion(8, "ridge: training residual > 0 for lambda > 0 and n >= N")
def test_ridge_no_interpolation():
    for family, n, phi, f, y in _case_a_fits():
        if n >= N:
            for lam in LAMBDAS:
                assert np.linalg.norm(phi @ fit_ridge(f, y, lam).theta - y) > 0, (family, n, lam)


@criterion(9, "min-norm matches normal equations and SVD matches eigen-oracle on 100 instances")
def test_oracle_equivalence():
    rng = np.random.default_rng(909)
    for _ in range(100):
        rows = int(rng.integers(2, 21))
        cols = int(rng.integers(1, rows + 1))
        a = random_complex(rng, rows, cols)
        y = random_complex(rng, rows, 1)[:, 0]
        gram = a.conj().T @ a
        expected = np.linalg.solve(gram, a.conj().T @ y)
        theta = fit_min_norm(a, y).theta
        assert np.linalg.norm(theta - expected) <= 1e-9 * np.linalg.norm(expected)
        oracle = np.sqrt(np.linalg.eigvalsh(gram)[::-1])
        sigma = svd(a).singular_values
        assert np.all(np.abs(sigma - oracle) <= 1e-8 * oracle)


@criterion(10, "identical configs give byte-identical CSV output")
def test_determinism(tmp_path):
    for d in ("first", "second"):
        assert main(["run", "--case", "A", "--seed", "42", "--no-plots", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "first" / "caseA.csv").read_bytes() == (tmp_path / "second" / "caseA.csv").read_bytes()
