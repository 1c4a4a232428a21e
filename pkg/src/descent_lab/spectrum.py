"""Smallest-singular-value sweeps over model order and interlacing checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .estimators import MIN_NORM, solve
from .linalg import DimensionError, SvdConvergenceError, append_column, as_complex_matrix, as_complex_vector, svd
from .structures import DataGenerator, ModelStructure, evaluate_f0, regression_matrix

INTERLACING_SLACK = 1e-9
MONOTONICITY_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class SpectrumSweep:
    orders: np.ndarray
    sigma_min: np.ndarray
    inv_sigma_min: np.ndarray
    rank: np.ndarray
    theta_star_norm: np.ndarray | None = None
    family: str = "custom"
    failures: dict = field(default_factory=dict)

    def peak_order(self) -> int:
        return int(self.orders[int(np.nanargmax(self.inv_sigma_min))])


def sweep_spectrum(
    family: Callable[[int], ModelStructure],
    inputs,
    n_max: int,
    f0: DataGenerator | None = None,
) -> SpectrumSweep:
    """sigma_min of the regression matrix for every order ``1..n_max``.

    Each order gets its own full SVD. A non-converging order is recorded in
    ``failures`` with NaN entries instead of aborting the sweep.
    """
    x = np.asarray(inputs, dtype=np.float64)
    orders = np.arange(1, n_max + 1)
    sig = np.full(n_max, np.nan)
    rank = np.zeros(n_max, dtype=int)
    norms = np.full(n_max, np.nan) if f0 is not None else None
    f0_train = evaluate_f0(f0, x) if f0 is not None else None
    failures = {}
    for i, n in enumerate(orders):
        phi = regression_matrix(family(int(n)), x)
        try:
            f = svd(phi)
        except SvdConvergenceError as exc:
            failures[int(n)] = str(exc)
            continue
        sig[i] = f.sigma_min
        rank[i] = f.rank
        if norms is not None:
            norms[i] = np.linalg.norm(solve(f, f0_train, MIN_NORM))
    with np.errstate(divide="ignore"):
        inv = 1.0 / sig
    name = getattr(family, "family", "custom")
    return SpectrumSweep(orders, sig, inv, rank, norms, name, failures)


@dataclass(frozen=True)
class InequalityCheck:
    left: str
    right: str
    margin: float
    ok: bool


@dataclass(frozen=True, eq=False)
class InterlacingVerdict:
    sigma: np.ndarray
    sigma_bar: np.ndarray
    regime: str
    checks: tuple[InequalityCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def violations(self) -> list[InequalityCheck]:
        return [c for c in self.checks if not c.ok]


def verify_interlacing(phi, new_column, slack: float = INTERLACING_SLACK) -> InterlacingVerdict:
    """Check the singular-value interlacing chain for ``[phi, new_column]``.

    With ``n < N`` columns the chain is ``sb1 >= s1 >= sb2 >= ... >= s_n >= sb_{n+1}``;
    with ``n >= N`` it is ``sb1 >= s1 >= ... >= sb_N >= s_N``. Each link may
    fail by at most ``slack * s1``.
    """
    a = as_complex_matrix(phi)
    rows, n = a.shape
    try:
        col = as_complex_vector(new_column, rows)
    except DimensionError as exc:
        raise DimensionError(f"new column must have {rows} entries") from exc
    s = svd(a).singular_values
    sb = svd(append_column(a, col)).singular_values
    chain = []
    if n < rows:
        regime = "underparametrized"
        for k in range(n):
            chain.append((f"sigma_bar[{k + 1}]", sb[k]))
            chain.append((f"sigma[{k + 1}]", s[k]))
        chain.append((f"sigma_bar[{n + 1}]", sb[n]))
    else:
        regime = "overparametrized"
        for k in range(rows):
            chain.append((f"sigma_bar[{k + 1}]", sb[k]))
            chain.append((f"sigma[{k + 1}]", s[k]))
    tol = slack * max(float(s[0]), 0.0)
    checks = []
    for (ln, lv), (rn, rv) in zip(chain, chain[1:]):
        margin = float(lv - rv)
        checks.append(InequalityCheck(ln, rn, margin, margin >= -tol))
    return InterlacingVerdict(np.array(s), np.array(sb), regime, tuple(checks))


@dataclass(frozen=True)
class MonotonicityVerdict:
    passed: bool
    first_violation: int | None = None
    detail: str = ""


def check_sigma_min_monotonicity(sweep: SpectrumSweep, N: int, slack: float = MONOTONICITY_SLACK) -> MonotonicityVerdict:
    """sigma_min may not grow while ``n+1 <= N`` and may not shrink once ``n >= N``.

    ``first_violation`` is the order ``n`` whose step to ``n+1`` broke the rule.
    """
    s = sweep.sigma_min
    for i in range(len(s) - 1):
        n = int(sweep.orders[i])
        cur, nxt = s[i], s[i + 1]
        if n + 1 <= N and not nxt <= cur + slack:
            return MonotonicityVerdict(False, n, f"sigma_min grew from {cur!r} to {nxt!r} at n={n}->{n + 1} <= N")
        if n >= N and not nxt >= cur - slack:
            return MonotonicityVerdict(False, n, f"sigma_min shrank from {cur!r} to {nxt!r} at n={n}->{n + 1} > N")
    return MonotonicityVerdict(True)


@dataclass(frozen=True, eq=False)
class NormTrend:
    orders: np.ndarray
    norms: np.ndarray
    decreasing_ranges: tuple[tuple[int, int], ...]

    def norm_at(self, n: int) -> float:
        return float(self.norms[int(np.searchsorted(self.orders, n))])


def theta_star_norm_trend(sweep: SpectrumSweep) -> NormTrend:
    """Noise-free solution norm per order and the order ranges over which it falls.

    Purely descriptive; a rising stretch is not treated as an error.
    """
    if sweep.theta_star_norm is None:
        raise ValueError("sweep was computed without a data generator")
    norms = sweep.theta_star_norm
    ranges = []
    start = None
    for i in range(len(norms) - 1):
        if norms[i + 1] < norms[i]:
            if start is None:
                start = i
        elif start is not None:
            ranges.append((int(sweep.orders[start]), int(sweep.orders[i])))
            start = None
    if start is not None:
        ranges.append((int(sweep.orders[start]), int(sweep.orders[-1])))
    return NormTrend(sweep.orders, norms, tuple(ranges))
