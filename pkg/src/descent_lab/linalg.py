"""Dense complex matrix helpers, one-sided Jacobi SVD and pseudo-inverse.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Factorizations
returned by :func:`svd` are read-only so they can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS = np.finfo(np.float64).eps
MAX_SWEEPS = 60


class DimensionError(ValueError):
    """Raised when operand shapes do not agree."""


class SvdConvergenceError(RuntimeError):
    """Raised when the Jacobi sweeps do not converge within the cap."""

    def __init__(self, shape, residual, sweeps):
        self.shape = shape
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(
            f"SVD of {shape[0]}x{shape[1]} matrix did not converge after "
            f"{sweeps} sweeps (relative off-diagonal residual {residual:.3e})"
        )


def as_complex_matrix(m) -> np.ndarray:
    """Validate ``m`` and return it as a 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"matrix must be at least 1x1, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def as_complex_vector(v, length=None) -> np.ndarray:
    a = np.asarray(v, dtype=np.complex128)
    if a.ndim != 1:
        raise DimensionError(f"expected a vector, got ndim={a.ndim}")
    if length is not None and a.shape[0] != length:
        raise DimensionError(f"expected vector of length {length}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector entries must be finite")
    return a


def frobenius_norm(m) -> float:
    a = as_complex_matrix(m)
    return float(np.sqrt(np.sum(a.real**2 + a.imag**2)))


def matmul(a, b) -> np.ndarray:
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def hermitian_transpose(m) -> np.ndarray:
    return as_complex_matrix(m).conj().T.copy()


def append_column(m, col) -> np.ndarray:
    a = as_complex_matrix(m)
    c = as_complex_vector(col, a.shape[0])
    return np.column_stack([a, c])


@dataclass(frozen=True, eq=False)
class SvdFactorization:
    """Thin SVD ``m = sum_k s_k u_k v_k^H`` with ``r = min(rows, cols)`` terms.

    ``left_vectors`` is rows x r and ``right_vectors`` is cols x r. Singular
    values at or below ``rank_tolerance`` count as numerically zero.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    rank: int
    rank_tolerance: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left_vectors.shape[0], self.right_vectors.shape[0])

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0])

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1])

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.conj().T

    def with_tolerance(self, rank_tolerance: float) -> "SvdFactorization":
        if rank_tolerance < 0:
            raise ValueError("rank_tolerance must be nonnegative")
        rank = int(np.count_nonzero(self.singular_values > rank_tolerance))
        return SvdFactorization(
            self.singular_values, self.left_vectors, self.right_vectors, rank, float(rank_tolerance)
        )


def default_rank_tolerance(shape, sigma_max: float) -> float:
    return max(shape) * EPS * sigma_max


def _round_robin(cols: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: ``cols - 1`` rounds (``cols`` even) of disjoint pairs covering every pair once."""
    m = cols + (cols % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < cols and b < cols]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(a: np.ndarray, max_sweeps: int):
    """Orthogonalize the columns of ``a`` by complex Givens rotations.

    A sweep visits every column pair once in a fixed round-robin order; the
    pairs within a round are disjoint and rotated together. Returns
    ``(w, vt)``: the rows of ``w`` are the mutually orthogonal columns of
    ``a @ V`` and the rows of ``vt`` are the columns of ``V``.
    """
    rows, cols = a.shape
    w = a.T.copy()
    vt = np.eye(cols, dtype=np.complex128)
    fro2 = float(np.sum(np.abs(a) ** 2))
    rel_tol = max(rows, 1) * EPS
    # pairs whose columns are both below eps*||a||_F are numerically zero
    abs_floor = (EPS * EPS) * fro2
    schedule = _round_robin(cols)

    residual = 0.0
    for _ in range(max_sweeps):
        rotated = False
        residual = 0.0
        for p, q in schedule:
            wp = w[p]
            wq = w[q]
            alpha = np.sum(wp.real**2 + wp.imag**2, axis=1)
            beta = np.sum(wq.real**2 + wq.imag**2, axis=1)
            gamma = np.sum(wp.conj() * wq, axis=1)
            g = np.abs(gamma)
            scale = np.sqrt(alpha * beta)
            act = (g > abs_floor) & (g > rel_tol * scale)
            if not act.any():
                continue
            rotated = True
            p, q = p[act], q[act]
            wp, wq = wp[act], wq[act]
            g, gamma = g[act], gamma[act]
            residual = max(residual, float(np.max(g / scale[act])))
            phase = (gamma / g).conj()[:, None]
            zeta = (beta[act] - alpha[act]) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = c * t[:, None]
            wq = wq * phase
            w[p] = c * wp - s * wq
            w[q] = s * wp + c * wq
            vp = vt[p]
            vq = vt[q] * phase
            vt[p] = c * vp - s * vq
            vt[q] = s * vp + c * vq
        if not rotated:
            return w, vt
    raise SvdConvergenceError(a.shape, residual, max_sweeps)


def _complete_orthonormal(basis: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace columns of ``basis`` not flagged in ``keep`` by an orthonormal completion."""
    dim = basis.shape[0]
    out = basis.copy()
    accepted = [out[:, k] for k in range(out.shape[1]) if keep[k]]
    candidates = iter(np.eye(dim, dtype=np.complex128).T)
    for k in range(out.shape[1]):
        if keep[k]:
            continue
        for e in candidates:
            v = e.copy()
            for _ in range(2):
                for b in accepted:
                    v -= np.vdot(b, v) * b
            nv = np.linalg.norm(v)
            if nv > 0.5:
                v /= nv
                out[:, k] = v
                accepted.append(v)
                break
    return out


def _tall_svd(a: np.ndarray, max_sweeps: int):
    rows, cols = a.shape
    w, vt = _jacobi_columns(a, max_sweeps)
    sigma = np.sqrt(np.sum(w.real**2 + w.imag**2, axis=1))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    w = w[order]
    v = vt[order].T
    cutoff = default_rank_tolerance(a.shape, sigma[0]) if sigma[0] > 0 else 0.0
    keep = sigma > cutoff
    u = np.zeros((rows, cols), dtype=np.complex128)
    u[:, keep] = (w[keep] / sigma[keep, None]).T
    if not np.all(keep):
        u = _complete_orthonormal(u, keep)
    return sigma, u, v


def _fix_phase(u: np.ndarray, v: np.ndarray):
    # first entry of each right vector that is not rounding noise becomes real >= 0
    for k in range(v.shape[1]):
        col = v[:, k]
        mags = np.abs(col)
        idx = int(np.argmax(mags > 1e-12 * mags.max()))
        z = col[idx]
        if z != 0:
            ph = np.conj(z) / abs(z)
            v[:, k] *= ph
            u[:, k] *= ph
            v[idx, k] = abs(z)
    return u, v


def svd(m, rank_tolerance: float | None = None, max_sweeps: int = MAX_SWEEPS) -> SvdFactorization:
    """One-sided Jacobi SVD of a dense complex matrix.

    Wide matrices are factored through their Hermitian transpose so the
    rotations always act on at most ``min(rows, cols)`` columns.
    """
    a = as_complex_matrix(m)
    rows, cols = a.shape
    if rows >= cols:
        sigma, u, v = _tall_svd(a, max_sweeps)
    else:
        sigma, v, u = _tall_svd(a.conj().T, max_sweeps)
    u, v = _fix_phase(u, v)
    if rank_tolerance is None:
        rank_tolerance = default_rank_tolerance(a.shape, float(sigma[0]))
    elif rank_tolerance < 0:
        raise ValueError("rank_tolerance must be nonnegative")
    rank = int(np.count_nonzero(sigma > rank_tolerance))
    for arr in (sigma, u, v):
        arr.setflags(write=False)
    return SvdFactorization(sigma, u, v, rank, float(rank_tolerance))


def pseudo_inverse_apply(f: SvdFactorization, rhs, weights: np.ndarray | None = None) -> np.ndarray:
    """Apply the Moore-Penrose pseudo-inverse held in ``f`` to ``rhs``.

    ``rhs`` may be a vector of length ``rows`` or a ``rows x k`` block of
    right-hand sides. ``weights`` overrides the per-mode gains ``1/sigma_k``
    (used by the ridge estimator); modes beyond ``f.rank`` are always dropped.
    """
    b = np.asarray(rhs, dtype=np.complex128)
    rows = f.left_vectors.shape[0]
    if b.ndim not in (1, 2) or b.shape[0] != rows:
        raise DimensionError(f"right-hand side has shape {b.shape}, expected leading dimension {rows}")
    r = f.rank
    if weights is None:
        gains = 1.0 / f.singular_values[:r]
    else:
        gains = np.asarray(weights, dtype=np.float64)[:r]
    coeff = f.left_vectors[:, :r].conj().T @ b
    if b.ndim == 1:
        coeff = coeff * gains
    else:
        coeff = coeff * gains[:, None]
    return f.right_vectors[:, :r] @ coeff
