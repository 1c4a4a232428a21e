"""Complex-exponential model structures, regression matrices and data generators."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

ORDERINGS = ("linear", "optimal", "custom")
GENERATOR_KINDS = ("lin", "opt")
N_COEFFICIENTS = 10


@dataclass(frozen=True)
class ModelStructure:
    """Ordered basis frequencies (cycles per sample) of ``f(x) = sum theta_i exp(j 2 pi f_i x)``.

    Frequencies are exact rationals so set arithmetic between orderings is exact;
    they are converted to floats only when a matrix is built.
    """

    frequencies: tuple[Fraction, ...]
    ordering_kind: str
    n_max: int

    def __post_init__(self):
        if self.ordering_kind not in ORDERINGS:
            raise ValueError(f"unknown ordering kind {self.ordering_kind!r}")
        n = len(self.frequencies)
        if not 1 <= n <= self.n_max:
            raise ValueError(f"model order {n} outside 1..{self.n_max}")
        if len(set(self.frequencies)) != n:
            raise ValueError("basis frequencies must be distinct")
        if any(f < 0 or f >= 1 for f in self.frequencies):
            raise ValueError("basis frequencies must lie in [0, 1)")

    @property
    def order(self) -> int:
        return len(self.frequencies)

    def frequency_values(self) -> np.ndarray:
        return np.array([float(f) for f in self.frequencies])

    def basis_row(self, x: float) -> np.ndarray:
        """phi(x) as a length-n row."""
        return np.exp(2j * np.pi * self.frequency_values() * float(x))


def _check_order(n: int, n_max: int):
    if not 1 <= n <= n_max:
        raise ValueError(f"model order n={n} must satisfy 1 <= n <= n_max={n_max}")


def build_linear(n: int, n_max: int) -> ModelStructure:
    _check_order(n, n_max)
    return ModelStructure(tuple(Fraction(k, n_max) for k in range(n)), "linear", n_max)


def build_optimal(n: int, N: int, n_max: int) -> ModelStructure:
    """Grid ``k/N`` first, then the remaining ``k/n_max`` frequencies in ascending order."""
    _check_order(n, n_max)
    if not 1 <= N <= n_max:
        raise ValueError(f"N={N} must satisfy 1 <= N <= n_max={n_max}")
    coarse = [Fraction(k, N) for k in range(N)]
    if n <= N:
        return ModelStructure(tuple(coarse[:n]), "optimal", n_max)
    taken = set(coarse)
    rest = [f for f in (Fraction(k, n_max) for k in range(n_max)) if f not in taken]
    if n - N > len(rest):
        raise ValueError(
            f"only {N + len(rest)} distinct frequencies available for N={N}, n_max={n_max}; "
            f"cannot build order {n}"
        )
    return ModelStructure(tuple(coarse + rest[: n - N]), "optimal", n_max)


def custom_structure(frequencies: Sequence, n_max: int | None = None) -> ModelStructure:
    freqs = tuple(Fraction(f) for f in frequencies)
    return ModelStructure(freqs, "custom", n_max if n_max is not None else len(freqs))


def linear_family(n_max: int) -> Callable[[int], ModelStructure]:
    def build(n: int) -> ModelStructure:
        return build_linear(n, n_max)

    build.family = "linear"
    return build


def optimal_family(N: int, n_max: int) -> Callable[[int], ModelStructure]:
    def build(n: int) -> ModelStructure:
        return build_optimal(n, N, n_max)

    build.family = "optimal"
    return build


def family_builder(name: str, N: int, n_max: int) -> Callable[[int], ModelStructure]:
    if name == "linear":
        return linear_family(n_max)
    if name == "optimal":
        return optimal_family(N, n_max)
    raise ValueError(f"unknown model family {name!r}; expected 'linear' or 'optimal'")


def regression_matrix(s: ModelStructure, inputs) -> np.ndarray:
    """M x n matrix with entry ``(t, i) = exp(j 2 pi f_i x(t))``."""
    x = np.asarray(inputs, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("inputs must be nonempty")
    return np.exp(2j * np.pi * np.outer(x, s.frequency_values()))


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs) or len(self.inputs) < 1:
            raise ValueError("dataset inputs and outputs must be nonempty and of equal length")

    def __len__(self):
        return len(self.inputs)


@dataclass(frozen=True, eq=False)
class DataGenerator:
    """True function ``f0(x) = sum_k alpha_k exp(j 2 pi f_k x)`` plus circular Gaussian noise.

    ``kind='lin'`` uses frequencies ``(k-1)/n_max``; ``kind='opt'`` uses ``(k-1)/N``.
    """

    alpha: np.ndarray
    kind: str
    n_max: int
    N: int
    r_z: float = 0.0
    _freqs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.complex128).reshape(-1)
        if alpha.shape[0] != N_COEFFICIENTS:
            raise ValueError(f"data generator needs exactly {N_COEFFICIENTS} coefficients")
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.r_z < 0:
            raise ValueError("noise variance must be nonnegative")
        denom = self.n_max if self.kind == "lin" else self.N
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "_freqs", np.arange(N_COEFFICIENTS) / denom)

    @property
    def frequencies(self) -> np.ndarray:
        return self._freqs.copy()


def evaluate_f0(g: DataGenerator, x):
    """f0 at a scalar or an array of inputs."""
    xa = np.asarray(x, dtype=np.float64)
    vals = np.exp(2j * np.pi * np.multiply.outer(xa, g._freqs)) @ g.alpha
    return complex(vals) if xa.ndim == 0 else vals


def sample_noise(rng: np.random.Generator, size: int, r_z: float) -> np.ndarray:
    """Circular complex Gaussian with ``E|z|^2 = r_z``."""
    if r_z == 0:
        return np.zeros(size, dtype=np.complex128)
    scale = np.sqrt(r_z / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return scale * (re + 1j * im)


def sample_alpha(rng: np.random.Generator) -> np.ndarray:
    return sample_noise(rng, N_COEFFICIENTS, 1.0)


def generate_dataset(g: DataGenerator, inputs, rng: np.random.Generator) -> Dataset:
    x = np.asarray(inputs, dtype=np.float64).reshape(-1)
    y = evaluate_f0(g, x) + sample_noise(rng, x.size, g.r_z)
    return Dataset(x, y)


def substream(base_seed: int, case_id: str, index: int) -> np.random.Generator:
    """Independent PCG64 stream keyed by ``(base_seed, case_id, index)``."""
    if base_seed < 0 or base_seed >= 2**64:
        raise ValueError("base_seed must be an unsigned 64-bit integer")
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    key = zlib.crc32(str(case_id).encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([base_seed, key, index])))
