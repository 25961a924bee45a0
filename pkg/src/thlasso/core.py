"""Basic data types, column normalization and penalty scales."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ThlassoError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ThlassoError, ValueError):
    """An argument lies outside the domain of the operation."""


class LogBase(str, Enum):
    NATURAL = "natural"
    TWO = "two"


def _log(x: float, base: LogBase | str) -> float:
    base = LogBase(base)
    return math.log(x) if base is LogBase.NATURAL else math.log2(x)


@dataclass(frozen=True)
class DesignMatrix:
    """Dense ``n x p`` design.

    ``scales`` holds the per-column factors applied by
    :func:`normalize_columns` (all ones for a raw matrix).
    """

    data: np.ndarray
    normalized: bool = False
    scales: np.ndarray | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise DomainError("design matrix must be two-dimensional")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DomainError("design matrix needs n >= 1 and p >= 1")
        if not np.all(np.isfinite(data)):
            raise DomainError("design matrix has non-finite entries")
        object.__setattr__(self, "data", data)
        if self.scales is None:
            object.__setattr__(self, "scales", np.ones(data.shape[1]))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Signal:
    """A coefficient vector with a few support helpers."""

    coef: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=float).ravel()
        if not np.all(np.isfinite(coef)):
            raise DomainError("signal has non-finite entries")
        object.__setattr__(self, "coef", coef)

    def __len__(self):
        return self.coef.size

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coef)

    def top(self, k: int) -> np.ndarray:
        """Indices of the ``k`` largest magnitudes, ties broken by index."""
        return top_indices(self.coef, k)


def top_indices(v, k: int) -> np.ndarray:
    """Positions of the ``k`` largest ``|v|``; equal magnitudes go to the lower index."""
    v = np.abs(np.asarray(v, dtype=float))
    k = max(0, min(int(k), v.size))
    order = np.lexsort((np.arange(v.size), -v))
    return np.sort(order[:k])


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")


@dataclass(frozen=True)
class PenaltyScale:
    """Penalty bookkeeping: ``lambda`` is sqrt(2 log p / n)."""

    p: int
    n: int
    sigma: float = 1.0
    a: float = 0.0
    d0: float = 2.0
    log_base: LogBase = LogBase.NATURAL
    lam: float = field(init=False)

    def __post_init__(self):
        if self.a < 0:
            raise DomainError("a must be non-negative")
        object.__setattr__(self, "log_base", LogBase(self.log_base))
        object.__setattr__(self, "lam", lambda_base(self.p, self.n, self.log_base))

    @property
    def lambda_sigma(self) -> float:
        return self.lam * self.sigma

    @property
    def lambda_n(self) -> float:
        """The Lasso penalty ``d0 * lambda * sigma``."""
        return self.d0 * self.lambda_sigma

    def d0_admissible(self) -> bool:
        return self.d0 >= 2.0 * math.sqrt(1.0 + self.a)


def as_matrix(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.data
    return np.asarray(X, dtype=float)


def as_vector(v) -> np.ndarray:
    if isinstance(v, Signal):
        return v.coef
    return np.asarray(v, dtype=float).ravel()


def normalize_columns(X) -> DesignMatrix:
    """Rescale every column to have Euclidean norm ``sqrt(n)``.

    Raises
    ------
    DomainError
        If a column is identically zero (the message names the
        1-based column index).
    """
    dm = X if isinstance(X, DesignMatrix) else DesignMatrix(X)
    data = dm.data
    norms = np.linalg.norm(data, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise DomainError(f"zero column {zero[0] + 1}")
    factors = math.sqrt(dm.n) / norms
    out = data * factors
    # one rescaling pass leaves ~1 ulp; a second pins norms for idempotence
    norms2 = np.linalg.norm(out, axis=0)
    fix = math.sqrt(dm.n) / norms2
    out = out * fix
    return DesignMatrix(out, normalized=True, scales=dm.scales * factors * fix)


def lambda_base(p: int, n: int, log_base: LogBase | str = LogBase.NATURAL) -> float:
    """Return sqrt(2 log(p) / n)."""
    if p < 2 or n < 1:
        raise DomainError(f"lambda_base needs p >= 2 and n >= 1 (got p={p}, n={n})")
    return math.sqrt(2.0 * _log(p, log_base) / n)


@dataclass(frozen=True)
class NoiseBound:
    bound: float
    probability_floor: float


def noise_bound(p: int, n: int, sigma: float, a: float = 0.0) -> NoiseBound:
    """Bound on ``||X^T eps / n||_inf`` and the probability floor of that event.

    Natural logarithms throughout.
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if a < 0:
        raise DomainError("a must be non-negative")
    lam = lambda_base(p, n, LogBase.NATURAL)
    floor = 1.0 - 1.0 / (math.sqrt(math.pi * math.log(p)) * p**a)
    return NoiseBound(sigma * math.sqrt(1.0 + a) * lam, floor)
