"""Seeded generators for designs, coefficient vectors and observations.

Every generator draws from a :class:`numpy.random.Generator` built by
:class:`RandomSource`.  Normal variates come from numpy's PCG64 bit
generator through its ziggurat sampler; the identifier
:data:`RNG_ALGORITHM` is written into experiment metadata.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .core import (
    DesignMatrix,
    DomainError,
    NoiseSpec,
    Signal,
    ThlassoError,
    as_matrix,
    as_vector,
    normalize_columns,
)

RNG_ALGORITHM = "numpy.PCG64+SeedSequence/ziggurat-normal"


class RandomSource:
    """Derives independent, reproducible generators from one master seed.

    ``stream(a, b, ...)`` always returns a fresh generator seeded from
    ``(master_seed, a, b, ...)``, so the same key reproduces the same
    draws regardless of call order.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF

    def stream(self, *stream_id: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.master_seed, *[int(s) for s in stream_id]])
        return np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RandomSource({self.master_seed})"


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.stream(0)
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class EnsembleKind(str, Enum):
    IID_GAUSSIAN = "iid_gaussian"
    TOEPLITZ = "toeplitz"
    BERNOULLI_PM1 = "bernoulli_pm1"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    n: int
    p: int
    gamma: float | None = None
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if self.n < 1 or self.p < 1:
            raise DomainError("ensemble needs n >= 1 and p >= 1")
        if self.kind is EnsembleKind.TOEPLITZ:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise DomainError("toeplitz ensemble needs 0 < gamma < 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def toeplitz_covariance(p: int, gamma: float) -> np.ndarray:
    """``T[i, j] = gamma ** |i - j|``."""
    return scipy.linalg.toeplitz(gamma ** np.arange(p))


def gen_design(spec: EnsembleSpec, rng) -> DesignMatrix:
    g = _gen(rng)
    n, p = spec.n, spec.p
    if spec.kind is EnsembleKind.IID_GAUSSIAN:
        X = g.standard_normal((n, p))
    elif spec.kind is EnsembleKind.BERNOULLI_PM1:
        X = np.where(g.random((n, p)) < 0.5, -1.0, 1.0)
    else:
        T = toeplitz_covariance(p, spec.gamma)
        try:
            L = np.linalg.cholesky(T)
        except np.linalg.LinAlgError as exc:
            raise ThlassoError(f"Cholesky factorization of T({spec.gamma}) failed") from exc
        X = g.standard_normal((n, p)) @ L.T
    return normalize_columns(X) if spec.normalize else DesignMatrix(X)


class Layout(str, Enum):
    RANDOM = "random"
    LEADING = "leading"


@dataclass(frozen=True)
class TigerBetaSpec:
    """Four-block coefficient model: strong, moderate, weak and zero parts.

    Give either ``s`` or ``C_t``; the other is solved from
    ``(s - s0) * C_t**2 = (s0 - a0) * (1 - C_m**2)``.  When ``C_t`` is
    given the weak-block size is rounded to the nearest integer and
    ``C_t`` recomputed so that the identity holds exactly.
    """

    p: int
    a0: int
    s0: int
    lambda_sigma: float
    C_a: float
    C_m: float = 1.0
    s: int | None = None
    C_t: float | None = None
    layout: Layout = Layout.RANDOM

    def __post_init__(self):
        object.__setattr__(self, "layout", Layout(self.layout))
        if self.lambda_sigma <= 0:
            raise DomainError("lambda_sigma must be positive")
        if not self.C_a > 1:
            raise DomainError("C_a must exceed 1")
        if not 0 < self.C_m <= 1:
            raise DomainError("C_m must lie in (0, 1]")
        if not 0 <= self.a0 <= self.s0 <= self.p:
            raise DomainError("need 0 <= a0 <= s0 <= p")
        mass = (self.s0 - self.a0) * (1.0 - self.C_m**2)
        s, ct = self.s, self.C_t
        if s is None and ct is None:
            s, ct = self.s0, 0.0
        elif s is None:
            if ct < 0:
                raise DomainError("C_t must be non-negative")
            if ct == 0 or mass == 0:
                s, ct = self.s0, 0.0
            else:
                extra = int(round(mass / ct**2))
                s = self.s0 + extra
                ct = math.sqrt(mass / extra) if extra else 0.0
        elif ct is None:
            if s < self.s0:
                raise DomainError("need s >= s0")
            ct = math.sqrt(mass / (s - self.s0)) if s > self.s0 else 0.0
        else:
            if s > self.s0 and not math.isclose((s - self.s0) * ct**2, mass, rel_tol=1e-9):
                raise DomainError("(s - s0) * C_t^2 must equal (s0 - a0) * (1 - C_m^2)")
        if s > self.p:
            raise DomainError(f"s={s} exceeds p={self.p}")
        if s < self.s0:
            raise DomainError("need s >= s0")
        object.__setattr__(self, "s", int(s))
        object.__setattr__(self, "C_t", float(ct))

    @property
    def magnitudes(self) -> tuple[float, float, float]:
        ls = self.lambda_sigma
        return self.C_a * ls, self.C_m * ls, self.C_t * ls

    def c_t(self, lam_log: float) -> float:
        """``c_t = C_t * sqrt(2 log p)`` for the given ``log p``."""
        return self.C_t * math.sqrt(2.0 * lam_log)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["layout"] = self.layout.value
        return d


def gen_beta_tiger(spec: TigerBetaSpec, rng, return_blocks: bool = False):
    """Draw a tiger-model coefficient vector.

    Returns the :class:`Signal`, plus (if ``return_blocks``) a dict
    mapping ``"11"``, ``"12"``, ``"2"`` to the index arrays of each block.
    """
    g = _gen(rng)
    p, a0, s0, s = spec.p, spec.a0, spec.s0, spec.s
    if spec.layout is Layout.RANDOM:
        pos = g.permutation(p)
    else:
        pos = np.arange(p)
    blocks = {"11": np.sort(pos[:a0]), "12": np.sort(pos[a0:s0]), "2": np.sort(pos[s0:s])}
    signs = np.where(g.random(s) < 0.5, -1.0, 1.0)
    mags = np.concatenate([
        np.full(a0, spec.magnitudes[0]),
        np.full(s0 - a0, spec.magnitudes[1]),
        np.full(s - s0, spec.magnitudes[2]),
    ])
    beta = np.zeros(p)
    beta[pos[:s]] = signs * mags
    sig = Signal(beta)
    return (sig, blocks) if return_blocks else sig


def _random_support(g: np.random.Generator, p: int, s: int) -> np.ndarray:
    if not 0 <= s <= p:
        raise DomainError(f"need 0 <= s <= p (s={s}, p={p})")
    return np.sort(g.choice(p, size=s, replace=False)) if s else np.empty(0, dtype=int)


def gen_beta_spiked(p: int, s: int, rng) -> Signal:
    """Nonzeros ``mu * (1 + |g|)`` with random signs ``mu`` and standard normal ``g``."""
    g = _gen(rng)
    supp = _random_support(g, p, s)
    beta = np.zeros(p)
    mu = np.where(g.random(s) < 0.5, -1.0, 1.0)
    beta[supp] = mu * (1.0 + np.abs(g.standard_normal(s)))
    return Signal(beta)


def gen_beta_const(p: int, s: int, magnitude: float, rng) -> Signal:
    if magnitude <= 0:
        raise DomainError("magnitude must be positive")
    g = _gen(rng)
    supp = _random_support(g, p, s)
    beta = np.zeros(p)
    beta[supp] = np.where(g.random(s) < 0.5, -magnitude, magnitude)
    return Signal(beta)


def gen_observation(X, beta, noise, rng) -> Signal:
    """``Y = X beta + eps`` with ``eps ~ N(0, sigma^2 I)``.

    ``noise`` is a :class:`NoiseSpec` or a plain ``sigma >= 0``.
    """
    Xa = as_matrix(X)
    b = as_vector(beta)
    if Xa.shape[1] != b.size:
        raise DomainError(f"dimension mismatch: X has {Xa.shape[1]} columns, beta has {b.size}")
    sigma = noise.sigma if isinstance(noise, NoiseSpec) else float(noise)
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    mean = Xa @ b
    if sigma == 0:
        return Signal(mean)
    return Signal(mean + sigma * _gen(rng).standard_normal(Xa.shape[0]))
