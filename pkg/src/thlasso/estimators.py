"""Multi-step estimators: threshold an initial fit, then refit by least squares."""
from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .core import DomainError, LogBase, ThlassoError, as_matrix, as_vector, lambda_base
from .dantzig import DantzigOptions, fit_dantzig
from .lasso import FitResult, LassoOptions, fit_lasso


class SingularDesignError(ThlassoError):
    def __init__(self, msg, condition=np.inf):
        super().__init__(msg)
        self.condition = condition


class Source(str, Enum):
    LASSO = "lasso"
    DANTZIG = "dantzig"
    EXTERNAL = "external"


@dataclass(frozen=True)
class SelectionSet:
    """Sorted 0-based indices selected by thresholding."""

    indices: np.ndarray
    threshold_used: float
    source: Source = Source.EXTERNAL
    p: int | None = None

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or (self.p is not None and idx[-1] >= self.p)):
            raise DomainError("selection index out of range")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "source", Source(self.source))

    def __len__(self):
        return self.indices.size

    def __eq__(self, other):
        return (isinstance(other, SelectionSet) and np.array_equal(self.indices, other.indices)
                and self.threshold_used == other.threshold_used and self.source == other.source)

    def __hash__(self):
        return hash((self.indices.tobytes(), self.threshold_used, self.source))


@dataclass
class EstimatorResult:
    beta_init: np.ndarray
    selection: SelectionSet
    beta_hat: np.ndarray
    lambda_n: float
    t0: float
    init_fit: FitResult | None = None
    condition: float = 1.0
    timing: dict = field(default_factory=dict, compare=False)

    def __eq__(self, other):
        return (isinstance(other, EstimatorResult)
                and np.array_equal(self.beta_init, other.beta_init)
                and self.selection == other.selection
                and np.array_equal(self.beta_hat, other.beta_hat)
                and self.lambda_n == other.lambda_n and self.t0 == other.t0)

    def to_json(self) -> str:
        return json.dumps({
            "lambda_n": self.lambda_n,
            "t0": self.t0,
            "source": self.selection.source.value,
            "selection": self.selection.indices.tolist(),
            "model_size": len(self.selection),
            "norms": {
                "beta_init_l1": float(np.abs(self.beta_init).sum()),
                "beta_init_l2": float(np.linalg.norm(self.beta_init)),
                "beta_hat_l1": float(np.abs(self.beta_hat).sum()),
                "beta_hat_l2": float(np.linalg.norm(self.beta_hat)),
            },
            "condition": self.condition,
            "timing": self.timing,
        }, indent=2)


def threshold_select(beta_init, t0: float, source=Source.EXTERNAL) -> SelectionSet:
    """Keep ``{j : |beta_init_j| >= t0}``; at ``t0 = 0`` only the support."""
    if t0 < 0:
        raise DomainError("t0 must be non-negative")
    b = as_vector(beta_init)
    keep = (np.abs(b) >= t0) & (b != 0)
    return SelectionSet(np.flatnonzero(keep), float(t0), source, p=b.size)


def ols_refit(X, Y, selection, cond_limit: float = 1e12) -> tuple[np.ndarray, float]:
    """Least squares on the selected columns, zero elsewhere.

    Uses a pivoted QR factorization of ``X_I``.  Returns the
    coefficient vector and the 2-norm condition number of ``X_I``.
    """
    Xa = as_matrix(X)
    Yv = as_vector(Y)
    n, p = Xa.shape
    idx = selection.indices if isinstance(selection, SelectionSet) else np.asarray(selection, dtype=int)
    beta = np.zeros(p)
    if idx.size == 0:
        return beta, 1.0
    if idx.size > n:
        raise SingularDesignError(f"|I| = {idx.size} exceeds n = {n}; refit refused")
    XI = Xa[:, idx]
    Q, R, perm = scipy.linalg.qr(XI, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    cond = np.inf if d.min() == 0 else float(np.linalg.cond(R))
    if not cond < cond_limit:
        raise SingularDesignError(f"X_I is numerically rank deficient (condition {cond:.3g})", cond)
    coef = scipy.linalg.solve_triangular(R, Q.T @ Yv)
    sol = np.empty_like(coef)
    sol[perm] = coef
    beta[idx] = sol
    return beta, cond


def check_counting_bound(beta_init, selection: SelectionSet) -> None:
    """``|I| <= ||beta_init||_1 / t0`` for ``t0 > 0``; raises AssertionError otherwise."""
    t0 = selection.threshold_used
    if t0 > 0:
        l1 = float(np.abs(as_vector(beta_init)).sum())
        if len(selection) > l1 / t0 * (1 + 1e-12):
            raise AssertionError(f"|I| = {len(selection)} exceeds ||beta_init||_1/t0 = {l1 / t0}")


def _finish(X, Y, init: FitResult, t0, source, times) -> EstimatorResult:
    t = time.perf_counter()
    sel = threshold_select(init.beta, t0, source)
    check_counting_bound(init.beta, sel)
    beta_hat, cond = ols_refit(X, Y, sel)
    times["refit"] = time.perf_counter() - t
    return EstimatorResult(init.beta, sel, beta_hat, init.lambda_n, float(t0), init, cond, times)


def thresholded_lasso(X, Y, lambda_n: float, t0: float, opts: LassoOptions | None = None,
                      init: FitResult | None = None) -> EstimatorResult:
    """Lasso, hard threshold at ``t0``, then OLS on the survivors.

    ``init`` may carry a precomputed Lasso fit at ``lambda_n``.
    """
    if t0 < 0 or lambda_n < 0:
        raise DomainError("lambda_n and t0 must be non-negative")
    times = {}
    t = time.perf_counter()
    if init is None:
        init = fit_lasso(X, Y, lambda_n, opts)
    times["init"] = time.perf_counter() - t
    return _finish(X, Y, init, t0, Source.LASSO, times)


def gauss_dantzig(X, Y, sigma: float, a: float = 0.0, tau: float = 1.0, C4_mult: float | None = None,
                  t0: float | None = None, C1: float | None = None, delta: float = 0.0,
                  theta: float = 0.0, opts: DantzigOptions | None = None,
                  log_base: LogBase | str = LogBase.NATURAL) -> EstimatorResult:
    """Dantzig selector, threshold, OLS refit.

    The penalty is ``(sqrt(1+a) + 1/tau) * sqrt(2 log p / n) * sigma``
    (written ``lam_pt * sigma`` below).  The admissible threshold range
    is ``(C1 * lam_pt * sigma, C4 * lam_pt * sigma]``; ``C1`` defaults to
    the closed form at the plug-in ``(delta, theta)``.  Without an
    explicit ``t0`` the upper end of the range is used, or the lower
    end ``C1 * lam_pt * sigma`` when no ``C4_mult`` is given.
    """
    from .diagnostics import ds_c_values

    if a < 0 or tau <= 0:
        raise DomainError("need a >= 0 and tau > 0")
    Xa = as_matrix(X)
    n, p = Xa.shape
    lam_pt = (math.sqrt(1 + a) + 1 / tau) * lambda_base(p, n, log_base)
    lambda_n = lam_pt * sigma
    if C1 is None:
        C1 = ds_c_values(delta, theta)[2]
    lo = C1 * lam_pt * sigma
    hi = math.inf
    if C4_mult is not None:
        if C1 >= C4_mult:
            warnings.warn(f"threshold range is empty: C1 = {C1:.4g} >= C4 = {C4_mult:.4g}", RuntimeWarning,
                          stacklevel=2)
        hi = C4_mult * lam_pt * sigma
    if t0 is None:
        t0 = hi if C4_mult is not None else lo
    elif not lo < t0 <= hi:
        warnings.warn(f"t0 = {t0:.4g} outside ({lo:.4g}, {hi:.4g}]", RuntimeWarning, stacklevel=2)
    times = {}
    t = time.perf_counter()
    init = fit_dantzig(Xa, Y, lambda_n, opts)
    times["init"] = time.perf_counter() - t
    return _finish(Xa, Y, init, t0, Source.DANTZIG, times)


def lasso_best_l2(path, beta_true) -> FitResult:
    """Path element closest to ``beta_true`` in l2 (first one on ties)."""
    if not path:
        raise DomainError("empty path")
    b = as_vector(beta_true)
    losses = [float(np.linalg.norm(f.beta - b)) for f in path]
    return path[int(np.argmin(losses))]


def lasso_best_support(path, beta_true) -> FitResult:
    """Path element maximizing ``TP - FP`` against ``supp(beta_true)``.

    Ties go to the smaller support, then the earlier element.
    """
    if not path:
        raise DomainError("empty path")
    S = as_vector(beta_true) != 0
    best, key = None, None
    for f in path:
        sel = f.beta != 0
        tp = int(np.sum(sel & S))
        fp = int(np.sum(sel & ~S))
        k = (-(tp - fp), int(sel.sum()))
        if key is None or k < key:
            best, key = f, k
    return best
