"""l1-penalized least squares by cyclic coordinate descent.

Solves ``min (1/2n)||Y - X b||^2 + lam * sum_j w_j |b_j|`` and certifies
each solution with its KKT residual.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .core import DomainError, ThlassoError, as_matrix, as_vector

log = logging.getLogger(__name__)


class ConvergenceError(ThlassoError):
    """Raised when a solver stops before meeting its tolerance.

    ``best`` holds the last iterate as a :class:`FitResult`.
    """

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class LassoOptions:
    max_iters: int = 100_000
    tol: float = 1e-8
    weights: np.ndarray | None = None
    debug: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if np.any(w < 0) or np.any(np.isnan(w)):
                raise DomainError("weights must be non-negative")
            object.__setattr__(self, "weights", w)


@dataclass
class FitResult:
    beta: np.ndarray
    lambda_n: float
    kkt_residual: float
    iters: int
    objective: float
    method: str = "cd"
    gap: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.beta))

    def csv_row(self) -> list:
        return [repr(float(self.lambda_n)), self.nnz, repr(float(self.objective)),
                repr(float(self.kkt_residual))]


FIT_CSV_HEADER = ["lambda", "nnz", "objective", "kkt_residual"]


def soft_threshold(z, t):
    """``sign(z) * max(|z| - t, 0)``; works elementwise on arrays."""
    if np.any(np.asarray(t) < 0):
        raise DomainError("threshold must be non-negative")
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def _penalty(thresh, beta):
    nz = beta != 0
    return float(np.sum(thresh[nz] * np.abs(beta[nz])))


def lasso_objective(X, Y, beta, lambda_n, weights=None) -> float:
    X = as_matrix(X)
    Y = as_vector(Y)
    beta = as_vector(beta)
    w = np.ones(beta.size) if weights is None else np.asarray(weights, dtype=float)
    r = Y - X @ beta
    return float(r @ r) / (2 * X.shape[0]) + _penalty(lambda_n * w, beta)


def kkt_residual(X, Y, beta, lambda_n, weights=None) -> float:
    """Largest violation of the Lasso stationarity conditions.

    For ``b_j != 0`` the gradient ``X_j^T r / n`` must equal
    ``lam w_j sign(b_j)``; for ``b_j == 0`` it must lie in
    ``[-lam w_j, lam w_j]``.
    """
    X = as_matrix(X)
    beta = as_vector(beta)
    n = X.shape[0]
    w = np.ones(beta.size) if weights is None else np.asarray(weights, dtype=float)
    thresh = lambda_n * w
    grad = X.T @ (as_vector(Y) - X @ beta) / n
    return _kkt(grad, beta, thresh)


def _kkt(grad, beta, thresh) -> float:
    nz = beta != 0
    viol = np.zeros(beta.size)
    viol[nz] = np.abs(grad[nz] - thresh[nz] * np.sign(beta[nz]))
    z = ~nz
    with np.errstate(invalid="ignore"):
        viol[z] = np.maximum(np.abs(grad[z]) - thresh[z], 0.0)
    viol[np.isnan(viol)] = 0.0
    return float(viol.max()) if viol.size else 0.0


def lambda_max(X, Y, weights=None) -> float:
    """Smallest penalty for which the zero vector is optimal."""
    X = as_matrix(X)
    c = np.abs(X.T @ as_vector(Y)) / X.shape[0]
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(w > 0, c / w, np.where(c > 0, np.inf, 0.0))
    return float(c.max()) if c.size else 0.0


def fit_lasso(X, Y, lambda_n: float, opts: LassoOptions | None = None, beta0=None) -> FitResult:
    """Minimize the Lasso objective at a single penalty.

    Parameters
    ----------
    X : (n, p) array or DesignMatrix
    Y : (n,) array or Signal
    lambda_n : float
        Penalty level, ``>= 0``.
    opts : LassoOptions, optional
    beta0 : array, optional
        Warm start.

    Raises
    ------
    ConvergenceError
        If the KKT residual is still above ``opts.tol`` after
        ``opts.max_iters`` sweeps.
    """
    opts = opts or LassoOptions()
    if lambda_n < 0:
        raise DomainError("lambda_n must be non-negative")
    Xf = np.asfortranarray(as_matrix(X), dtype=float)
    Y = np.ascontiguousarray(as_vector(Y), dtype=float)
    n, p = Xf.shape
    if Y.size != n:
        raise DomainError("Y length does not match X")
    w = np.ones(p) if opts.weights is None else opts.weights
    if w.size != p:
        raise DomainError("weights length must equal p")
    thresh = np.ascontiguousarray(lambda_n * w)
    thresh[np.isnan(thresh)] = 0.0
    colsq = np.ascontiguousarray(np.einsum("ij,ij->j", Xf, Xf) / n)
    c0 = np.abs(Xf.T @ Y) / n
    if np.all(c0 <= thresh * (1 + 1e-12)):
        # zero is optimal up to rounding; skip the sweeps so they cannot leave dust
        kkt0 = float(np.max(np.maximum(c0 - thresh, 0.0))) if p else 0.0
        return FitResult(np.zeros(p), float(lambda_n), kkt0, 0, float(Y @ Y) / (2 * n),
                         info={"backend": _kernels.BACKEND})
    beta = np.zeros(p) if beta0 is None else np.array(as_vector(beta0), dtype=float)
    r = Y - Xf @ beta
    all_idx = np.arange(p, dtype=np.int64)
    sweeps_fn = _kernels.cd_sweeps
    inner_tol = opts.tol * 0.1
    total = 0
    kkt = np.inf
    prev_obj = np.inf

    def step(idx, max_sweeps, tol):
        nonlocal prev_obj
        if not opts.debug:
            return sweeps_fn(Xf, r, beta, colsq, thresh, idx, max_sweeps, tol)
        done = 0
        chg = 0.0
        while done < max_sweeps:
            _, chg = sweeps_fn(Xf, r, beta, colsq, thresh, idx, 1, tol)
            done += 1
            obj = float(r @ r) / (2 * n) + _penalty(thresh, beta)
            if obj > prev_obj + 1e-12 * max(1.0, abs(prev_obj)):
                raise AssertionError(f"objective increased: {prev_obj!r} -> {obj!r}")
            prev_obj = obj
            if chg <= tol:
                break
        return done, chg

    while total < opts.max_iters:
        k, _ = step(all_idx, 1, inner_tol)
        total += k
        active = np.flatnonzero(beta).astype(np.int64)
        if active.size and total < opts.max_iters:
            k, _ = step(active, opts.max_iters - total, inner_tol)
            total += k
        r[:] = Y - Xf @ beta
        grad = Xf.T @ r / n
        kkt = _kkt(grad, beta, thresh)
        if kkt <= opts.tol:
            break
        inner_tol = max(inner_tol * 0.1, 1e-18)
    result = FitResult(
        beta=beta,
        lambda_n=float(lambda_n),
        kkt_residual=kkt,
        iters=total,
        objective=float(r @ r) / (2 * n) + _penalty(thresh, beta),
        info={"backend": _kernels.BACKEND},
    )
    if kkt > opts.tol:
        raise ConvergenceError(
            f"coordinate descent stopped after {total} sweeps with KKT residual {kkt:.3g}",
            best=result,
        )
    return result


def default_grid(lam_max: float, n_points: int = 100, ratio: float = 0.01) -> np.ndarray:
    """Geometric grid from ``lam_max`` down to ``ratio * lam_max``."""
    if lam_max <= 0:
        return np.array([0.0])
    return np.geomspace(lam_max, ratio * lam_max, n_points)


def lasso_path(X, Y, grid=None, opts: LassoOptions | None = None,
               n_points: int = 100, ratio: float = 0.01) -> list[FitResult]:
    """Warm-started fits over a strictly decreasing penalty grid.

    Without ``grid`` a geometric grid from ``lambda_max`` is used.
    """
    opts = opts or LassoOptions()
    if grid is None:
        grid = default_grid(lambda_max(X, Y, opts.weights), n_points, ratio)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty penalty grid")
    if np.any(grid < 0) or np.any(np.diff(grid) >= 0):
        raise DomainError("grid must be positive and strictly decreasing")
    fits = []
    beta = None
    for i, lam in enumerate(grid):
        try:
            fit = fit_lasso(X, Y, lam, opts, beta0=beta)
        except ConvergenceError as exc:
            raise ConvergenceError(f"grid index {i} (lambda={lam:.6g}): {exc}", exc.best) from exc
        fit.info["grid_index"] = i
        fits.append(fit)
        beta = fit.beta
    return fits


def fit_adaptive_lasso(X, Y, beta_init, lambda_grid=None, opts: LassoOptions | None = None,
                       n_points: int = 100, ratio: float = 0.01) -> list[FitResult]:
    """Second-stage weighted Lasso on ``supp(beta_init)``.

    Weights are ``1 / |beta_init_j|``; coordinates where ``beta_init``
    is zero are dropped.  Fits are re-embedded into length ``p``.
    """
    opts = opts or LassoOptions()
    Xa = as_matrix(X)
    Y = as_vector(Y)
    b0 = as_vector(beta_init)
    p = Xa.shape[1]
    supp = np.flatnonzero(b0)
    if supp.size == 0:
        zero = np.zeros(p)
        return [FitResult(zero, 0.0, 0.0, 0, float(Y @ Y) / (2 * Xa.shape[0]), info={"support": supp})]
    w = 1.0 / np.abs(b0[supp])
    sub = replace(opts, weights=w)
    Xs = Xa[:, supp]
    fits = lasso_path(Xs, Y, lambda_grid, sub, n_points=n_points, ratio=ratio)
    out = []
    for f in fits:
        full = np.zeros(p)
        full[supp] = f.beta
        out.append(FitResult(full, f.lambda_n, f.kkt_residual, f.iters, f.objective,
                             method="adaptive_cd", info={**f.info, "support": supp}))
    return out
