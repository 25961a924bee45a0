"""The Dantzig selector as a linear program.

With ``beta = u - v`` and ``u, v >= 0`` the problem is::

    minimize    sum(u) + sum(v)
    subject to  G (u - v) <= c + lam
               -G (u - v) <= lam - c

where ``G = X^T X / n`` and ``c = X^T Y / n``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .core import DomainError, ThlassoError, as_matrix, as_vector
from .lasso import ConvergenceError, FitResult

log = logging.getLogger(__name__)


class InfeasibleError(ThlassoError):
    pass


@dataclass(frozen=True)
class DantzigOptions:
    feas_tol: float = 1e-8
    opt_tol: float = 1e-6
    method: str = "simplex"
    max_pivots: int = 200_000

    def __post_init__(self):
        if not (self.feas_tol > 0 and self.opt_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.method not in ("simplex", "highs"):
            raise DomainError(f"unknown method {self.method!r}")


def correlation_violation(X, Y, beta, lambda_n) -> float:
    """``max(||X^T (Y - X beta)/n||_inf - lambda_n, 0)``."""
    X = as_matrix(X)
    corr = X.T @ (as_vector(Y) - X @ as_vector(beta)) / X.shape[0]
    return max(float(np.max(np.abs(corr))) - lambda_n, 0.0) if corr.size else 0.0


def dantzig_feasible(X, Y, beta, lambda_n, tol: float = 0.0) -> tuple[bool, float]:
    """``(||X^T (Y - X beta)/n||_inf <= lambda_n + tol, that norm)``."""
    X = as_matrix(X)
    corr = X.T @ (as_vector(Y) - X @ as_vector(beta)) / X.shape[0]
    res = float(np.max(np.abs(corr))) if corr.size else 0.0
    return res <= lambda_n + tol, res


def _lp_data(X, Y, lambda_n):
    n = X.shape[0]
    G = X.T @ X / n
    c = X.T @ Y / n
    A = np.block([[G, -G], [-G, G]])
    b = np.concatenate([lambda_n + c, lambda_n - c])
    return A, b


def _pivot(T, r, e):
    T[r] /= T[r, e]
    col = T[:, e].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


class _Tableau:
    """Dense tableau simplex with largest-coefficient pricing.

    Pricing switches to Bland's rule (lowest eligible index, lowest
    basic index on ratio ties) after a run of degenerate pivots, which
    rules out cycling.
    """

    def __init__(self, T, basis, eps=1e-11, degenerate_switch=50, max_pivots=200_000):
        self.T = T
        self.basis = basis
        self.eps = eps
        self.degenerate_switch = degenerate_switch
        self.max_pivots = max_pivots
        self.pivots = 0
        self.bland_pivots = 0

    def run(self, allowed: np.ndarray) -> str:
        T, eps = self.T, self.eps
        degenerate = 0
        while True:
            rc = T[-1, :-1]
            cand = np.flatnonzero((rc < -eps) & allowed)
            if cand.size == 0:
                return "optimal"
            if self.pivots >= self.max_pivots:
                return "pivot_limit"
            bland = degenerate >= self.degenerate_switch
            e = cand[0] if bland else cand[np.argmin(rc[cand])]
            col = T[:-1, e]
            pos = np.flatnonzero(col > eps)
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + eps * max(1.0, abs(best))]
            r = ties[np.argmin(self.basis[ties])]
            degenerate = degenerate + 1 if best <= eps else 0
            _pivot(T, r, e)
            self.basis[r] = e
            self.pivots += 1
            self.bland_pivots += int(bland)


def _solve_simplex(A, b, opts: DantzigOptions):
    m, N = A.shape
    neg = b < 0
    n_art = int(neg.sum())
    sign = np.where(neg, -1.0, 1.0)
    n_cols = N + m + n_art
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :N] = A * sign[:, None]
    T[:m, N:N + m] = np.diag(sign)
    T[:m, -1] = b * sign
    basis = np.empty(m, dtype=np.int64)
    art_rows = np.flatnonzero(neg)
    basis[~neg] = N + np.flatnonzero(~neg)
    for k, i in enumerate(art_rows):
        T[i, N + m + k] = 1.0
        basis[i] = N + m + k
    tab = _Tableau(T, basis, max_pivots=opts.max_pivots)
    allowed = np.ones(n_cols, dtype=bool)
    scale = max(1.0, float(np.abs(b).max()))
    if n_art:
        # phase one: minimize the sum of artificials
        T[-1, :] = -T[art_rows].sum(axis=0)
        T[-1, N + m:N + m + n_art] = 0.0
        status = tab.run(allowed)
        if status == "pivot_limit":
            raise ConvergenceError("simplex phase one hit the pivot limit")
        if -T[-1, -1] > 1e-9 * scale:
            raise InfeasibleError("Dantzig selector constraint set is empty")
        for i in np.flatnonzero(basis >= N + m):
            row = T[i, :N + m]
            j = np.flatnonzero(np.abs(row) > 1e-9)
            if j.size:
                _pivot(T, i, j[0])
                basis[i] = j[0]
        allowed[N + m:] = False
    cost = np.zeros(n_cols)
    cost[:N] = 1.0
    T[-1, :-1] = cost
    T[-1, -1] = 0.0
    for i, j in enumerate(basis):
        if cost[j] != 0.0:
            T[-1] -= cost[j] * T[i]
    status = tab.run(allowed)
    if status == "pivot_limit":
        raise ConvergenceError("simplex phase two hit the pivot limit")
    if status == "unbounded":
        raise ThlassoError("LP reported unbounded; objective is bounded below so this is a numerical failure")
    x = np.zeros(n_cols)
    x[basis] = T[:m, -1]
    # recompute the basic solution from the original data to shed pivot round-off
    full = np.hstack([A, np.eye(m), np.zeros((m, n_art))])
    B = full[:, basis]
    real = basis < N + m
    try:
        xb = np.linalg.solve(B, b)
        if np.all(xb[real] >= -1e-9 * scale) and np.allclose(xb[~real], 0.0, atol=1e-9 * scale):
            x = np.zeros(n_cols)
            x[basis] = np.maximum(xb, 0.0)
    except np.linalg.LinAlgError:
        pass
    dual_infeas = max(0.0, -float(T[-1, :-1][allowed].min()))
    info = {"pivots": tab.pivots, "bland_pivots": tab.bland_pivots,
            "dual_infeasibility": dual_infeas, "pivot_rule": "dantzig->bland"}
    return x[:N], dual_infeas, info


def _solve_highs(A, b, opts: DantzigOptions):
    N = A.shape[1]
    res = scipy.optimize.linprog(
        np.ones(N), A_ub=A, b_ub=b, bounds=(0, None), method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        raise InfeasibleError("Dantzig selector constraint set is empty")
    if res.status != 0:
        raise ConvergenceError(f"HiGHS failed: {res.message}")
    dual = float(b @ res.ineqlin.marginals)
    gap = abs(float(res.fun) - dual)
    return np.maximum(res.x, 0.0), gap, {"highs_status": res.message}


def fit_dantzig(X, Y, lambda_n: float, opts: DantzigOptions | None = None) -> FitResult:
    """Solve ``min ||b||_1`` subject to ``||X^T (Y - X b)/n||_inf <= lambda_n``.

    The returned fit always satisfies the correlation constraint to
    ``opts.feas_tol``; ``kkt_residual`` records the violation and
    ``gap`` the optimality certificate (duality gap for HiGHS, dual
    infeasibility of the final simplex basis otherwise).
    """
    opts = opts or DantzigOptions()
    if lambda_n < 0:
        raise DomainError("lambda_n must be non-negative")
    Xa = as_matrix(X)
    Yv = as_vector(Y)
    p = Xa.shape[1]
    if float(np.max(np.abs(Xa.T @ Yv))) / Xa.shape[0] <= lambda_n:
        beta = np.zeros(p)
        return FitResult(beta, float(lambda_n), 0.0, 0, 0.0, method=opts.method, gap=0.0,
                         info={"trivial": True})
    A, b = _lp_data(Xa, Yv, lambda_n)
    if opts.method == "simplex":
        x, gap, info = _solve_simplex(A, b, opts)
    else:
        x, gap, info = _solve_highs(A, b, opts)
    beta = x[:p] - x[p:]
    viol = correlation_violation(Xa, Yv, beta, lambda_n)
    result = FitResult(beta, float(lambda_n), viol, int(info.get("pivots", 0)),
                       float(np.abs(beta).sum()), method=opts.method, gap=gap, info=info)
    if viol > opts.feas_tol:
        raise ConvergenceError(f"Dantzig solution violates the constraint by {viol:.3g}", best=result)
    if gap > opts.opt_tol:
        raise ConvergenceError(f"optimality certificate {gap:.3g} exceeds opt_tol", best=result)
    return result
