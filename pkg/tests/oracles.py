"""Brute-force reference solutions, written independently of the package solvers."""
import itertools

import numpy as np


def lasso_oracle(X, Y, lam):
    """Global minimum of ``(1/2n)||Y - Xb||^2 + lam ||b||_1`` by sign-pattern enumeration.

    For every support ``S`` with ``X_S`` of full column rank and every
    sign vector ``z`` the stationarity equation ``G_SS b = c_S - lam z``
    is solved; a candidate is kept when its signs equal ``z`` and the
    off-support subgradient condition holds.  A minimizer with linearly
    independent columns always exists, so the smallest kept objective is
    the optimum.
    """
    n, p = X.shape
    G = X.T @ X / n
    c = X.T @ Y / n

    def obj(b):
        r = Y - X @ b
        return r @ r / (2 * n) + lam * np.abs(b).sum()

    best = obj(np.zeros(p))
    best_b = np.zeros(p)
    for k in range(1, min(n, p) + 1):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k)))
        for S in itertools.combinations(range(p), k):
            S = list(S)
            Gss = G[np.ix_(S, S)]
            if np.linalg.cond(Gss) > 1e10:
                continue
            inv = np.linalg.inv(Gss)
            B = (inv @ (c[S][:, None] - lam * signs.T)).T
            ok = np.all(np.sign(B) == signs, axis=1)
            if not ok.any():
                continue
            off = [j for j in range(p) if j not in S]
            for b_s in B[ok]:
                b = np.zeros(p)
                b[S] = b_s
                if off and np.max(np.abs(c[off] - G[off] @ b)) > lam * (1 + 1e-9) + 1e-12:
                    continue
                v = obj(b)
                if v < best:
                    best, best_b = v, b
    return best, best_b


def dantzig_oracle(X, Y, lam, tol=1e-9):
    """``min ||b||_1`` subject to ``||c - G b||_inf <= lam`` by vertex enumeration.

    On each orthant the objective is linear and the feasible region is
    pointed, so an optimum sits where ``p`` independent constraints are
    active: ``b_j = 0`` for ``j`` in a zero set, plus ``k`` rows of
    ``G b = c +/- lam`` for the ``k`` free coordinates.
    """
    n, p = X.shape
    G = X.T @ X / n
    c = X.T @ Y / n
    best = np.inf
    best_b = None
    scale = max(1.0, float(np.abs(c).max()))
    if np.max(np.abs(c)) <= lam:
        return 0.0, np.zeros(p)
    for k in range(1, p + 1):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k)))
        Rs = np.array(list(itertools.combinations(range(p), k)), dtype=np.int64)
        for F in itertools.combinations(range(p), k):
            F = list(F)
            A = G[Rs[:, :, None], np.array(F)[None, None, :]]
            ok = np.linalg.cond(A) < 1e12
            if not ok.any():
                continue
            A, R = A[ok], Rs[ok]
            rhs = c[R][:, None, :] + lam * signs[None, :, :]
            sol = np.linalg.solve(A[:, None, :, :], rhs[..., None])[..., 0]
            B = np.zeros(sol.shape[:2] + (p,))
            B[..., F] = sol
            viol = np.max(np.abs(c - B @ G.T), axis=-1) - lam
            feas = viol <= tol * scale
            if not feas.any():
                continue
            l1 = np.where(feas, np.abs(B).sum(axis=-1), np.inf)
            i = np.unravel_index(int(np.argmin(l1)), l1.shape)
            if l1[i] < best:
                best, best_b = float(l1[i]), B[i]
    return best, best_b


def sparse_eigs_bruteforce(X, m):
    n = X.shape[0]
    G = X.T @ X / n
    lo, hi = np.inf, -np.inf
    for T in itertools.combinations(range(G.shape[0]), m):
        idx = np.array(T)
        ev = np.linalg.eigvalsh(G[np.ix_(idx, idx)])
        lo = min(lo, float(ev[0]))
        hi = max(hi, float(ev[-1]))
    return lo, hi


def theta_bruteforce(X, s, sp):
    n, p = X.shape
    G = X.T @ X / n
    best = 0.0
    for T in itertools.combinations(range(p), s):
        rest = [j for j in range(p) if j not in T]
        for Tp in itertools.combinations(rest, sp):
            sv = np.linalg.svd(G[np.ix_(T, Tp)], compute_uv=False)
            best = max(best, float(sv[0]))
    return best
