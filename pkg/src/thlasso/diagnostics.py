"""Incoherence measurements of a design and closed-form oracle constants.

Exhaustive modes enumerate every column subset and are exact; sampled
modes return one-sided bounds and say which side in their flags.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DomainError, LogBase, ThlassoError, as_matrix, as_vector, noise_bound, top_indices

EXHAUSTIVE_BUDGET = 10**6


class BudgetExceeded(ThlassoError):
    pass


def gram(X) -> np.ndarray:
    X = as_matrix(X)
    return X.T @ X / X.shape[0]


def _check_budget(count: int, budget: int, what: str):
    if count > budget:
        raise BudgetExceeded(
            f"{what} needs {count} subsets, over the budget of {budget}; use mode='greedy_sampled'")


def _combo_chunks(p, m, chunk, pool=None):
    it = itertools.combinations(range(p) if pool is None else pool, m)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), m)


@dataclass(frozen=True)
class SparseEigs:
    m: int
    lambda_min: float
    lambda_max: float
    exact: bool
    argmin: tuple = ()
    argmax: tuple = ()

    @property
    def delta(self) -> float:
        """Restricted isometry constant implied by these eigenvalues."""
        return max(self.lambda_max - 1.0, 1.0 - self.lambda_min)


def _sub_eigs(G, idx):
    sub = G[idx[:, :, None], idx[:, None, :]]
    return np.linalg.eigvalsh(sub)


def sparse_eigs(X, m: int, mode: str = "exhaustive", budget: int = EXHAUSTIVE_BUDGET,
                n_samples: int = 2000, rng=None, chunk: int = 8192, G=None) -> SparseEigs:
    """Extreme eigenvalues of ``X_T^T X_T / n`` over ``|T| = m``.

    In ``greedy_sampled`` mode the reported ``lambda_max`` is a lower
    bound on the true value and ``lambda_min`` an upper bound.
    """
    G = gram(X) if G is None else G
    p = G.shape[0]
    if not 1 <= m <= p:
        raise DomainError(f"need 1 <= m <= p (m={m}, p={p})")
    if mode == "exhaustive":
        _check_budget(math.comb(p, m), budget, f"sparse_eigs(m={m})")
        lo, hi = np.inf, -np.inf
        amin = amax = ()
        for idx in _combo_chunks(p, m, chunk):
            ev = _sub_eigs(G, idx)
            i, k = int(np.argmin(ev[:, 0])), int(np.argmax(ev[:, -1]))
            if ev[i, 0] < lo:
                lo, amin = float(ev[i, 0]), tuple(idx[i].tolist())
            if ev[k, -1] > hi:
                hi, amax = float(ev[k, -1]), tuple(idx[k].tolist())
        return SparseEigs(m, lo, hi, True, amin, amax)
    if mode != "greedy_sampled":
        raise DomainError(f"unknown mode {mode!r}")
    g = np.random.default_rng(rng)
    idx = np.array([g.choice(p, m, replace=False) for _ in range(n_samples)], dtype=np.int64)
    idx.sort(axis=1)
    ev = _sub_eigs(G, idx)
    i, k = int(np.argmin(ev[:, 0])), int(np.argmax(ev[:, -1]))
    lo, amin = float(ev[i, 0]), tuple(idx[i].tolist())
    hi, amax = float(ev[k, -1]), tuple(idx[k].tolist())
    # greedy forward growth from the most extreme pairs in the Gram matrix
    off = np.abs(G - np.diag(np.diag(G)))
    starts = np.argsort(-off.max(axis=1))[: min(p, 8)]
    for want_max in (True, False):
        for j0 in starts:
            T = [int(j0)]
            while len(T) < m:
                rest = np.setdiff1d(np.arange(p), T)
                cand = np.array([T + [int(r)] for r in rest], dtype=np.int64)
                e = _sub_eigs(G, cand)
                pick = int(np.argmax(e[:, -1])) if want_max else int(np.argmin(e[:, 0]))
                T = cand[pick].tolist()
            e = np.linalg.eigvalsh(G[np.ix_(T, T)])
            if want_max and e[-1] > hi:
                hi, amax = float(e[-1]), tuple(sorted(T))
            if not want_max and e[0] < lo:
                lo, amin = float(e[0]), tuple(sorted(T))
    return SparseEigs(m, lo, hi, False, amin, amax)


def restricted_orthogonality(X, s: int, s_prime: int, mode: str = "exhaustive",
                             budget: int = EXHAUSTIVE_BUDGET, n_samples: int = 5000, rng=None,
                             chunk: int = 8192, G=None) -> tuple[float, bool]:
    """``theta_{s,s'}``: the largest singular value of ``X_T^T X_T' / n``
    over disjoint ``|T| = s``, ``|T'| = s'``.

    Returns ``(theta, exact)``; sampled values are lower bounds.
    """
    G = gram(X) if G is None else G
    p = G.shape[0]
    if s < 1 or s_prime < 1 or s + s_prime > p:
        raise DomainError(f"need s, s' >= 1 and s + s' <= p (got {s}, {s_prime}, p={p})")
    if mode == "exhaustive":
        _check_budget(math.comb(p, s) * math.comb(p - s, s_prime), budget,
                      f"restricted_orthogonality({s}, {s_prime})")
        best = 0.0
        for T in itertools.combinations(range(p), s):
            rest = [j for j in range(p) if j not in T]
            Ta = np.array(T, dtype=np.int64)
            for idx in _combo_chunks(p, s_prime, chunk, pool=rest):
                sub = G[Ta[None, :, None], idx[:, None, :]]
                sv = np.linalg.svd(sub, compute_uv=False)
                best = max(best, float(sv[:, 0].max()))
        return best, True
    if mode != "greedy_sampled":
        raise DomainError(f"unknown mode {mode!r}")
    g = np.random.default_rng(rng)
    best = 0.0
    for _ in range(n_samples):
        perm = g.permutation(p)
        T, Tp = np.sort(perm[:s]), np.sort(perm[s:s + s_prime])
        best = max(best, float(np.linalg.svd(G[np.ix_(T, Tp)], compute_uv=False)[0]))
    return best, False


def _project_l1_ball(v, radius):
    """Euclidean projection onto ``{x : ||x||_1 <= radius}``."""
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.flatnonzero(u * k > css - radius)[-1]
    shift = (css[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(a - shift, 0.0)


@dataclass(frozen=True)
class RELowerBound:
    """Estimate of ``K(s0, k0)``; always a lower bound on the true value."""

    s0: int
    k0: float
    K: float
    min_ratio: float
    null_witness: bool
    supports_tried: int
    direction: str = "lower_bound"


def re_lower(X, s0: int, k0, budget: int = 2000, iters: int = 200, rng=0,
             null_tol: float = 1e-10):
    """Lower-bound the restricted-eigenvalue constant ``K(s0, k0)``.

    Minimizes ``||X v||_2 / (sqrt(n) ||v_J||_2)`` over the cone
    ``||v_{J^c}||_1 <= k0 ||v_J||_1`` by projected gradient from
    several supports ``J`` (all of them when ``C(p, s0) <= budget``).
    Every evaluated point is feasible, so the smallest ratio found
    over-estimates the true minimum and ``1/ratio`` under-estimates ``K``.
    A ratio below ``null_tol`` means the cone holds a null vector and
    ``K`` is reported as ``inf``.

    ``k0`` may be a sequence; values are then processed in increasing
    order, each warm-started from the best points of the previous one,
    which makes the estimates non-decreasing in ``k0``.
    """
    Xa = as_matrix(X)
    n, p = Xa.shape
    G = Xa.T @ Xa / n
    if not 1 <= s0 <= p:
        raise DomainError("need 1 <= s0 <= p")
    ks = np.atleast_1d(np.asarray(k0, dtype=float))
    if np.any(ks <= 0):
        raise DomainError("k0 must be positive")
    g = np.random.default_rng(rng)
    total = math.comb(p, s0)
    if total <= budget:
        supports = [np.array(J, dtype=np.int64) for J in itertools.combinations(range(p), s0)]
    else:
        supports = [np.sort(g.choice(p, s0, replace=False)) for _ in range(budget)]
        ev_min = sparse_eigs(Xa, s0, "greedy_sampled", n_samples=1, rng=g, G=G)
        supports.append(np.array(ev_min.argmin, dtype=np.int64))
    step = 0.5 / max(float(np.linalg.eigvalsh(G)[-1]), 1e-12)

    def ratio(v, J):
        vJ = np.linalg.norm(v[J])
        return math.sqrt(max(float(v @ G @ v), 0.0)) / vJ if vJ > 0 else np.inf

    def project(v, J, mask, k):
        v = v.copy()
        nJ = np.linalg.norm(v[J])
        if nJ == 0:
            return None
        v[J] /= nJ
        v[~mask] = _project_l1_ball(v[~mask], k * np.abs(v[J]).sum())
        return v

    # initial points: smallest eigenvector of each G_JJ, zero outside J (feasible for every k0)
    starts = []
    for J in supports:
        w, V = np.linalg.eigh(G[np.ix_(J, J)])
        v = np.zeros(p)
        v[J] = V[:, 0]
        starts.append(v)

    out = []
    order = np.argsort(ks)
    results = {}
    for k in ks[order]:
        best, best_v = np.inf, None
        new_starts = []
        for J, v in zip(supports, starts):
            mask = np.zeros(p, dtype=bool)
            mask[J] = True
            cur = v
            r_best = ratio(cur, J)
            v_best = cur
            for _ in range(iters):
                cand = project(cur - step * 2.0 * (G @ cur), J, mask, k)
                if cand is None:
                    break
                rc = ratio(cand, J)
                cur = cand
                if rc < r_best:
                    r_best, v_best = rc, cand
                if r_best <= null_tol:
                    break
            new_starts.append(v_best)
            if r_best < best:
                best, best_v = r_best, v_best
        starts = new_starts
        results[float(k)] = RELowerBound(
            s0, float(k), np.inf if best <= null_tol else 1.0 / best, float(best),
            bool(best <= null_tol), len(supports))
    out = [results[float(k)] for k in ks]
    return out[0] if np.ndim(k0) == 0 else out


def essential_sparsity(beta, lambda_sigma: float, rtol: float = 1e-9) -> int:
    """Smallest integer ``s0`` with ``sum_i min(beta_i^2, ls^2) <= s0 * ls^2``.

    Sums that land within ``rtol`` above an integer (floating-point
    noise on an exact boundary) round down to it.
    """
    if lambda_sigma <= 0:
        raise DomainError("lambda_sigma must be positive")
    b = as_vector(beta)
    ls2 = lambda_sigma**2
    total = float(np.sum(np.minimum(b * b, ls2))) / ls2
    near = round(total)
    if abs(total - near) <= rtol * max(1.0, total):
        return int(near)
    return int(math.ceil(total))


def ideal_mse(beta, sigma: float, n: int, lambda_max_s: float | None = None):
    """``(raw, lower_bound)`` with ``raw = sum min(beta_i^2, sigma^2/n)``.

    ``lower_bound = min(1, 1/Lambda_max(s)) * raw`` or ``None`` when
    ``lambda_max_s`` is not given.
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    b = as_vector(beta)
    raw = float(np.sum(np.minimum(b * b, sigma**2 / n)))
    lower = None if lambda_max_s is None else min(1.0, 1.0 / lambda_max_s) * raw
    return raw, lower


def counting_bound_check(beta, lambda_sigma: float, c_prime: float, sigma: float, n: int,
                         log_base: LogBase | str = LogBase.NATURAL):
    """Count the ``T0``-complement entries at least ``sigma sqrt(log p/(c' n))``.

    Returns ``(count, bound, holds)`` with ``bound = (2c' - 1)(s0 - a0)``.
    """
    if c_prime <= 0.5:
        raise DomainError("c' must exceed 1/2")
    b = as_vector(beta)
    p = b.size
    s0 = essential_sparsity(b, lambda_sigma)
    a0 = int(np.sum(np.abs(b) > lambda_sigma))
    T0 = top_indices(b, s0)
    rest = np.ones(p, dtype=bool)
    rest[T0] = False
    logp = math.log(p) if LogBase(log_base) is LogBase.NATURAL else math.log2(p)
    cut = sigma * math.sqrt(logp / (c_prime * n))
    count = int(np.sum(np.abs(b[rest]) >= cut))
    bound = (2 * c_prime - 1) * (s0 - a0)
    return count, bound, count <= bound + 1e-12


@dataclass(frozen=True)
class OracleInputs:
    d0: float
    K3: float
    K4: float
    lmax_s_minus_s0: float
    lmax_s0: float
    lmax_2s0: float
    lmin_2s0: float
    lmax_2s: float
    lmin_2s: float
    theta_s0_2s0: float
    C4: float | None = None


@dataclass(frozen=True)
class OracleConstants:
    D0: float
    D0_prime: float
    D1: float
    D2: float
    D3: float
    D4: float
    ell_s0: float
    D: float
    inputs: OracleInputs
    plug_in: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inputs"] = asdict(self.inputs)
        return d


def oracle_constants(inputs: OracleInputs, plug_in: bool = True) -> OracleConstants:
    """Evaluate the Lasso oracle constants from incoherence inputs.

    ``D4`` is the square root of its stated upper bound and uses
    ``C4 = D1`` when ``inputs.C4`` is ``None``.
    """
    x = inputs
    if x.lmin_2s0 <= 0 or x.lmin_2s <= 0:
        raise DomainError("Lambda_min values must be positive")
    if x.d0 <= 0:
        raise DomainError("d0 must be positive")
    lm = x.lmax_s_minus_s0
    ell = min(x.theta_s0_2s0 / math.sqrt(x.lmin_2s0), math.sqrt(x.lmax_s0))
    D = math.sqrt(lm / x.lmin_2s0) * (1.0 + 3.0 * ell * math.sqrt(lm) / x.d0)
    D0 = max(D, math.sqrt(2.0) * (x.d0 * x.K4**2 + x.K3 * math.sqrt(lm) + 2.0 * x.d0 * x.K3**2))
    D0p = max(D, x.d0 * x.K4**2, x.K3 * math.sqrt(lm) + 3.0 * x.d0 * x.K3**2)
    D1 = x.d0 * max(lm / x.d0**2 + 2.25 * x.K3**2, 4.0 * x.K4**2, 3.0 * lm / x.d0**2)
    D2 = x.d0 * max(lm / x.d0**2 + 4.0 * x.K3**2, 5.0 * x.K4**2, 4.0 * lm / x.d0**2)
    D3 = math.sqrt(lm) + x.d0 * x.K4 / 2.0 + x.d0 * x.K3
    C4 = D1 if x.C4 is None else x.C4
    D4sq = ((D0p + C4) ** 2 + 1.0) * (1.5 + (x.lmax_2s - x.lmin_2s) ** 2 / (2.0 * x.lmin_2s0**2))
    return OracleConstants(D0, D0p, D1, D2, D3, math.sqrt(D4sq), ell, D, x, plug_in)


@dataclass(frozen=True)
class DSConstants:
    C0: float
    C0_prime: float
    C1: float
    C2: float
    C3: float
    delta: float
    theta: float
    a: float
    tau: float
    C4: float
    lambda_min_2s0: float


def ds_c_values(delta: float, theta: float) -> tuple[float, float, float, float]:
    """``(C0, C0', C1, C2)``; these need only ``delta + theta < 1``."""
    q = 1.0 - delta - theta
    if not q > 0:
        raise DomainError(f"delta+theta >= 1 ({delta + theta:.4g})")
    C0 = 2 * math.sqrt(2) * (1 + (1 - delta**2) / q) + (1 + 1 / math.sqrt(2)) * (1 + delta) ** 2 / q
    C0p = C0 / q + theta * (1 + delta) / q**2
    C2 = 2 * C0p + (1 + delta) / q
    C1 = C0p + (1 + delta) / q
    return C0, C0p, C1, C2


def ds_constants(delta: float, theta: float, a: float, tau: float, C4: float,
                 lambda_min_2s0: float) -> DSConstants:
    """Constants of the Gauss-Dantzig analysis; needs ``delta + theta < 1 - tau``."""
    if tau <= 0:
        raise DomainError("tau must be positive")
    if not delta + theta < 1 - tau:
        raise DomainError(f"delta+theta >= 1-tau ({delta + theta:.4g} >= {1 - tau:.4g})")
    if lambda_min_2s0 <= 0:
        raise DomainError("Lambda_min(2 s0) must be positive")
    C0, C0p, C1, C2 = ds_c_values(delta, theta)
    C3sq = 3 * (math.sqrt(1 + a) + 1 / tau) ** 2 * ((C0p + C4) ** 2 + 1) + 4 * (1 + a) / lambda_min_2s0**2
    return DSConstants(C0, C0p, C1, C2, math.sqrt(C3sq), delta, theta, a, tau, C4, lambda_min_2s0)


def threshold_range(oracle: OracleConstants, lambda_sigma: float, breve_D0: float, breve_D1: float,
                    s0: int):
    """Recommended threshold and the strong-signal size it needs.

    Returns ``(t0, beta_min_requirement)`` with
    ``t0 = min(breve_D1, breve_D0) * lambda_sigma`` and requirement
    ``D0 * lambda_sigma * sqrt(s0) + t0``.  Warns when a breve value
    does not exceed its estimate.
    """
    if breve_D0 <= oracle.D0 or breve_D1 <= oracle.D1:
        warnings.warn("breve constants should exceed the D0/D1 estimates", RuntimeWarning, stacklevel=2)
    t0 = min(breve_D1, breve_D0) * lambda_sigma
    return t0, oracle.D0 * lambda_sigma * math.sqrt(s0) + t0


@dataclass(frozen=True)
class NoiseEventResult:
    fraction: float
    floor: float
    stderr: float
    reps: int
    bound: float


def noise_event_check(X, sigma: float, a: float, reps: int, rng) -> NoiseEventResult:
    """Monte-Carlo frequency of ``||X^T eps / n||_inf <= lambda_{sigma,a,p}``."""
    if reps < 100:
        raise DomainError("reps must be at least 100")
    Xa = as_matrix(X)
    n, p = Xa.shape
    nb = noise_bound(p, n, sigma, a)
    g = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    hits = 0
    block = 256
    done = 0
    while done < reps:
        k = min(block, reps - done)
        eps = sigma * g.standard_normal((n, k))
        stat = np.max(np.abs(Xa.T @ eps), axis=0) / n
        hits += int(np.sum(stat <= nb.bound))
        done += k
    frac = hits / reps
    se = math.sqrt(max(nb.probability_floor * (1 - nb.probability_floor), 1e-300) / reps)
    return NoiseEventResult(frac, nb.probability_floor, se, reps, nb.bound)


@dataclass
class IncoherenceReport:
    lambda_min: dict = field(default_factory=dict)
    lambda_max: dict = field(default_factory=dict)
    theta: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)
    re_lower: dict = field(default_factory=dict)
    exact: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def keys(d):
            return {(",".join(map(str, k)) if isinstance(k, tuple) else str(k)): v for k, v in d.items()}

        return json.dumps({
            "lambda_min": keys(self.lambda_min),
            "lambda_max": keys(self.lambda_max),
            "theta": keys(self.theta),
            "delta": keys(self.delta),
            "re_lower": {k: (None if math.isinf(v) else v) for k, v in keys(self.re_lower).items()},
            "exact": self.exact,
        }, indent=2)

    def table(self) -> str:
        lines = [f"{'quantity':<22}{'value':>14}  exact"]
        for m in sorted(self.lambda_min):
            for name, d in (("Lambda_min", self.lambda_min), ("Lambda_max", self.lambda_max),
                            ("delta", self.delta)):
                lines.append(f"{name + f'({m})':<22}{d[m]:>14.6g}  {self.exact.get(f'eigs:{m}', False)}")
        for (s, sp), v in sorted(self.theta.items()):
            lines.append(f"{f'theta({s},{sp})':<22}{v:>14.6g}  {self.exact.get(f'theta:{s},{sp}', False)}")
        for (s0, k0), v in sorted(self.re_lower.items()):
            lines.append(f"{f'K_lower({s0},{k0:g})':<22}{v:>14.6g}  False")
        return "\n".join(lines)


def diagnose(X, ms=(1, 2), theta_pairs=(), re_pairs=(), mode: str = "exhaustive",
             budget: int = EXHAUSTIVE_BUDGET, rng=0) -> IncoherenceReport:
    G = gram(X)
    rep = IncoherenceReport()
    for m in ms:
        e = sparse_eigs(X, m, mode, budget, rng=rng, G=G)
        rep.lambda_min[m], rep.lambda_max[m], rep.delta[m] = e.lambda_min, e.lambda_max, e.delta
        rep.exact[f"eigs:{m}"] = e.exact
    for s, sp in theta_pairs:
        th, ex = restricted_orthogonality(X, s, sp, mode, budget, rng=rng, G=G)
        rep.theta[(s, sp)] = th
        rep.exact[f"theta:{s},{sp}"] = ex
    for s0, k0 in re_pairs:
        rep.re_lower[(s0, float(k0))] = re_lower(X, s0, k0, rng=rng).K
    return rep


__all__ = [
    "BudgetExceeded", "DSConstants", "IncoherenceReport", "NoiseEventResult", "OracleConstants",
    "OracleInputs", "RELowerBound", "SparseEigs", "counting_bound_check", "diagnose", "ds_c_values", "ds_constants",
    "essential_sparsity", "gram", "ideal_mse", "noise_event_check", "oracle_constants", "re_lower",
    "restricted_orthogonality", "sparse_eigs", "threshold_range",
]
