"""Time the compiled coordinate-descent kernel against the pure-Python fallback.

    python3 benchmarks/bench_cd.py --n 200 --p 500 --sweeps 20

Both kernels run the same number of full sweeps from zero on the same
problem; the script reports seconds per sweep and checks the iterates agree.
"""
import argparse
import time

import numpy as np

from thlasso import _cd_py
from thlasso.core import lambda_base, normalize_columns

try:
    from thlasso import _cd
except ImportError:  # extension not built
    _cd = None


def problem(n, p, s, seed):
    g = np.random.default_rng(seed)
    X = np.asfortranarray(normalize_columns(g.standard_normal((n, p))).data)
    beta = np.zeros(p)
    beta[g.choice(p, s, replace=False)] = 1 + np.abs(g.standard_normal(s))
    Y = X @ beta + g.standard_normal(n)
    return X, Y


def run(fn, X, Y, lam, sweeps, repeat):
    n, p = X.shape
    colsq = np.einsum("ij,ij->j", X, X) / n
    thresh = np.full(p, lam)
    idx = np.arange(p, dtype=np.int64)
    best = np.inf
    for _ in range(repeat):
        beta = np.zeros(p)
        r = Y.copy()
        t = time.perf_counter()
        fn(X, r, beta, colsq, thresh, idx, sweeps, 0.0)
        best = min(best, time.perf_counter() - t)
    return best / sweeps, beta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=500)
    ap.add_argument("--s", type=int, default=10)
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)

    X, Y = problem(a.n, a.p, a.s, a.seed)
    lam = 0.69 * lambda_base(a.p, a.n)
    t_py, b_py = run(_cd_py.cd_sweeps, X, Y, lam, a.sweeps, a.repeat)
    print(f"n={a.n} p={a.p} s={a.s} lambda={lam:.4g} sweeps={a.sweeps}")
    print(f"{'python':<8}{t_py * 1e3:10.3f} ms/sweep")
    if _cd is None:
        print("cython   not built (pip install -e . --no-build-isolation)")
        return 0
    t_cy, b_cy = run(_cd.cd_sweeps, X, Y, lam, a.sweeps, a.repeat)
    print(f"{'cython':<8}{t_cy * 1e3:10.3f} ms/sweep")
    print(f"speedup  {t_py / t_cy:8.1f}x   max |beta diff| {np.max(np.abs(b_py - b_cy)):.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
