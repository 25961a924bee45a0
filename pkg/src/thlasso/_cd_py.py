"""Pure-Python coordinate-descent sweeps (fallback for the compiled kernel)."""
import math

import numpy as np


def cd_sweeps(X, r, beta, colsq, thresh, idx, max_sweeps, tol):
    """Cyclic coordinate descent over ``idx`` updating ``beta`` and ``r`` in place.

    Returns ``(sweeps, max_change)`` where ``max_change`` is the largest
    ``colsq[j] * |delta_j|`` seen in the last sweep.
    """
    n = X.shape[0]
    sweep = 0
    maxchg = 0.0
    while sweep < max_sweeps:
        maxchg = 0.0
        for j in idx:
            c = colsq[j]
            if c == 0.0:
                continue
            xj = X[:, j]
            z = float(xj @ r) / n + c * beta[j]
            t = thresh[j]
            if math.isinf(t):
                nb = 0.0
            elif z > t:
                nb = (z - t) / c
            elif z < -t:
                nb = (z + t) / c
            else:
                nb = 0.0
            d = nb - beta[j]
            if d != 0.0:
                r -= d * xj
                beta[j] = nb
                maxchg = max(maxchg, c * abs(d))
        sweep += 1
        if maxchg <= tol:
            break
    return sweep, maxchg
