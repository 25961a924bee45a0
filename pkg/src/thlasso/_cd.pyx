# Compiled coordinate-descent sweeps; see _cd_py.py for the reference version.
from libc.math cimport fabs, isinf
from scipy.linalg.cython_blas cimport ddot, daxpy

import numpy as np


cdef inline double _soft(double z, double t) nogil:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def cd_sweeps(double[::1, :] X, double[::1] r, double[::1] beta,
              const double[::1] colsq, const double[::1] thresh,
              const long[::1] idx, int max_sweeps, double tol):
    """Cyclic coordinate descent over ``idx`` updating ``beta`` and ``r`` in place.

    Returns ``(sweeps, max_change)`` where ``max_change`` is the largest
    ``colsq[j] * |delta_j|`` seen in the last sweep.
    """
    cdef int n = X.shape[0]
    cdef int one = 1
    cdef int sweep = 0, k
    cdef long j
    cdef long m = idx.shape[0]
    cdef double g, z, nb, d, neg, chg, maxchg = 0.0
    cdef double inv_n = 1.0 / n
    with nogil:
        while sweep < max_sweeps:
            maxchg = 0.0
            for k in range(m):
                j = idx[k]
                if colsq[j] == 0.0:
                    continue
                g = ddot(&n, &X[0, j], &one, &r[0], &one) * inv_n
                z = g + colsq[j] * beta[j]
                if isinf(thresh[j]):
                    nb = 0.0
                else:
                    nb = _soft(z, thresh[j]) / colsq[j]
                d = nb - beta[j]
                if d != 0.0:
                    neg = -d
                    daxpy(&n, &neg, &X[0, j], &one, &r[0], &one)
                    beta[j] = nb
                    chg = colsq[j] * fabs(d)
                    if chg > maxchg:
                        maxchg = chg
            sweep += 1
            if maxchg <= tol:
                break
    return sweep, maxchg
