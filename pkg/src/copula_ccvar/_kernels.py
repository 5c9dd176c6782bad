"""Hot inner loops, each with a numba kernel and a numpy fallback.

The public wrappers dispatch on :data:`copula_ccvar._accel.USE_NUMBA` at
call time.  Both paths are kept importable so tests and the benchmark can
compare them directly.
"""

import numpy as np
from scipy.signal import lfilter

from . import _accel
from ._accel import njit

# ------------------------------------------------------------- empirical copula


@njit
def _ecop_numba(u, w):
    n, d = u.shape
    m = w.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    for j in range(m):
        c = 0
        for i in range(n):
            inside = True
            for k in range(d):
                if u[i, k] > w[j, k]:
                    inside = False
                    break
            if inside:
                c += 1
        counts[j] = c
    return counts


def _ecop_numpy(u, w, chunk=256):
    counts = np.empty(w.shape[0], dtype=np.int64)
    for start in range(0, w.shape[0], chunk):
        block = w[start:start + chunk]
        counts[start:start + chunk] = np.all(u[:, None, :] <= block[None, :, :], axis=2).sum(axis=0)
    return counts


def empirical_copula_counts(u, w):
    """Number of rows of ``u`` dominated componentwise by each row of ``w``."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _ecop_numba(u, w)
    return _ecop_numpy(u, w)


# ------------------------------------------------------------- GARCH(1,1) filter


@njit
def _garch_var_numba(eps, c0, c1, d1, sigma2_0):
    n = eps.shape[0]
    out = np.empty(n)
    out[0] = sigma2_0
    for t in range(1, n):
        out[t] = c0 + c1 * eps[t - 1] * eps[t - 1] + d1 * out[t - 1]
    return out


def _garch_var_numpy(eps, c0, c1, d1, sigma2_0):
    n = eps.shape[0]
    drive = np.empty(n)
    drive[0] = sigma2_0
    drive[1:] = c0 + c1 * eps[:-1] ** 2
    # sigma2[t] = drive[t] + d1 * sigma2[t-1], a first-order IIR filter
    return lfilter([1.0], [1.0, -d1], drive)


def garch_variance(eps, c0, c1, d1, sigma2_0):
    """Conditional variances ``sigma2[t] = c0 + c1 eps[t-1]^2 + d1 sigma2[t-1]``."""
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _garch_var_numba(eps, float(c0), float(c1), float(d1), float(sigma2_0))
    return _garch_var_numpy(eps, float(c0), float(c1), float(d1), float(sigma2_0))


# ------------------------------------------------------- AR(1)-GARCH(1,1) simulation


def _ar_garch_sim_python(z, a0, a1, c0, c1, d1, x0, eps0, sigma2_0):
    n = z.shape[0]
    x = np.empty(n)
    sig2 = np.empty(n)
    x_prev, e_prev, s_prev = x0, eps0, sigma2_0
    for t in range(n):
        s = c0 + c1 * e_prev * e_prev + d1 * s_prev
        e = np.sqrt(s) * z[t]
        xt = a0 + a1 * x_prev + e
        x[t] = xt
        sig2[t] = s
        x_prev, e_prev, s_prev = xt, e, s
    return x, sig2


_ar_garch_sim_numba = njit(_ar_garch_sim_python)


def ar_garch_simulate(z, a0, a1, c0, c1, d1, x0, eps0, sigma2_0):
    """Run the AR(1)-GARCH(1,1) recursion driven by standardized shocks ``z``."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    args = tuple(float(v) for v in (a0, a1, c0, c1, d1, x0, eps0, sigma2_0))
    if _accel.USE_NUMBA:
        return _ar_garch_sim_numba(z, *args)
    return _ar_garch_sim_python(z, *args)
