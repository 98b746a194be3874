"""Compiled Dormand-Prince step for the regularised full frame.

The right-hand side here repeats odesys.full_field times the time change
x/(x + x_ref); the test suite checks the two against each other.
"""

import numpy as np
from numba import njit

_A = np.array([
    [0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@njit(cache=True)
def full_regular_rhs(w, lam, x_ref, out):
    x = w[0]
    y = w[1]
    tau2 = w[2]
    y2 = y * y
    x2 = x * x
    S = y2 - x2 - 1.5 * x * tau2
    R1 = lam * x * y2 - 3.0 * tau2
    rho = x / (x + x_ref)
    out[0] = rho * (1.0 - x * (x + 2.0 * tau2) / (2.0 * y2))
    out[1] = rho * (x + tau2) / (2.0 * y)
    out[2] = rho * 4.0 * R1 * S / (3.0 * x * (x2 + 2.0 * y2))
    out[3] = rho


@njit(cache=True)
def dopri_full_regular(w, h, k1, lam, x_ref, rtol, atol):
    n = w.shape[0]
    K = np.zeros((7, n))
    K[0] = k1
    wi = np.empty(n)
    for i in range(1, 6):
        for j in range(n):
            acc = 0.0
            for m in range(i):
                acc += _A[i, m] * K[m, j]
            wi[j] = w[j] + h * acc
        if not (wi[0] > 0.0 and wi[1] > 0.0 and np.all(np.isfinite(wi))):
            return False, w, K, np.inf
        full_regular_rhs(wi, lam, x_ref, K[i])
    w_new = np.empty(n)
    for j in range(n):
        acc = 0.0
        for m in range(6):
            acc += _B[m] * K[m, j]
        w_new[j] = w[j] + h * acc
    if not (w_new[0] > 0.0 and w_new[1] > 0.0 and np.all(np.isfinite(w_new))):
        return False, w, K, np.inf
    full_regular_rhs(w_new, lam, x_ref, K[6])
    if not np.all(np.isfinite(K[6])):
        return False, w, K, np.inf
    total = 0.0
    for j in range(n):
        acc = 0.0
        for m in range(7):
            acc += _E[m] * K[m, j]
        sc = atol + rtol * max(abs(w[j]), abs(w_new[j]))
        r = h * acc / sc
        total += r * r
    err = np.sqrt(total / n)
    return np.isfinite(err), w_new, K, err
