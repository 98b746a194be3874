"""
Power series of smoothly-closing solutions at the singular orbit, and the
finite-extinction ansatz fit.

The smoothly-closing solution with y(0) = b has
    x = t + x3 t^3 + ...,  y = b + y2 t^2 + ...,  tau2 = T1 t + T3 t^3 + ...
The coefficients are found level by level from the polynomial-cleared system
    E1 = y^2 (x^2)' - 2 x y^2 + x^2 (x + 2 tau2)
    E2 = (y^2)' - x - tau2
    E3 = 3 x (x^2 + 2 y^2) tau2' - 4 R1 S
Level k fixes T_{2k-1} from E3, then y_{2k} from E2 (both at t^{2k-1}), then
x_{2k+1} from E1 at t^{2k+1}. Each unknown enters its equation affinely, so
the pivot is measured by probing the residual at 0 and 1; a zero pivot is
reported instead of being divided by.
"""

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import mpmath
import numpy as np

from .core import DomainError, SolitonState

MP_DIGITS = 50


class DegeneratePivot(ArithmeticError):
    def __init__(self, order_reached, which):
        super().__init__(f"vanishing pivot for {which}; series valid through t^{order_reached}")
        self.order_reached = order_reached
        self.which = which


def _mul(a, b, n):
    """Truncated product of coefficient lists up to degree n."""
    zero = a[0] * 0
    out = [zero] * (n + 1)
    for i, ai in enumerate(a[: n + 1]):
        if ai == 0:
            continue
        for j in range(min(len(b), n + 1 - i)):
            bj = b[j]
            if bj != 0:
                out[i + j] += ai * bj
    return out


def _add(*terms):
    n = max(len(c) for _, c in terms)
    zero = terms[0][1][0] * 0
    out = [zero] * n
    for w, c in terms:
        for i, v in enumerate(c):
            out[i] += w * v
    return out


def _deriv(a):
    return [i * a[i] for i in range(1, len(a))] + [a[0] * 0]


def _residuals(x, y, tau, lam, n):
    """Coefficient lists of (E1, E2, E3) through degree n."""
    x2 = _mul(x, x, n)
    y2 = _mul(y, y, n)
    x2p = _deriv(x2)
    E1 = _add((1, _mul(y2, x2p, n)), (-2, _mul(x, y2, n)),
              (1, _mul(x2, _add((1, x), (2, tau)), n)))
    E2 = _add((1, _deriv(y2)), (-1, x), (-1, tau))
    d = _add((1, x2), (2, y2))
    R1 = _add((lam, _mul(x, y2, n)), (-3, tau))
    S = _add((1, y2), (-1, x2), (Fraction(-3, 2) if isinstance(lam, Fraction) else -1.5,
                                   _mul(x, tau, n)))
    E3 = _add((3, _mul(_mul(x, d, n), _deriv(tau), n)), (-4, _mul(R1, S, n)))
    return E1, E2, E3


def _solve_one(coeffs, slot, eq_index, degree, lam, n):
    """Set coeffs[slot] so that equation eq_index vanishes at t^degree."""
    series, pos = slot
    series[pos] = series[pos] * 0
    r0 = _residuals(*coeffs, lam, n)[eq_index][degree]
    series[pos] = series[pos] * 0 + 1
    r1 = _residuals(*coeffs, lam, n)[eq_index][degree]
    pivot = r1 - r0
    if pivot == 0:
        series[pos] = series[pos] * 0
        return False
    series[pos] = -r0 / pivot
    return True


@dataclass(frozen=True)
class SmoothClosingSeries:
    lam: object
    b: object
    order: int
    x_coeffs: tuple      # dense, index = power of t
    y_coeffs: tuple
    tau2_coeffs: tuple
    exact: bool
    order_reached: int = field(default=-1)

    def __post_init__(self):
        if self.order_reached < 0:
            object.__setattr__(self, "order_reached", self.order)

    @property
    def x3(self):
        return self.x_coeffs[3]

    @property
    def y2(self):
        return self.y_coeffs[2]

    @property
    def tau21(self):
        return self.tau2_coeffs[1]

    def tau1_coeffs(self):
        """tau1 = -2 x^2 tau2 / y^2 as a series."""
        n = self.order
        num = _mul(_mul(list(self.x_coeffs), list(self.x_coeffs), n), list(self.tau2_coeffs), n)
        inv = _inverse(_mul(list(self.y_coeffs), list(self.y_coeffs), n), n)
        return tuple(-2 * c for c in _mul(num, inv, n))

    def u_coeffs(self):
        """u = [2 (y^2 - x^2) tau2 - 2 lam x y^4] / [y^2 (x^2 + 2 y^2)] as a series."""
        n = self.order
        x, y, tau = list(self.x_coeffs), list(self.y_coeffs), list(self.tau2_coeffs)
        x2 = _mul(x, x, n)
        y2 = _mul(y, y, n)
        num = _add((2, _mul(_add((1, y2), (-1, x2)), tau, n)),
                   (-2 * self.lam, _mul(x, _mul(y2, y2, n), n)))
        den = _mul(y2, _add((1, x2), (2, y2)), n)
        return tuple(_mul(num, _inverse(den, n), n))


def _inverse(a, n):
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term")
    out = [a[0] * 0] * (n + 1)
    out[0] = 1 / a[0] if not isinstance(a[0], int) else Fraction(1, a[0])
    for k in range(1, n + 1):
        s = sum(a[j] * out[k - j] for j in range(1, min(k, len(a) - 1) + 1))
        out[k] = -s / a[0]
    return out


def _is_rational(v):
    return isinstance(v, Rational)


def _mpf(v):
    if isinstance(v, Rational):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def smooth_closing_coeffs(lam, b, order=20):
    """Coefficients through t^order of the smoothly-closing solution.

    Runs in exact Fraction arithmetic when lam and b are ints or Fractions,
    otherwise in mpmath at MP_DIGITS significant digits.
    """
    if not isinstance(order, int) or not 3 <= order <= 40:
        raise DomainError("order must be an integer in [3, 40]")
    if not b > 0:
        raise DomainError("b must be positive")
    exact = _is_rational(lam) and _is_rational(b)
    if exact:
        lam_c, b_c = Fraction(lam), Fraction(b)
        zero, one = Fraction(0), Fraction(1)
    else:
        mpmath.mp.dps = MP_DIGITS
        lam_c, b_c = _mpf(lam), _mpf(b)
        zero, one = mpmath.mpf(0), mpmath.mpf(1)
    n = order
    x = [zero] * (n + 2)
    y = [zero] * (n + 2)
    tau = [zero] * (n + 2)
    x[1] = one
    y[0] = b_c
    coeffs = (x, y, tau)
    reached = 1
    k = 1
    while 2 * k - 1 <= n:
        steps = [((tau, 2 * k - 1), 2, 2 * k - 1, "tau2"),
                 ((y, 2 * k), 1, 2 * k - 1, "y"),
                 ((x, 2 * k + 1), 0, 2 * k + 1, "x")]
        for slot, eq, deg, name in steps:
            if slot[1] > n:
                continue
            if not _solve_one(coeffs, slot, eq, deg, lam_c, n + 1):
                raise DegeneratePivot(reached, f"{name}_{slot[1]}")
            reached = max(reached, slot[1] if name != "y" else slot[1] - 1)
        k += 1
    return SmoothClosingSeries(
        lam=lam_c, b=b_c, order=n,
        x_coeffs=tuple(x[: n + 1]), y_coeffs=tuple(y[: n + 1]),
        tau2_coeffs=tuple(tau[: n + 1]), exact=exact, order_reached=n)


def _horner(coeffs, t):
    acc = coeffs[-1] * 0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


@dataclass(frozen=True)
class SeriesInit:
    state: SolitonState
    warning: str | None = None


def eval_series(series, t0):
    """Initial state at t0 from the truncated series.

    Returns a SeriesInit whose warning is set when t0 lies outside the
    heuristic window 0 < t0 <= b/10.
    """
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    b = float(series.b)
    note = None
    if t0 > b / 10:
        note = f"t0={t0!r} exceeds b/10={b / 10!r}; truncation error may be large"
        warnings.warn(note, stacklevel=2)
    if series.exact:
        tt = Fraction(t0)
    else:
        mpmath.mp.dps = MP_DIGITS
        tt = _mpf(t0)
    vals = [float(_horner(list(c), tt)) for c in
            (series.x_coeffs, series.y_coeffs, series.tau2_coeffs)]
    return SeriesInit(SolitonState(float(t0), *vals), note)


def series_residual(series, t0):
    """Max |E_i| of the truncated series at t0, evaluated in the series arithmetic."""
    n = series.order
    m = 3 * n + 2
    pad = lambda c: list(c) + [c[0] * 0] * (m + 1 - len(c))
    E = _residuals(pad(series.x_coeffs), pad(series.y_coeffs), pad(series.tau2_coeffs),
                   series.lam, m)
    tt = Fraction(t0) if series.exact else _mpf(t0)
    return max(abs(float(_horner(e, tt))) for e in E)


def initial_state(lam, b, order=20, t0=None):
    """Series initial condition with the default t0 = b/20."""
    s = smooth_closing_coeffs(lam, b, order)
    if t0 is None:
        t0 = float(b) / 20
    return eval_series(s, t0).state


# Finite extinction -----------------------------------------------------------

@dataclass(frozen=True)
class ExtinctionAnsatz:
    a: float
    b_ext: float
    t_star: float
    fit_residual: float
    x2_slope_end: float
    n_samples: int


def fit_extinction(traj):
    """Fit the extinction ansatz to a trajectory that ended with x -> 0.

    x^2 = a^2 (t* - t) is fitted by least squares on the last 10% (at least
    50) of the samples whose distance to the final time is resolvable in
    binary64. b_ext comes from the limit g^3 -> 2 a b^2 of the ansatz.
    Raises ValueError when the trajectory did not end by extinction.
    """
    if traj.termination != "Extinction":
        raise ValueError("fit_extinction needs a trajectory ending in extinction")
    t, x, y, tau2 = traj.full_arrays()
    t_end = t[-1]
    keep = np.nonzero(t_end - t > 1e-9 * max(1.0, abs(t_end)))[0]
    if len(keep) < 3:
        raise ValueError("too few resolvable samples before extinction")
    m = min(len(keep), max(50, len(keep) // 10))
    idx = keep[-m:]
    ts, x2 = t[idx], x[idx] ** 2
    A = np.vstack([np.ones(m), ts]).T
    (c0, c1), *_ = np.linalg.lstsq(A, x2, rcond=None)
    slope = -c1
    if not slope > 0:
        raise ValueError("x^2 is not decreasing near the end; not an extinction profile")
    a = math.sqrt(slope)
    t_star = c0 / slope
    resid = float(np.max(np.abs(A @ np.array([c0, c1]) - x2)) / np.max(x2))
    xe, ye, te = x[-1], y[-1], tau2[-1]
    x2p_end = 2 * xe - (xe * xe / (ye * ye)) * (xe + 2 * te)
    b_ext = math.sqrt(xe * ye * ye / (2 * a))
    return ExtinctionAnsatz(a=a, b_ext=b_ext, t_star=float(t_star), fit_residual=resid,
                            x2_slope_end=float(x2p_end), n_samples=m)
