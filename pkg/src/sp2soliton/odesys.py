"""
Right-hand sides of the soliton ODE systems in each coordinate frame.

Frames
------
FullXYTau2      (x, y, tau2), the rational first-order system
FullXYS         (x, y, S), same flow with S in place of tau2
RescaledEps     (xh, yh, th2) = (x, eps*y, eps^2*tau2); eps = 1 is the full system
ExpanderLimit   RescaledEps at eps = 0
ShrinkerABG     (alpha, beta, gamma) = (tau2/x, y^2/x, 1/x)
ShrinkerLimit   (alpha, beta), the gamma = 0 restriction of ShrinkerABG
HeisenbergFull  (x, y, tau2) of the shrinker rescaling limit, lifting ShrinkerLimit
"""

from dataclasses import dataclass

import numpy as np

from .core import DomainError, alpha_fn

FRAME_TAGS = (
    "FullXYTau2",
    "FullXYS",
    "RescaledEps",
    "ExpanderLimit",
    "ShrinkerABG",
    "ShrinkerLimit",
    "HeisenbergFull",
)


@dataclass(frozen=True)
class SystemId:
    tag: str
    eps: float = 1.0

    def __post_init__(self):
        if self.tag not in FRAME_TAGS:
            raise DomainError(f"unknown frame {self.tag!r}")
        if self.eps < 0:
            raise DomainError("eps must be non-negative")

    @property
    def dim(self):
        return 2 if self.tag == "ShrinkerLimit" else 3

    def label(self):
        if self.tag == "RescaledEps":
            return f"RescaledEps({self.eps!r})"
        return self.tag


FULL = SystemId("FullXYTau2")
XYS = SystemId("FullXYS")
EXPANDER_LIMIT = SystemId("ExpanderLimit", 0.0)
SHRINKER_ABG = SystemId("ShrinkerABG")
SHRINKER_LIMIT = SystemId("ShrinkerLimit")
HEISENBERG = SystemId("HeisenbergFull")


def rescaled(eps):
    return SystemId("RescaledEps", float(eps))


def _check_scales(a, b):
    if not (np.all(a > 0) and np.all(b > 0)):
        raise DomainError("scales must be positive")


def full_field(x, y, tau2, lam):
    """(x', y', tau2') from (x^2)' = 2x - (x^2/y^2)(x + 2 tau2), (y^2)' = x + tau2."""
    _check_scales(x, y)
    y2 = y * y
    x2 = x * x
    S = y2 - x2 - 1.5 * x * tau2
    R1 = lam * x * y2 - 3.0 * tau2
    dx = 1.0 - x * (x + 2.0 * tau2) / (2.0 * y2)
    dy = (x + tau2) / (2.0 * y)
    dtau2 = 4.0 * R1 * S / (3.0 * x * (x2 + 2.0 * y2))
    return dx, dy, dtau2


def xys_field(x, y, S, lam):
    _check_scales(x, y)
    x2 = x * x
    y2 = y * y
    d = x2 + 2.0 * y2
    dx = (d + 4.0 * S) / (6.0 * y2)
    dy = (d - 2.0 * S) / (6.0 * x * y)
    y4 = y2 * y2
    beta = (lam + (x2 * x2 + 12.0 * x2 * y2 - 4.0 * y4) / (4.0 * x2 * y4)
            + (4.0 * y2 - x2) * S / (3.0 * x2 * y4))
    dS = 2.0 * x * y2 / d * (alpha_fn(y / x) - beta * S)
    return dx, dy, dS


def rescaled_field(xh, yh, th2, eps, lam):
    """The eps-family; eps = 0 gives the expander limit system."""
    _check_scales(xh, yh)
    if eps < 0:
        raise DomainError("eps must be non-negative")
    e2 = eps * eps
    y2 = yh * yh
    x2 = xh * xh
    R1 = lam * xh * y2 - 3.0 * th2
    S = y2 - 1.5 * xh * th2 - e2 * x2
    dx = 1.0 - xh * th2 / y2 - e2 * x2 / (2.0 * y2)
    dy = (th2 + e2 * xh) / (2.0 * yh)
    dth2 = 4.0 * R1 * S / (3.0 * xh * (2.0 * y2 + e2 * x2))
    return dx, dy, dth2


def limit_conserved(xh, yh, th2, lam):
    """Mh/(xh yh^2) with Mh = 3 xh + xh^2 R1h/yh^2; constant along eps = 0 flows."""
    y2 = yh * yh
    R1 = lam * xh * y2 - 3.0 * th2
    return (3.0 * xh + xh * xh * R1 / y2) / (xh * y2)


def abg_field(alpha, beta, gamma, lam):
    if not np.all(beta > 0):
        raise DomainError("beta must be positive")
    if np.any(gamma < 0):
        raise DomainError("gamma must be non-negative")
    da = (-2.0 * (lam * beta - 3.0 * alpha * gamma)
          * ((alpha + 1.0) / (1.0 + 2.0 * beta * gamma) - 1.0 / 3.0)
          + alpha * (1.0 + 2.0 * alpha) / (2.0 * beta) - alpha * gamma)
    db = 2.0 * (alpha + 0.75) - beta * gamma
    dg = (2.0 * alpha + 1.0) * gamma / (2.0 * beta) - gamma * gamma
    return da, db, dg


def shrinker_limit_field(alpha, beta, lam):
    if not np.all(beta > 0):
        raise DomainError("beta must be positive")
    da = -2.0 * lam * beta * (alpha + 2.0 / 3.0) + alpha * (1.0 + 2.0 * alpha) / (2.0 * beta)
    db = 2.0 * (alpha + 0.75)
    return da, db


def heisenberg_field(x, y, tau2, lam):
    """Shrinker rescaling limit in (x, y, tau2); its ratios obey rhs_shrinker_limit."""
    _check_scales(x, y)
    y2 = y * y
    dx = -x * tau2 / y2 - x * x / (2.0 * y2)
    dy = (x + tau2) / (2.0 * y)
    dtau2 = -4.0 * lam * y2 * (x + 1.5 * tau2) / (3.0 * x)
    return dx, dy, dtau2


def _lam(params):
    return float(getattr(params, "lam", params))


def rhs_full(state, params):
    """full_field taking a SolitonState and returning the four derivatives."""
    return full_field(state.x, state.y, state.tau2, _lam(params))


def rhs_xys(x, y, S, params):
    return xys_field(x, y, S, _lam(params))


def rhs_rescaled(state, eps, params):
    xh, yh, th2 = state
    return rescaled_field(xh, yh, th2, eps, _lam(params))


def rhs_shrinker_abg(alpha, beta, gamma, params):
    return abg_field(alpha, beta, gamma, _lam(params))


def rhs_shrinker_limit(alpha, beta, params):
    return shrinker_limit_field(alpha, beta, _lam(params))


def rhs(frame, z, lam):
    """Dispatch on frame; z is a length-2 or length-3 sequence."""
    tag = frame.tag
    if tag == "FullXYTau2":
        return full_field(z[0], z[1], z[2], lam)
    if tag == "FullXYS":
        return xys_field(z[0], z[1], z[2], lam)
    if tag == "RescaledEps":
        return rescaled_field(z[0], z[1], z[2], frame.eps, lam)
    if tag == "ExpanderLimit":
        return rescaled_field(z[0], z[1], z[2], 0.0, lam)
    if tag == "ShrinkerABG":
        return abg_field(z[0], z[1], z[2], lam)
    if tag == "ShrinkerLimit":
        return shrinker_limit_field(z[0], z[1], lam)
    return heisenberg_field(z[0], z[1], z[2], lam)


def in_domain(frame, z):
    tag = frame.tag
    if tag in ("ShrinkerABG", "ShrinkerLimit"):
        ok = z[1] > 0 and (tag == "ShrinkerLimit" or z[2] >= 0)
    else:
        ok = z[0] > 0 and z[1] > 0
    return bool(ok) and bool(np.all(np.isfinite(z)))


# Changes of frame. Each map sends full (x, y, tau2) to the other frame and
# comes with the pushforward of the full vector field, used as an oracle.

def full_to_xys(x, y, tau2):
    return x, y, y * y - x * x - 1.5 * x * tau2


def xys_to_full(x, y, S):
    return x, y, (y * y - x * x - S) / (1.5 * x)


def full_to_abg(x, y, tau2):
    return tau2 / x, y * y / x, 1.0 / x


def abg_to_full(alpha, beta, gamma):
    x = 1.0 / gamma
    return x, np.sqrt(beta * x), alpha * x


def pushforward_xys(x, y, tau2, lam):
    dx, dy, dt2 = full_field(x, y, tau2, lam)
    dS = 2.0 * y * dy - 2.0 * x * dx - 1.5 * (dx * tau2 + x * dt2)
    return dx, dy, dS


def pushforward_abg(x, y, tau2, lam):
    dx, dy, dt2 = full_field(x, y, tau2, lam)
    da = dt2 / x - tau2 * dx / (x * x)
    db = 2.0 * y * dy / x - y * y * dx / (x * x)
    dg = -dx / (x * x)
    return da, db, dg


def heisenberg_ratio_pushforward(x, y, tau2, lam):
    """(alpha, beta)' = (tau2/x, y^2/x)' along the rescaling-limit field."""
    dx, dy, dt2 = heisenberg_field(x, y, tau2, lam)
    return dt2 / x - tau2 * dx / (x * x), 2.0 * y * dy / x - y * y * dx / (x * x)


def _rel_gap(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300))


def frame_consistency(n=1000, rng=None):
    """Largest relative disagreement between each frame's field and the pushforward
    of the full field, over n random states. Returns a dict keyed by frame pair."""
    rng = np.random.default_rng(rng)
    worst = {"xys": 0.0, "abg": 0.0, "rescaled": 0.0, "heisenberg_limit": 0.0}
    for _ in range(n):
        x, y = np.exp(rng.uniform(np.log(0.05), np.log(20.0), 2))
        tau2 = rng.uniform(-3.0, 3.0) * max(x, y)
        lam = rng.uniform(-2.0, 2.0)
        eps = rng.uniform(0.05, 2.0)
        _, _, S = full_to_xys(x, y, tau2)
        worst["xys"] = max(worst["xys"], _rel_gap(xys_field(x, y, S, lam),
                                                  pushforward_xys(x, y, tau2, lam)))
        a, b, g = full_to_abg(x, y, tau2)
        worst["abg"] = max(worst["abg"], _rel_gap(abg_field(a, b, g, lam),
                                                  pushforward_abg(x, y, tau2, lam)))
        dx, dy, dt2 = full_field(x, y, tau2, lam)
        worst["rescaled"] = max(worst["rescaled"], _rel_gap(
            rescaled_field(x, eps * y, eps * eps * tau2, eps, lam), (dx, eps * dy, eps * eps * dt2)))
        lneg = -abs(lam) - 0.01
        worst["heisenberg_limit"] = max(worst["heisenberg_limit"], _rel_gap(
            shrinker_limit_field(a, b, lneg), heisenberg_ratio_pushforward(x, y, tau2, lneg)))
    return worst
