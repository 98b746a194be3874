"""
Domain types, algebraic identities and closed-cone arithmetic.

A state of the first-order system is (t, x, y, tau2) where x is the
fibre scale, y the base scale and tau2 the second torsion coefficient.
Everything else (tau1, u, the adjusted torsion, S, M, ...) is derived
algebraically from a state and the dilation constant lambda.
"""

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when an operation is called outside its domain."""


@dataclass(frozen=True)
class SolitonParams:
    """Dilation constant; lam > 0 expander, lam < 0 shrinker, lam = 0 steady."""

    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise DomainError("lambda must be finite")

    @property
    def kind(self):
        if self.lam > 0:
            return "expander"
        if self.lam < 0:
            return "shrinker"
        return "steady"


@dataclass(frozen=True)
class SolitonState:
    t: float
    x: float
    y: float
    tau2: float

    def __post_init__(self):
        for name in ("t", "x", "y", "tau2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    def as_array(self):
        return np.array([self.x, self.y, self.tau2], dtype=float)

    @classmethod
    def from_array(cls, t, z):
        return cls(float(t), float(z[0]), float(z[1]), float(z[2]))


@dataclass(frozen=True)
class DerivedQuantities:
    g: float
    S: float
    tau1: float
    u: float
    tt1: float
    tt2: float
    M: float
    R1: float
    R2: float
    warp: float


def derived_arrays(x, y, tau2, lam):
    """Vectorised derived quantities.

    Works on floats or numpy arrays and returns a dict keyed by the
    DerivedQuantities field names. The adjusted torsion is computed from
    the R1/R2 rational forms, which stay well conditioned when x << y.
    """
    x2 = x * x
    y2 = y * y
    d = x2 + 2.0 * y2
    R1 = lam * x * y2 - 3.0 * tau2
    R2 = 2.0 * lam * y2 * y2 / x + 3.0 * tau2
    tt1 = 2.0 * x2 * R1 / d
    tt2 = x2 * R2 / d
    return {
        "g": np.cbrt(x * y2),
        "S": y2 - x2 - 1.5 * x * tau2,
        "tau1": -2.0 * x2 * tau2 / y2,
        "u": (2.0 * (y2 - x2) * tau2 - 2.0 * lam * x * y2 * y2) / (y2 * d),
        "tt1": tt1,
        "tt2": tt2,
        "M": 3.0 * x + tt1,
        "R1": R1,
        "R2": R2,
        "warp": y / x,
    }


def derive(state, params):
    """All algebraically derived scalars at a single state."""
    if not (state.x > 0 and state.y > 0):
        raise DomainError("derive needs x > 0 and y > 0")
    q = derived_arrays(state.x, state.y, state.tau2, params.lam)
    return DerivedQuantities(**{k: float(v) for k, v in q.items()})


@dataclass(frozen=True)
class ClosedCone:
    """Closed cone x = c1 t, y = c2 t with 6 c1 c2^2 = c1^2 + 2 c2^2."""

    ell: float
    c1: float
    c2: float

    def equation_residual(self):
        c1, c2 = self.c1, self.c2
        return 6.0 * c1 * c2 * c2 - (c1 * c1 + 2.0 * c2 * c2)


def cone_from_ell(ell):
    if not ell > 0:
        raise DomainError("ell must be positive")
    c1 = (2.0 + 1.0 / (ell * ell)) / 6.0
    return ClosedCone(ell=float(ell), c1=c1, c2=ell * c1)


def cone_torsion(cone, t):
    """(tau1, tau2) carried by the cone at radius t."""
    if not t > 0:
        raise DomainError("t must be positive")
    c1 = cone.c1
    return 4.0 * c1 * (2.0 * c1 - 1.0) * t, c1 * (1.0 - 2.0 * c1) * t / (3.0 * c1 - 1.0)


def alpha_fn(l):
    if not l > 0:
        raise DomainError("alpha_fn needs l > 0")
    w = 2.0 + 1.0 / (l * l)
    return (l * l - 1.0) * w * w / 12.0


def s_star(ell, lam):
    """Limit of S along an end asymptotic to the cone with warping ell."""
    if lam == 0:
        raise DomainError("s_star is undefined for steady solitons")
    return alpha_fn(ell) / lam


def rate2_coefficients(ell, lam):
    """Coefficients (xi*S*, zeta*S*) of t^-1 in x and y along an AC end.

    After a translation in t, x = c1 t + xi S*/t + ..., y = c2 t + zeta S*/t + ...
    with xi = (c1^2 - 4 c2^2)/(18 c1 c2^4) and zeta = (5 c1^2 - 2 c2^2)/(36 c1^2 c2^3).
    """
    cone = cone_from_ell(ell)
    c1, c2 = cone.c1, cone.c2
    ss = s_star(ell, lam)
    xi = (c1 * c1 - 4.0 * c2 * c2) / (18.0 * c1 * c2 ** 4)
    zeta = (5.0 * c1 * c1 - 2.0 * c2 * c2) / (36.0 * c1 * c1 * c2 ** 3)
    return xi * ss, zeta * ss


def rate2_coefficients_closed(ell, lam):
    """The same coefficients written directly in ell."""
    l2 = ell * ell
    xs = (l2 - 1.0) * (1.0 - 4.0 * l2) / (lam * l2 * (1.0 + 2.0 * l2))
    zs = -(l2 - 1.0) * (2.0 * l2 - 5.0) / (2.0 * lam * ell * (1.0 + 2.0 * l2))
    return xs, zs


def warp_correction(ell, lam):
    """Coefficient k in x/y = (1/ell)(1 + k t^-2 + ...)."""
    cone = cone_from_ell(ell)
    return -s_star(ell, lam) / (2.0 * cone.c1 * cone.c2 ** 2)
