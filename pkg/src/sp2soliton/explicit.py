"""
Closed-form reference solutions and a residual oracle.

Each reference carries hand-written derivatives so that the residual check
does not go through anything it is meant to test.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import odesys
from .core import DomainError, SolitonParams, cone_from_ell, cone_torsion

KINDS = ("Gaussian", "ExplicitShrinker", "FowdarLimit", "ExpanderLimit", "ClosedConeRay")


@dataclass(frozen=True)
class ReferenceSolution:
    kind: str
    params: SolitonParams
    value: float = 0.0   # b, A or ell depending on kind

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown reference {self.kind!r}")


@dataclass(frozen=True)
class ReferencePoint:
    t: float
    x: float
    y: float
    tau2: float
    u: float | None
    dx: float
    dy: float
    dtau2: float


def gaussian(lam):
    return ReferenceSolution("Gaussian", SolitonParams(float(lam)))


def explicit_shrinker(b):
    if not b > 0:
        raise DomainError("b must be positive")
    return ReferenceSolution("ExplicitShrinker", SolitonParams(-9.0 / (4.0 * b * b)), float(b))


def fowdar(lam=-1.0):
    if not lam < 0:
        raise DomainError("the Fowdar solution needs lambda < 0")
    return ReferenceSolution("FowdarLimit", SolitonParams(float(lam)))


def expander_limit(A=1.0, lam=1.0):
    if not (A > 0 and lam > 0):
        raise DomainError("the expander limit solution needs A > 0 and lambda > 0")
    return ReferenceSolution("ExpanderLimit", SolitonParams(float(lam)), float(A))


def cone_ray(ell, lam=1.0):
    return ReferenceSolution("ClosedConeRay", SolitonParams(float(lam)), float(ell))


def default_grid(ref, n=400):
    """The t-range on which each reference is checked."""
    if ref.kind == "Gaussian":
        return np.linspace(0.1, 100.0, n)
    if ref.kind == "ExplicitShrinker":
        return np.linspace(0.01, 100.0, n)
    if ref.kind == "FowdarLimit":
        return np.linspace(-10.0, 10.0, n)
    if ref.kind == "ExpanderLimit":
        return np.linspace(0.1, 10.0, n)
    return np.linspace(0.1, 100.0, n)


def eval_reference(ref, t):
    lam = ref.params.lam
    kind = ref.kind
    if kind == "Gaussian":
        if not t > 0:
            raise DomainError("Gaussian reference needs t > 0")
        # u = -(lam/3) t is what the algebraic u formula gives on x = y = t/2, tau2 = 0
        return ReferencePoint(t, t / 2, t / 2, 0.0, -lam * t / 3, 0.5, 0.5, 0.0)
    if kind == "ExplicitShrinker":
        if not t >= 0:
            raise DomainError("explicit shrinker needs t >= 0")
        b2 = ref.value ** 2
        y = math.sqrt(b2 + t * t / 4)
        u = 3 * t / (4 * b2) + 4 * t / (4 * b2 + t * t)
        # tau2 = (y^2)' - x = t/2 - t
        return ReferencePoint(t, t, y, -t / 2, u, 1.0, t / (4 * y), -0.5)
    if kind == "FowdarLimit":
        mu = math.sqrt(-lam / 18)
        e = math.exp(mu * t)
        y = math.sqrt(e / mu)
        return ReferencePoint(t, 4 * e, y, -3 * e, None, 4 * mu * e, mu * y / 2, -3 * mu * e)
    if kind == "ExpanderLimit":
        if not t > 0:
            raise DomainError("expander limit solution needs t > 0")
        A = ref.value
        e12 = math.exp(lam * t * t / 12)
        e6 = e12 * e12
        x = 3 / (lam * t)
        y = A * math.sqrt(t) * e12
        tau2 = A * A * (lam * t * t / 3 + 1) * e6
        dy = A * e12 * (1 / (2 * math.sqrt(t)) + lam * t ** 1.5 / 6)
        dtau2 = A * A * e6 * (2 * lam * t / 3 + (lam * t * t / 3 + 1) * lam * t / 3)
        return ReferencePoint(t, x, y, tau2, None, -3 / (lam * t * t), dy, dtau2)
    if not t > 0:
        raise DomainError("cone ray needs t > 0")
    cone = cone_from_ell(ref.value)
    tau1, tau2 = cone_torsion(cone, t)
    return ReferencePoint(t, cone.c1 * t, cone.c2 * t, tau2, None, cone.c1, cone.c2, tau2 / t)


def _system_for(ref):
    return {
        "Gaussian": odesys.full_field,
        "ExplicitShrinker": odesys.full_field,
        "ClosedConeRay": odesys.full_field,
        "FowdarLimit": odesys.heisenberg_field,
        "ExpanderLimit": lambda x, y, t2, lam: odesys.rescaled_field(x, y, t2, 0.0, lam),
    }[ref.kind]


def residual(ref, t_grid=None):
    """Max over the grid of |rhs - analytic derivative| per equation.

    Each residual is divided by max(1, |state|, |derivative|) at that time.
    A closed cone is not a soliton, so for ClosedConeRay only the two
    closure equations are checked and the tau2 entry is reported as None.
    """
    if t_grid is None:
        t_grid = default_grid(ref)
    field = _system_for(ref)
    lam = ref.params.lam
    worst = np.zeros(3)
    for t in t_grid:
        p = eval_reference(ref, float(t))
        got = np.array(field(p.x, p.y, p.tau2, lam))
        want = np.array([p.dx, p.dy, p.dtau2])
        scale = max(1.0, abs(p.x), abs(p.y), abs(p.tau2), *np.abs(want))
        worst = np.maximum(worst, np.abs(got - want) / scale)
    out = {"x": float(worst[0]), "y": float(worst[1]), "tau2": float(worst[2])}
    if ref.kind == "ClosedConeRay":
        out["tau2"] = None
    return out


def max_residual(ref, t_grid=None):
    return max(v for v in residual(ref, t_grid).values() if v is not None)
