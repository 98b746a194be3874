"""
Self-checks run by `sp2soliton verify`. Each check is (name, value, bound)
and passes when value <= bound.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import explicit, limitdyn, odesys
from .core import alpha_fn, cone_from_ell, derived_arrays, rate2_coefficients, \
    rate2_coefficients_closed, s_star

SUITES = ("core", "odesys", "explicit", "limitdyn")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))

    @property
    def passed(self):
        return bool(self.value <= self.bound)

    def line(self):
        tag = "ok  " if self.passed else "FAIL"
        return f"{tag} {self.suite}/{self.name}: {self.value!r} (bound {self.bound!r})"


def _core(rng):
    out = []
    worst = 0.0
    worst_warp = 0.0
    for _ in range(1000):
        x, y = np.exp(rng.uniform(-2, 2, 2))
        tau2 = rng.uniform(-3, 3)
        lam = rng.uniform(-2, 2)
        q = derived_arrays(x, y, tau2, lam)
        # M/g^3 decreases at rate 3x/y^4 along the flow
        dx, dy, dt2 = odesys.full_field(x, y, tau2, lam)
        h = 1e-6
        qp = derived_arrays(x + h * dx, y + h * dy, tau2 + h * dt2, lam)
        qm = derived_arrays(x - h * dx, y - h * dy, tau2 - h * dt2, lam)
        rate = (qp["M"] / qp["g"] ** 3 - qm["M"] / qm["g"] ** 3) / (2 * h)
        worst = max(worst, abs(rate + 3 * x / y ** 4) / max(1.0, 3 * x / y ** 4))
        lhs = dy / y - dx / x
        worst_warp = max(worst_warp, abs(lhs + q["S"] / q["g"] ** 3) / max(1.0, abs(lhs)))
    out.append(Check("core", "M_over_g3_rate", worst, 1e-5))   # central difference, h = 1e-6
    out.append(Check("core", "log_warp_rate", worst_warp, 1e-12))
    cone_res = max(abs(cone_from_ell(l).equation_residual()) for l in np.linspace(0.2, 5, 200))
    out.append(Check("core", "closed_cone_equation", cone_res, 1e-13))
    gap = max(abs(a - b) for l in np.linspace(0.3, 4, 50) for a, b in
              zip(rate2_coefficients(l, 1.3), rate2_coefficients_closed(l, 1.3)))
    out.append(Check("core", "rate2_forms_agree", gap, 1e-12))
    out.append(Check("core", "s_star_explicit_shrinker", abs(s_star(0.5, -1.0) - 2.25), 1e-15))
    mono = min(alpha_fn(b) - alpha_fn(a) for a, b in zip(np.linspace(0.1, 5, 500)[:-1],
                                                         np.linspace(0.1, 5, 500)[1:]))
    out.append(Check("core", "alpha_increasing", -mono, 0.0))
    return out


def _odesys(rng):
    w = odesys.frame_consistency(1000, rng)
    return [Check("odesys", f"frame_consistency_{k}", v, 1e-10) for k, v in w.items()]


def _explicit(rng):
    refs = [explicit.gaussian(-1), explicit.gaussian(0), explicit.gaussian(1),
            explicit.explicit_shrinker(1.5), explicit.fowdar(-1.0), explicit.expander_limit(1.0, 1.0)]
    out = []
    for r in refs:
        label = f"{r.kind}({r.params.lam!r}{', ' + repr(r.value) if r.value else ''})"
        out.append(Check("explicit", label, explicit.max_residual(r), 1e-12))
    return out


def _limitdyn(rng):
    lam = -1.0
    a, b = limitdyn.fixed_point(lam)
    out = [Check("limitdyn", "fixed_point_residual",
                 max(abs(v) for v in odesys.shrinker_limit_field(a, b, lam)), 1e-15)]
    ev = sorted(np.linalg.eigvals(limitdyn.jacobian_fd(a, b, lam)), key=lambda z: z.imag)
    ref = sorted(limitdyn.linearization_eigenvalues(lam), key=lambda z: z.imag)
    out.append(Check("limitdyn", "eigenvalues_vs_fd", max(abs(p - q) for p, q in zip(ev, ref)), 1e-8))
    rep = limitdyn.boundary_no_entry_check(lam, 1000)
    out.append(Check("limitdyn", "no_entry_worst_inward", rep.worst_margin, 1e-10))
    pts = limitdyn.sample_region_R(lam, 10000, rng)
    out.append(Check("limitdyn", "divergence_min_negated",
                     -float(np.min(limitdyn.divergence(pts[:, 0], pts[:, 1], lam))), 0.0))
    t = np.linspace(-10, 10, 201)
    x, y, tau2 = limitdyn.lift_fixed_point(lam, t)
    ref_pts = [explicit.eval_reference(explicit.fowdar(lam), float(s)) for s in t]
    gap = max(max(abs(p.x - xi) / p.x, abs(p.y - yi) / p.y, abs(p.tau2 - ti) / abs(p.tau2))
              for p, xi, yi, ti in zip(ref_pts, x, y, tau2))
    out.append(Check("limitdyn", "fixed_point_lift_vs_exponential", gap, 1e-10))
    return out


def run(suite="all", seed=0):
    rng = np.random.default_rng(seed)
    names = SUITES if suite == "all" else (suite,)
    fns = {"core": _core, "odesys": _odesys, "explicit": _explicit, "limitdyn": _limitdyn}
    out = []
    for n in names:
        if n not in fns:
            raise ValueError(f"unknown suite {n!r}")
        out.extend(fns[n](rng))
    return out
