"""
End-behaviour classification, cone extraction and invariant monitoring.

Expanders (lam > 0) are decided by sign events: the adjusted torsion tt1
becoming positive means AC, M = 3x + tt1 becoming negative means finite
extinction, and the wall in between (tt1 < 0 < M with M/g^3 -> 0) is the
quadratic-exponential end. Shrinkers (lam < 0) are decided by shape: an
S-plateau with convergent warping is AC, x -> 0 is extinction, and x/y > 8
hands the run to the (alpha, beta, gamma) frame to look for the exotic end.

Every decision carries the (t, g) window it was read from.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import integrate as _int
from . import odesys
from .core import (DomainError, SolitonParams, SolitonState, alpha_fn, cone_from_ell, derived_arrays,
                   rate2_coefficients, s_star)
from .series import fit_extinction, initial_state

KINDS = ("AC", "QuadExpExpander", "ExpShrinker", "Extinction", "Inconclusive")


@dataclass(frozen=True)
class ClassifyOptions:
    atol: float | None = None        # sign thresholds are 10*atol; None takes the run's atol
    window_frac: float = 0.5         # fit window [frac*t_max, t_max]
    plateau_tol: float = 1e-7        # relative S-fit residual for a shrinker AC plateau
    handoff_ratio: float = 8.0       # x/y at which shrinkers move to the alpha-beta-gamma frame
    quadexp_growth: float = 100.0
    quadexp_mg3: float = 1e-6
    min_samples: int = 20


@dataclass
class EndBehavior:
    kind: str
    fields: dict
    diagnostics: dict = field(default_factory=dict)
    evidence_window: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown end kind {self.kind!r}")
        for k, v in self.fields.items():
            if not math.isfinite(v):
                raise DomainError(f"field {k} is not finite")
        if self.kind == "AC" and not self.fields["ell"] > 0:
            raise DomainError("AC ell must be positive")

    @property
    def ell(self):
        return self.fields.get("ell")

    def to_dict(self):
        return {"kind": self.kind, "fields": self.fields,
                "diagnostics": self.diagnostics, "evidence_window": self.evidence_window}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), default=_jsonable, **kw)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(type(v))


def _window(t, g, mask):
    idx = np.nonzero(mask)[0]
    return {"t": [float(t[idx[0]]), float(t[idx[-1]])],
            "g": [float(g[idx[0]]), float(g[idx[-1]])]}


def ell_from_s(S, lam):
    """Invert S = alpha(ell)/lam; alpha is strictly increasing on (0, inf)."""
    v = lam * S
    lo, hi = 1e-6, 1e6
    if not alpha_fn(lo) < v < alpha_fn(hi):
        raise DomainError("S is outside the range of alpha/lam")
    return brentq(lambda l: alpha_fn(l) - v, lo, hi, xtol=1e-15, rtol=1e-15)


def _dalpha(l):
    w = 2.0 + 1.0 / (l * l)
    return w * (4 * l - 2 / l + 4 / l ** 3) / 12.0


def _fit(t, v, powers):
    """Least squares v ~ sum c_p t^p. Returns (coeffs, max residual, sd of coeffs)."""
    A = np.vstack([t ** p for p in powers]).T
    sc = np.abs(A).max(axis=0)
    As = A / sc
    c, *_ = np.linalg.lstsq(As, v, rcond=None)
    r = As @ c - v
    dof = max(1, len(v) - len(powers))
    s2 = float(r @ r) / dof
    try:
        cov = s2 * np.linalg.inv(As.T @ As)
        sd = np.sqrt(np.abs(np.diag(cov))) / sc
    except np.linalg.LinAlgError:
        sd = np.full(len(powers), np.inf)
    return c / sc, float(np.max(np.abs(r))), sd


# ell ------------------------------------------------------------------------

XY_POWERS = (0, -2, -3, -4)
S_POWERS = (0, -2, -4)


@dataclass(frozen=True)
class EllEstimate:
    ell: float
    error_est: float
    primary: float          # terminal y/x
    refined_xy: float
    refined_xy_err: float
    from_s: float | None
    from_s_err: float | None
    method: str
    window: tuple

    def __iter__(self):
        return iter((self.ell, self.error_est))


def _xy_extrapolate(t, r):
    c, _, sd = _fit(t, r, XY_POWERS)
    c2, _, _ = _fit(t, r, XY_POWERS + (-5,))
    return 1.0 / c[0], max(sd[0], abs(c2[0] - c[0])) / c[0] ** 2


def _s_extrapolate(t, S, lam):
    c, _, sd = _fit(t, S, S_POWERS)
    l = ell_from_s(c[0], lam)
    return l, sd[0] * abs(lam) / _dalpha(l)


def estimate_ell(traj, window=None, window_frac=0.5):
    """Cone parameter of an AC candidate.

    The x/y ratio is extrapolated in 1/t (terms t^0, t^-2, t^-3, t^-4; the
    odd term absorbs the translation), and separately S is extrapolated and
    mapped through alpha^-1(lam S). The estimate with the smaller error is
    returned. Errors combine fit covariance, a one-term model change and the
    change from the half-length window ending at the window start.
    """
    t, x, y, tau2 = traj.full_arrays()
    lam = traj.params.lam
    if window is None:
        window = (window_frac * t[-1], t[-1])
    a, b = window
    m = (t >= a) & (t <= b)
    if m.sum() < 8:
        raise DomainError("too few samples in the fit window")
    r = x / y
    primary = float(y[m][-1] / x[m][-1])
    if not np.all(np.isfinite(r[m])) or np.ptp(r[m]) > 0.5 * np.max(r[m]):
        raise DomainError("warping does not converge in the window")
    l_xy, e_xy = _xy_extrapolate(t[m], r[m])
    # horizon doubling: the same fit on the preceding half window
    m2 = (t >= a / 2) & (t < a)
    if m2.sum() >= 8:
        l_prev, _ = _xy_extrapolate(t[m2], r[m2])
        e_xy = max(e_xy, abs(l_prev - l_xy))
    l_s = e_s = None
    if lam != 0:
        S = derived_arrays(x, y, tau2, lam)["S"]
        try:
            l_s, e_s = _s_extrapolate(t[m], S[m], lam)
            if m2.sum() >= 8:
                e_s = max(e_s, abs(_s_extrapolate(t[m2], S[m2], lam)[0] - l_s))
        except DomainError:
            l_s = e_s = None
    if l_s is not None and e_s < e_xy:
        ell, err, method = l_s, e_s, "S"
    else:
        ell, err, method = l_xy, e_xy, "xy"
    if not ell > 0:
        raise DomainError("warping does not converge to a positive limit")
    return EllEstimate(ell=float(ell), error_est=float(err), primary=primary,
                       refined_xy=float(l_xy), refined_xy_err=float(e_xy),
                       from_s=None if l_s is None else float(l_s),
                       from_s_err=None if e_s is None else float(e_s),
                       method=method, window=(float(a), float(b)))


# rate -2 --------------------------------------------------------------------

RATE_POWERS = (0, -1, -2, -3, -4)


@dataclass(frozen=True)
class RateReport:
    k_x: float
    k_y: float
    xi_sstar: float
    zeta_sstar: float
    rel_err_x: float
    rel_err_y: float
    translation: float
    slope_x: float
    slope_y: float
    window: tuple
    conclusive: bool
    below_heuristic_range: bool
    printed_xi_sstar: float
    printed_zeta_sstar: float
    note: str = ""

    def to_dict(self):
        return dict(self.__dict__)


def printed_rate2_forms(ell, lam):
    """The l-forms as they are usually quoted; they carry a spurious factor lam^2/12."""
    l2 = ell * ell
    return (lam * (l2 - 1) * (1 - 4 * l2) / (12 * l2 * (1 + 2 * l2)),
            -lam * (l2 - 1) * (2 * l2 - 5) / (24 * ell * (1 + 2 * l2)))


def _rel(a, b, scale):
    return abs(a - b) / abs(b) if abs(b) > 1e-4 * max(1.0, scale) else abs(a - b)


def check_rate_minus_2(traj, ell, params=None, window=None, window_frac=0.5):
    """Fit x - c1 t = a + k_x/t + ... and y - c2 t likewise; compare with xi S*, zeta S*.

    The slopes come from ell, the offsets are free and absorb the
    translation in t. A coefficient predicted to be (numerically) zero is
    compared absolutely.
    """
    t, x, y, _ = traj.full_arrays()
    lam = (params or traj.params).lam
    if window is None:
        window = (window_frac * t[-1], t[-1])
    a, b = window
    m = (t >= a) & (t <= b)
    xi, zeta = rate2_coefficients(ell, lam)
    pxi, pzeta = printed_rate2_forms(ell, lam)
    n = int(m.sum())
    if n < len(RATE_POWERS) + 3:
        return RateReport(math.nan, math.nan, xi, zeta, math.nan, math.nan, math.nan, math.nan,
                          math.nan, (float(a), float(b)), False, True, pxi, pzeta,
                          "insufficient range")
    cone = cone_from_ell(ell)
    cx, _, _ = _fit(t[m], x[m] - cone.c1 * t[m], RATE_POWERS)
    cy, _, _ = _fit(t[m], y[m] - cone.c2 * t[m], RATE_POWERS)
    scale = max(abs(xi), abs(zeta))
    short = b < 50 / math.sqrt(abs(lam)) if lam != 0 else True
    conclusive = n >= 20 and b / a >= 1.5
    return RateReport(k_x=float(cx[1]), k_y=float(cy[1]), xi_sstar=float(xi), zeta_sstar=float(zeta),
                      rel_err_x=float(_rel(cx[1], xi, scale)), rel_err_y=float(_rel(cy[1], zeta, scale)),
                      translation=float(cx[0] / cone.c1), slope_x=cone.c1, slope_y=cone.c2,
                      window=(float(a), float(b)), conclusive=conclusive,
                      below_heuristic_range=short, printed_xi_sstar=float(pxi),
                      printed_zeta_sstar=float(pzeta),
                      note="" if conclusive else "window too short")


# invariants -----------------------------------------------------------------

POSITIVE_SET = ("tt1", "tt2", "S", "tau2", "y2_minus_x2", "minus_u")


@dataclass
class InvariantReport:
    violations: list
    counts: dict
    checked: list
    tol: float

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {"violations": self.violations, "counts": self.counts, "checked": self.checked,
                "tol": self.tol}


def monitor_invariants(traj, params=None, tol=1e-8, positivity=None, max_report=20):
    """Per-sample checks along a full-frame trajectory.

    Always checked: M/g^3 non-increasing, and d/dt log(y/x) = -S/g^3 at each
    sample. The positivity set applies to smoothly-closing expanders and is
    on by default when lam > 0. Tolerances are relative to max(1, |value|).
    """
    t, x, y, tau2 = traj.full_arrays()
    lam = (params or traj.params).lam
    if positivity is None:
        positivity = lam > 0
    q = derived_arrays(x, y, tau2, lam)
    found = []
    counts = {}
    checked = []

    def flag(name, bad, values):
        idx = np.nonzero(bad)[0]
        counts[name] = int(len(idx))
        for i in idx[:max_report]:
            found.append({"invariant": name, "index": int(i), "t": float(t[i]),
                          "value": float(values[i])})

    if positivity:
        vals = {"tt1": q["tt1"], "tt2": q["tt2"], "S": q["S"], "tau2": tau2,
                "y2_minus_x2": y * y - x * x, "minus_u": -q["u"]}
        for name in POSITIVE_SET:
            v = vals[name]
            checked.append(name)
            # the data start at the singular orbit where several of these vanish
            flag(name, v < -tol * np.maximum(1.0, np.abs(v)), v)
    mg = q["M"] / (x * y * y)
    dm = np.diff(mg)
    checked.append("M_over_g3_decreasing")
    flag("M_over_g3_decreasing",
         np.concatenate([[False], dm > tol * np.maximum(1.0, np.abs(mg[1:]))]),
         np.concatenate([[0.0], dm]))
    dx, dy, _ = odesys.full_field(x, y, tau2, lam) if len(t) else (x, y, y)
    lhs = dy / y - dx / x
    rhs = -q["S"] / (x * y * y)
    checked.append("log_warp_identity")
    flag("log_warp_identity",
         np.abs(lhs - rhs) > tol * np.maximum(1.0, np.abs(rhs)), lhs - rhs)
    return InvariantReport(found, counts, checked, tol)


# classification -------------------------------------------------------------

def _thr(traj, opts):
    return 10.0 * (opts.atol if opts.atol is not None else traj.options.atol)


def _extinction(traj, g, reason):
    fit = fit_extinction(traj)
    t, x, y, tau2 = traj.full_arrays()
    q = derived_arrays(x[-1], y[-1], tau2[-1], traj.params.lam)
    target = -1.5 * fit.a ** 2
    diag = {"reason": reason, "b_ext": fit.b_ext, "fit_residual": fit.fit_residual,
            "fit_samples": fit.n_samples, "x2_slope_end": fit.x2_slope_end,
            "tt1_end": float(q["tt1"]), "tt1_limit_predicted": target,
            "tt1_rel_err": abs(float(q["tt1"]) - target) / abs(target)}
    n = fit.n_samples
    m = np.zeros(len(t), bool)
    m[max(0, len(t) - n - 1):] = True
    return EndBehavior("Extinction", {"t_star": fit.t_star, "a": fit.a}, diag, _window(t, g, m))


def _ac_fields(traj, window, g, diag):
    est = estimate_ell(traj, window=window)
    lam = traj.params.lam
    xi, zeta = rate2_coefficients(est.ell, lam)
    t = traj.t
    m = (t >= window[0]) & (t <= window[1])
    diag.update({"ell_error_est": est.error_est, "ell_terminal_warp": est.primary,
                 "ell_refined_xy": est.refined_xy, "ell_from_S": est.from_s,
                 "ell_method": est.method})
    rep = check_rate_minus_2(traj, est.ell, window=window)
    diag["rate_minus_2"] = rep.to_dict()
    return EndBehavior("AC", {"ell": est.ell, "s_star_est": s_star(est.ell, lam),
                              "xi_sstar": xi, "zeta_sstar": zeta}, diag, _window(t, g, m))


def _classify_expander(traj, opts):
    t, x, y, tau2 = traj.full_arrays()
    lam = traj.params.lam
    q = derived_arrays(x, y, tau2, lam)
    g = q["g"]
    thr = _thr(traj, opts)
    pos = np.nonzero(q["tt1"] > thr)[0]
    neg = np.nonzero(q["M"] < -thr)[0]
    if len(pos):
        i0 = pos[0]
        diag = {"reason": "adjusted torsion tt1 became positive", "t_decided": float(t[i0]),
                "termination": traj.termination}
        window = (max(opts.window_frac * t[-1], t[i0]), float(t[-1]))
        try:
            return _ac_fields(traj, window, g, diag)
        except DomainError as e:
            diag["error"] = str(e)
            return EndBehavior("Inconclusive", {}, diag, _window(t, g, t >= t[i0]))
    if traj.termination == "Extinction" or len(neg):
        reason = "M became negative" if len(neg) else "x reached the extinction floor"
        if traj.termination == "Extinction":
            try:
                return _extinction(traj, g, reason)
            except ValueError as e:
                reason += f"; fit failed: {e}"
        return EndBehavior("Inconclusive", {}, {"reason": reason, "predicted": "Extinction",
                                                "termination": traj.termination},
                           _window(t, g, t >= t[neg[0] if len(neg) else -1]))
    # tt1 < 0 < M throughout: look for the quadratic-exponential wall
    mg = q["M"] / g ** 3
    j = np.searchsorted(g, g[-1] / opts.quadexp_growth, side="right") - 1
    diag = {"termination": traj.termination, "M_over_g3_end": float(mg[-1]),
            "g_growth": float(g[-1] / g[0])}
    if j >= 0 and np.all(np.diff(g[j:]) > 0) and abs(mg[-1]) < opts.quadexp_mg3:
        diag["reason"] = "tt1 < 0 < M while g grew by the required factor with M/g^3 -> 0"
        return EndBehavior("QuadExpExpander", {"x_times_t_limit": float(t[-1] * x[-1])}, diag,
                           _window(t, g, t >= t[j]))
    diag["reason"] = "no sign event and the quadratic-exponential test is not met"
    return EndBehavior("Inconclusive", {}, diag, _window(t, g, t >= t[0]))


def find_ac_plateau(traj, opts=None):
    """Largest window [T/2, T] on which S fits S* + s2/t^2 + s4/t^4 to plateau_tol.

    Shrinker AC ends are unstable, so a numerical run leaves them after a
    while; the plateau is the stretch on which it still follows one.
    Returns (a, b) or None.
    """
    opts = opts or ClassifyOptions()
    t, x, y, tau2 = traj.full_arrays()
    lam = traj.params.lam
    S = derived_arrays(x, y, tau2, lam)["S"]
    t_min = 2.0 / math.sqrt(abs(lam)) if lam else 2.0
    if t[-1] < 2 * t_min:
        return None
    for T in np.geomspace(t[-1], 2 * t_min, 80):
        m = (t >= T / 2) & (t <= T)
        if m.sum() < opts.min_samples:
            continue
        xs = x[m]
        if np.any(np.diff(xs) <= 0):
            continue
        c, res, _ = _fit(t[m], S[m], S_POWERS)
        if res <= opts.plateau_tol * max(1.0, abs(c[0])):
            try:
                ell_from_s(c[0], lam)
            except DomainError:
                continue
            return float(t[m][0]), float(t[m][-1])
    return None


def _classify_shrinker(traj, opts):
    t, x, y, tau2 = traj.full_arrays()
    lam = traj.params.lam
    g = derived_arrays(x, y, tau2, lam)["g"]
    plateau = find_ac_plateau(traj, opts)
    if plateau is not None:
        diag = {"reason": "S settles on a constant with convergent warping",
                "termination": traj.termination}
        if plateau[1] < t[-1]:
            diag["departure_after"] = plateau[1]
            diag["later_fate"] = traj.termination
            diag["note"] = ("shrinker AC ends are unstable; the run leaves the plateau "
                            "through the growing S-mode")
        try:
            out = _ac_fields(traj, plateau, g, diag)
            i = np.searchsorted(t, plateau[1], side="right") - 1
            out.diagnostics["S_at_window_end"] = float(
                derived_arrays(x[i], y[i], tau2[i], lam)["S"])
            return out
        except DomainError as e:
            diag["ac_error"] = str(e)
    if traj.termination == "Extinction":
        try:
            return _extinction(traj, g, "x reached the extinction floor")
        except ValueError as e:
            return EndBehavior("Inconclusive", {}, {"reason": f"extinction fit failed: {e}"},
                               _window(t, g, t >= t[0]))
    if x[-1] / y[-1] > opts.handoff_ratio:
        return _handoff(traj, opts)
    diag = {"reason": "no plateau, no extinction and x/y below the handoff ratio",
            "termination": traj.termination}
    if len(x) > 2 and x[-1] < x[-2]:
        diag["predicted"] = "Extinction"
    return EndBehavior("Inconclusive", {}, diag, _window(t, g, t >= t[0]))


GAMMA_TOL = 1e-6


def exp_shrinker_check(traj_abg, tol=1e-3, gamma_tol=GAMMA_TOL):
    """Does an (alpha, beta, gamma) run end near (-3/4, beta*, 0)?"""
    lam = traj_abg.params.lam
    beta_star = math.sqrt(-9.0 / (8.0 * lam))
    a, b, gm = traj_abg.z[-1]
    dist = math.hypot(a + 0.75, b - beta_star)
    return dist < tol and gm < gamma_tol, dist, float(gm)


def _handoff(traj, opts, t_span=None):
    lam = traj.params.lam
    t_end, z = traj.final()
    x, y, tau2 = traj.full_arrays()[1][-1], traj.full_arrays()[2][-1], traj.full_arrays()[3][-1]
    w0 = odesys.full_to_abg(x, y, tau2)
    beta_star = math.sqrt(-9.0 / (8.0 * lam))
    span = t_span if t_span is not None else 200.0 * beta_star
    o = _int.IntegratorOptions(rtol=traj.options.rtol, atol=traj.options.atol,
                               max_t=t_end + span, min_x=traj.options.min_x)
    # the fixed point is a saddle: stop once gamma is small instead of drifting off it
    gamma_small = _int.Event("gamma_small", lambda t, w: GAMMA_TOL - w[2])
    sub = _int.integrate(w0, odesys.SHRINKER_ABG, traj.params, o, t0=t_end, events=(gamma_small,))
    return _classify_abg(sub, opts, handed_off_at=float(t_end))


def _classify_abg(sub, opts, handed_off_at=None):
    t = sub.t
    a, b, gm = sub.z[:, 0], sub.z[:, 1], sub.z[:, 2]
    g = np.cbrt(b / np.maximum(gm, 1e-300) ** 2)
    diag = {"termination": sub.termination}
    if handed_off_at is not None:
        diag["handoff_t"] = handed_off_at
    ok, dist, gend = exp_shrinker_check(sub)
    diag.update({"distance_to_fixed_point": dist, "gamma_end": gend})
    if ok:
        tail = t >= t[-1] - 0.25 * (t[-1] - t[0])
        rate = float(np.mean(-(2 * a[tail] + 1) / (2 * b[tail]) + gm[tail]))
        diag["reason"] = "(alpha, beta) converge to the fixed point while gamma -> 0"
        return EndBehavior("ExpShrinker", {"log_x_rate": rate, "x2_over_y4": float(1 / b[-1] ** 2)},
                           diag, _window(t, g, tail))
    if sub.termination == "Extinction":
        try:
            return _extinction(sub, g, "x reached the extinction floor after handoff")
        except ValueError as e:
            diag["fit_error"] = str(e)
    diag["reason"] = "alpha-beta-gamma run did not settle on the fixed point"
    return EndBehavior("Inconclusive", {}, diag, _window(t, g, t >= t[0]))


def classify_end(traj, params=None, opts=None):
    """Classify the end behaviour of a trajectory. Never guesses: returns Inconclusive."""
    opts = opts or ClassifyOptions()
    if params is not None and params.lam != traj.params.lam:
        raise DomainError("params disagree with the trajectory")
    if traj.frame.tag == "ShrinkerABG":
        return _classify_abg(traj, opts)
    lam = traj.params.lam
    if lam > 0:
        return _classify_expander(traj, opts)
    if lam < 0:
        return _classify_shrinker(traj, opts)
    t, x, y, tau2 = traj.full_arrays()
    g = np.cbrt(x * y * y)
    if traj.termination == "Extinction":
        return _extinction(traj, g, "x reached the extinction floor")
    return EndBehavior("Inconclusive", {}, {"reason": "steady solitons are not classified"},
                       _window(t, g, t >= t[0]))


def default_run_options(lam, b=None, **kw):
    """Integration limits that let classify_end decide.

    Expanders run to g = 200 max(1, sqrt(q)), q = lam b^2; shrinkers run to
    t = 50/sqrt(|lam|) or until x/y exceeds the handoff ratio.
    """
    if lam > 0:
        q = lam * b * b if b is not None else 1.0
        kw.setdefault("max_g", 200.0 * max(1.0, math.sqrt(q)))
    else:
        kw.setdefault("max_t", 50.0 / math.sqrt(abs(lam)) if lam else 100.0)
    return _int.IntegratorOptions(**kw)


def handoff_event(ratio=8.0):
    return _int.Event("handoff", lambda t, z: z[0] / z[1] - ratio)


def classify(lam, b=None, initial=None, run_opts=None, opts=None, order=20):
    """Integrate and classify; exactly one of b (series start) or initial (a SolitonState)."""
    if (b is None) == (initial is None):
        raise DomainError("give exactly one of b or initial")
    opts = opts or ClassifyOptions()
    params = SolitonParams(float(lam))
    if run_opts is None:
        run_opts = default_run_options(lam, b)
    start = initial_state(lam, b, order) if b is not None else initial
    events = (handoff_event(opts.handoff_ratio),) if lam < 0 else ()
    traj = _int.integrate(start, odesys.FULL, params, run_opts, events=events)
    return classify_end(traj, params, opts), traj


# the quadratic-exponential wall ------------------------------------------------

def _sign_events(lam, thr):
    def ac(t, z):
        x, y, tau2 = z
        return 2 * x * x * (lam * x * y * y - 3 * tau2) / (x * x + 2 * y * y) - thr

    def ext(t, z):
        x, y, tau2 = z
        return -(3 * x + 2 * x * x * (lam * x * y * y - 3 * tau2) / (x * x + 2 * y * y)) - thr
    return (_int.Event("AC", ac), _int.Event("Extinction", ext))


def decide_expander(state, lam, run_opts=None):
    """Integrate until tt1 > 0 (AC) or M < 0 (Extinction); returns the tag or the termination."""
    run_opts = run_opts or _int.IntegratorOptions(max_g=1e100)
    traj = _int.integrate(state, odesys.FULL, SolitonParams(lam), run_opts,
                          events=_sign_events(lam, 10.0 * run_opts.atol))
    return traj.events[-1][1] if traj.termination == "EventStop" else traj.termination


def limit_branch_state(lam, t0, m_over_g3, A=1.0):
    """State at t0 with x, y from the eps = 0 explicit solution and tau2 set by M/g^3.

    On that solution M vanishes identically, so small m_over_g3 puts the
    start next to the wall between AC and extinction.
    """
    if not lam > 0:
        raise DomainError("the limit branch exists for expanders")
    x = 3.0 / (lam * t0)
    y = A * math.sqrt(t0) * math.exp(lam * t0 * t0 / 12.0)
    g3 = x * y * y
    d = x * x + 2 * y * y
    tau2 = (lam * x * y * y - (m_over_g3 * g3 - 3 * x) * d / (2 * x * x)) / 3.0
    return SolitonState(float(t0), x, y, tau2)


def wall_state(lam=1.0, t0=8.0, A=1.0, bracket=(-1e-6, 1e-6), max_iter=80):
    """Bisect m_over_g3 onto the wall; returns the state on its AC side (M > 0)."""
    lo, hi = bracket
    if decide_expander(limit_branch_state(lam, t0, lo, A), lam) != "Extinction" or \
            decide_expander(limit_branch_state(lam, t0, hi, A), lam) != "AC":
        raise DomainError("bracket does not straddle the wall")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        k = decide_expander(limit_branch_state(lam, t0, mid, A), lam)
        if k == "AC":
            hi = mid
        elif k == "Extinction":
            lo = mid
        else:
            raise DomainError(f"undecided run during wall bisection: {k}")
    return limit_branch_state(lam, t0, hi, A)
