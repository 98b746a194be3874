"""
The asymptotic limit map q -> ell for smoothly-closing expanders.

q = lam b^2 is scale invariant, so evaluation fixes lam = 1, b = sqrt(q)
unless told otherwise. ell is read off by estimate_ell on the window
[T/2, T] of a run that stops at g = 200 max(1, sqrt(q)).
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import integrate as _int
from . import odesys
from .classify import classify_end, estimate_ell
from .core import DomainError, SolitonParams, cone_from_ell, s_star
from .series import initial_state


class LmapError(RuntimeError):
    """A smoothly-closing expander failed to come out AC: a numerical fault."""


@dataclass(frozen=True)
class LmapOptions:
    horizon_factor: float = 200.0
    rtol: float = 1e-10
    atol: float = 1e-12
    order: int = 20
    lam: float = 1.0


@dataclass(frozen=True)
class LmapPoint:
    q: float
    ell: float
    error_est: float
    c1: float
    c2: float
    s_star: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def row(self):
        return (self.q, self.ell, self.error_est, self.c1, self.c2, self.s_star)


CSV_HEADER = "q,ell,error_est,c1,c2,s_star"


def _truncate(traj, g_max):
    t, x, y, _ = traj.full_arrays()
    n = int(np.searchsorted(np.cbrt(x * y * y), g_max, side="right"))
    return _int.Trajectory(traj.frame, traj.params, traj.t[:n], traj.z[:n], [], "Truncated",
                           traj.options)


def lmap_eval(q, opts=None):
    if not q > 0:
        raise DomainError("q must be positive (the limit map concerns expanders)")
    opts = opts or LmapOptions()
    lam = opts.lam
    b = math.sqrt(q / lam)
    horizon = opts.horizon_factor * max(1.0, math.sqrt(q))
    run = _int.IntegratorOptions(rtol=opts.rtol, atol=opts.atol, max_g=horizon)
    traj = _int.integrate(initial_state(lam, b, opts.order), odesys.FULL, SolitonParams(lam), run)
    end = classify_end(traj)
    if end.kind != "AC":
        raise LmapError(f"q={q!r} classified {end.kind}: {end.diagnostics.get('reason')}")
    est = estimate_ell(traj)
    # horizon doubling: the same estimator on the run cut at half the horizon
    half = estimate_ell(_truncate(traj, horizon / 2))
    err = max(est.error_est, abs(half.ell - est.ell))
    cone = cone_from_ell(est.ell)
    diag = {"fit_error": est.error_est, "horizon_doubling": abs(half.ell - est.ell),
            "dominant": "fit" if est.error_est >= abs(half.ell - est.ell) else "horizon",
            "terminal_warp": est.primary, "t_end": float(traj.t[-1]), "horizon_g": horizon,
            "steps": traj.stats.get("steps"), "ell2_over_q": est.ell ** 2 / q}
    return LmapPoint(q=float(q), ell=est.ell, error_est=err, c1=cone.c1, c2=cone.c2,
                     s_star=s_star(est.ell, 1.0), diagnostics=diag)


@dataclass
class SweepResult:
    points: list
    monotone: bool
    violations: list

    def csv(self):
        lines = [CSV_HEADER]
        lines += [",".join(repr(float(v)) for v in p.row()) for p in self.points]
        return "\n".join(lines) + "\n"


def _eval_star(args):
    return lmap_eval(*args)


def lmap_sweep(q_grid, opts=None, workers=None):
    """Evaluate on a sorted grid; flags any step where ell fails to rise beyond the errors."""
    q_grid = [float(q) for q in q_grid]
    if any(q <= 0 for q in q_grid) or q_grid != sorted(q_grid):
        raise DomainError("q grid must be positive and sorted")
    opts = opts or LmapOptions()
    jobs = [(q, opts) for q in q_grid]
    if workers == 1 or len(jobs) == 1:
        points = [_eval_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            points = list(ex.map(_eval_star, jobs))
    bad = []
    for p, r in zip(points, points[1:]):
        if not r.ell - p.ell > p.error_est + r.error_est:
            bad.append((p.q, r.q))
    return SweepResult(points, not bad, bad)


@dataclass(frozen=True)
class InverseResult:
    q: float
    bracket: tuple
    ell: float
    iterations: int


def lmap_inverse(ell_target, opts=None, tol=1e-6, max_iter=60):
    """q with L(q) = ell_target by a bracketing search in log q.

    The upper end starts at q = 3(ell^2 + 1/2), where the lower bound
    ell^2 > q/3 - 1/2 already forces L(q) > ell_target. Steps are
    Illinois-weighted false position, which keeps the bracket.
    """
    if not ell_target > 1:
        raise DomainError("ell must exceed 1")
    opts = opts or LmapOptions()
    L = lambda q: lmap_eval(q, opts).ell
    hi = 3.0 * (ell_target ** 2 + 0.5)
    f_hi = L(hi) - ell_target
    while f_hi <= 0:
        hi *= 4
        if hi > 1e6:
            raise LmapError(f"no upper bracket found; best {hi!r}")
        f_hi = L(hi) - ell_target
    lo = min(0.1, hi / 4)
    f_lo = L(lo) - ell_target
    while f_lo >= 0:
        lo /= 10
        if lo < 1e-8:
            raise LmapError(f"no lower bracket found; best ({lo!r}, {hi!r})")
        f_lo = L(lo) - ell_target
    a, b = math.log(lo), math.log(hi)
    side = 0
    for it in range(1, max_iter + 1):
        c = b - f_hi * (b - a) / (f_hi - f_lo)
        f_c = L(math.exp(c)) - ell_target
        if abs(f_c) < tol:
            return InverseResult(math.exp(c), (math.exp(a), math.exp(b)), f_c + ell_target, it)
        if f_c > 0:
            b, f_hi = c, f_c
            if side == 1:
                f_lo /= 2
            side = 1
        else:
            a, f_lo = c, f_c
            if side == -1:
                f_hi /= 2
            side = -1
        if b - a < 1e-12:
            break
    raise LmapError(f"no convergence; bracket ({math.exp(a)!r}, {math.exp(b)!r})")
