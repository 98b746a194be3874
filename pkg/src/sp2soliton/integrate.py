"""
Adaptive Dormand-Prince 5(4) integration with dense output and events.

For the two full frames the flow is integrated in a regularised time s with
dt/ds = x/(x + x_ref), carrying t as an extra state component. Orbits are
unchanged, but x now crosses the extinction floor with non-zero speed in s
instead of like sqrt(t* - t), which in t would need steps far below the
spacing of binary64 near t*.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import odesys
from .core import DomainError, SolitonParams

TERMINATIONS = ("ReachedMaxT", "ReachedMaxG", "Extinction", "WarpCeiling", "StepFailure",
                "EventStop")

# Dormand & Prince (1980) tableau, FSAL, with the usual 4th order dense output.
C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])
ORDER = 5

SAFETY = 0.9
PI_BETA = 0.04
PI_ALPHA = 1 / ORDER - 0.75 * PI_BETA
FAC_MIN = 0.2
FAC_MAX = 10.0


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_t: float = math.inf
    max_g: float = math.inf
    min_x: float = 1e-8
    max_warp: float = math.inf
    max_steps: int = 2000000
    regularize: bool = True

    def __post_init__(self):
        for name in ("rtol", "atol", "max_t", "max_g", "min_x", "max_warp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def to_dict(self):
        return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}


@dataclass(frozen=True)
class Event:
    """User event; fires when fn(t, z) crosses from negative to non-negative."""

    name: str
    fn: object
    terminal: bool = True


@dataclass
class Trajectory:
    frame: odesys.SystemId
    params: SolitonParams
    t: np.ndarray
    z: np.ndarray
    events: list
    termination: str
    options: IntegratorOptions
    stats: dict = field(default_factory=dict)

    @property
    def samples(self):
        return list(zip(self.t.tolist(), [tuple(r) for r in self.z.tolist()]))

    def final(self):
        return float(self.t[-1]), self.z[-1].copy()

    def full_arrays(self):
        """(t, x, y, tau2) arrays when the frame determines them."""
        tag = self.frame.tag
        c0, c1, c2 = self.z[:, 0], self.z[:, 1], self.z[:, 2]
        if tag == "FullXYTau2":
            return self.t, c0, c1, c2
        if tag == "FullXYS":
            return (self.t, *odesys.xys_to_full(c0, c1, c2))
        if tag == "ShrinkerABG":
            return (self.t, *odesys.abg_to_full(c0, c1, c2))
        if tag == "RescaledEps" and self.frame.eps > 0:
            e = self.frame.eps
            return self.t, c0, c1 / e, c2 / (e * e)
        raise DomainError(f"frame {tag} has no full-variable representation")


class EventNotFound(LookupError):
    pass


class DenseSegment:
    """Quartic interpolant over one accepted step in the integration time s."""

    def __init__(self, s0, h, y0, K, t_index):
        self.s0 = s0
        self.h = h
        self.y0 = y0
        self.Q = K.T @ P
        self.t_index = t_index

    def __call__(self, s):
        th = (s - self.s0) / self.h
        return self.y0 + self.h * (self.Q @ np.array([th, th * th, th ** 3, th ** 4]))

    def split(self, s):
        """(t, z) at integration time s."""
        w = self(s)
        if self.t_index is None:
            return s, w
        return w[self.t_index], w[:self.t_index]

    @property
    def s1(self):
        return self.s0 + self.h


def locate_event(segment, predicate, lo=None, hi=None, max_iter=200):
    """Bisection for the first root of predicate(t, z) on a dense segment.

    Requires predicate < 0 at lo and >= 0 at hi. Stops once the bracket is
    at most 1e-12 * max(1, |t|) wide in t.
    """
    lo = segment.s0 if lo is None else lo
    hi = segment.s1 if hi is None else hi
    t_lo, z_lo = segment.split(lo)
    t_hi, z_hi = segment.split(hi)
    if not (predicate(t_lo, z_lo) < 0 <= predicate(t_hi, z_hi)):
        raise EventNotFound("predicate does not change sign on the segment")
    for _ in range(max_iter):
        if abs(t_hi - t_lo) <= 1e-12 * max(1.0, abs(t_hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        t_m, z_m = segment.split(mid)
        if predicate(t_m, z_m) < 0:
            lo, t_lo = mid, t_m
        else:
            hi, t_hi = mid, t_m
    return hi


def _builtin_events(frame, opts):
    """(name, termination, fn) triples; each fires when fn crosses zero upward."""
    tag = frame.tag
    out = []
    if math.isfinite(opts.max_t):
        out.append(("max_t", "ReachedMaxT", lambda t, z: t - opts.max_t))
    if tag in ("FullXYTau2", "FullXYS"):
        out.append(("extinction", "Extinction", lambda t, z: opts.min_x - z[0]))
        if math.isfinite(opts.max_g):
            out.append(("max_g", "ReachedMaxG", lambda t, z: np.cbrt(z[0] * z[1] * z[1]) - opts.max_g))
        if math.isfinite(opts.max_warp):
            out.append(("warp", "WarpCeiling", lambda t, z: z[1] / z[0] - opts.max_warp))
    elif tag == "ShrinkerABG":
        out.append(("extinction", "Extinction", lambda t, z: z[2] * opts.min_x - 1.0))
        if math.isfinite(opts.max_g):
            out.append(("max_g", "ReachedMaxG",
                        lambda t, z: np.cbrt(z[1] / (z[2] * z[2] + 1e-300)) - opts.max_g))
        if math.isfinite(opts.max_warp):
            out.append(("warp", "WarpCeiling", lambda t, z: math.sqrt(z[1] * z[2]) - opts.max_warp))
    return out


def _numpy_stepper(f, domain_ok, rtol, atol):
    def step(w, h, k1):
        K = np.empty((7, len(w)))
        K[0] = k1
        try:
            for i in range(1, 6):
                wi = w + h * (np.dot(A[i], K[:i]))
                if not domain_ok(wi):
                    return False, None, None, math.inf
                K[i] = f(wi)
            w_new = w + h * np.dot(B, K[:6])
            if not domain_ok(w_new):
                return False, None, None, math.inf
            K[6] = f(w_new)
        except (DomainError, ZeroDivisionError, OverflowError, FloatingPointError):
            return False, None, None, math.inf
        sc = atol + rtol * np.maximum(np.abs(w), np.abs(w_new))
        err = math.sqrt(float(np.mean((h * np.dot(E, K) / sc) ** 2)))
        return math.isfinite(err), w_new, K, err
    return step


def _kernel_stepper(lam, x_ref, rtol, atol):
    from ._kernel import dopri_full_regular

    def step(w, h, k1):
        ok, w_new, K, err = dopri_full_regular(w, h, k1, lam, x_ref, rtol, atol)
        return ok, w_new, K, err
    return step


def integrate(initial, frame, params, opts=None, t0=None, events=()):
    """Integrate frame from an initial state.

    initial is a SolitonState (full frame) or a sequence of frame
    coordinates with t0 given separately. Returns a Trajectory; failures are
    reported through its termination field rather than raised.
    """
    opts = opts or IntegratorOptions()
    lam = float(getattr(params, "lam", params))
    params = params if isinstance(params, SolitonParams) else SolitonParams(lam)
    if hasattr(initial, "tau2"):
        t_start = float(initial.t)
        z0 = np.array([initial.x, initial.y, initial.tau2], dtype=float)
        if frame.tag == "FullXYS":
            z0 = np.array(odesys.full_to_xys(*z0))
    else:
        t_start = 0.0 if t0 is None else float(t0)
        z0 = np.array(initial, dtype=float)
    if len(z0) != frame.dim:
        raise DomainError(f"{frame.tag} needs {frame.dim} coordinates")
    if not odesys.in_domain(frame, z0):
        raise DomainError("initial state outside the frame domain")

    regular = opts.regularize and frame.tag in ("FullXYTau2", "FullXYS")
    dim = frame.dim
    x_ref = 1e-3 * max(1.0, abs(z0[1])) if regular else None

    def f(w):
        if regular:
            z = w[:dim]
            fz = odesys.rhs(frame, z, lam)
            rho = z[0] / (z[0] + x_ref)
            return np.array([rho * fz[0], rho * fz[1], rho * fz[2], rho])
        return np.array(odesys.rhs(frame, w, lam), dtype=float)

    def domain_ok(w):
        return odesys.in_domain(frame, w[:dim] if regular else w)

    if regular and frame.tag == "FullXYTau2":
        step = _kernel_stepper(lam, x_ref, opts.rtol, opts.atol)
    else:
        step = _numpy_stepper(f, domain_ok, opts.rtol, opts.atol)

    # In the regularised case s is a per-step local time; t lives in w.
    w = np.append(z0, t_start) if regular else z0.copy()
    t_index = dim if regular else None
    checks = _builtin_events(frame, opts)
    user = [(ev.name, "EventStop" if ev.terminal else None, ev.fn) for ev in events]
    all_events = checks + user

    ts = [t_start]
    zs = [z0.copy()]
    log = []
    stats = {"steps": 0, "rejected": 0, "fev": 0}

    def record(t, z):
        # near extinction t stops advancing in binary64; keep the newest state
        if t > ts[-1]:
            ts.append(t)
            zs.append(z)
        else:
            zs[-1] = z

    def finish(term):
        return Trajectory(frame, params, np.array(ts), np.array(zs), log, term, opts, stats)

    for name, term, fn in all_events:
        if term and fn(t_start, z0) >= 0:
            log.append((t_start, name))
            return finish(term)

    try:
        k1 = f(w)
    except DomainError:
        log.append((t_start, "rhs_failure"))
        return finish("StepFailure")
    stats["fev"] += 1
    # Initial step (Hairer, Norsett & Wanner, II.4)
    sc = opts.atol + opts.rtol * np.abs(w)
    d0 = math.sqrt(float(np.mean((w / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((k1 / sc) ** 2)))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    try:
        k2 = f(w + h * k1)
        d2 = math.sqrt(float(np.mean(((k2 - k1) / sc) ** 2))) / h
        h1 = max(1e-6, h * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** (1 / ORDER)
        h = min(100 * h, h1)
    except DomainError:
        h *= 0.01

    tiny = 4 * np.finfo(float).eps
    err_old = 1e-4
    s = 0.0 if regular else t_start
    t_old, z_old = t_start, z0
    while True:
        if stats["steps"] >= opts.max_steps:
            log.append((ts[-1], "max_steps"))
            return finish("StepFailure")
        # regularised: w carries t, so this also means t has stopped moving;
        # otherwise compare h with s alone, as the field may vanish at a fixed point
        stalled = (np.all(np.abs(h * k1) <= tiny * np.abs(w)) if regular
                   else h <= tiny * max(1.0, abs(s)))
        if stalled:
            log.append((ts[-1], "step_underflow"))
            return finish("StepFailure")
        ok, w_new, K, err = step(w, h, k1)
        stats["fev"] += 6
        if not ok:
            stats["rejected"] += 1
            h *= 0.25
            continue
        fac11 = err ** PI_ALPHA
        if err > 1.0:
            stats["rejected"] += 1
            h /= min(1 / FAC_MIN, fac11 / SAFETY)
            continue
        fac = fac11 / err_old ** PI_BETA
        fac = max(1 / FAC_MAX, min(1 / FAC_MIN, fac / SAFETY))
        h_next = h / fac
        err_old = max(err, 1e-4)
        stats["steps"] += 1

        if regular:
            t_new, z_new = w_new[dim], w_new[:dim]
        else:
            t_new, z_new = s + h, w_new
        hit = None
        seg = None
        for name, term, fn in all_events:
            if fn(t_old, z_old) < 0 <= fn(t_new, z_new):
                if seg is None:
                    seg = DenseSegment(s, h, w, K, t_index)
                try:
                    s_e = locate_event(seg, fn)
                except EventNotFound:
                    s_e = s + h
                if hit is None or s_e < hit[0]:
                    hit = (s_e, name, term)
        if hit is not None:
            s_e, name, term = hit
            t_e, z_e = seg.split(s_e)
            t_e = float(t_e)
            if name == "max_t":
                t_e = opts.max_t
            if term is not None or t_e < t_new:
                record(t_e, np.array(z_e, dtype=float))
            log.append((t_e, name))
            if term is not None:
                return finish(term)
        record(float(t_new), z_new.copy())
        t_old, z_old = t_new, z_new
        w = w_new
        s = 0.0 if regular else s + h
        k1 = K[6].copy()
        h = h_next
