"""
The planar shrinker limit system and its lift.

    alpha' = -2 lam beta (alpha + 2/3) + alpha (1 + 2 alpha) / (2 beta)
    beta'  = 2 (alpha + 3/4)

has a single fixed point (-3/4, beta*), beta* = sqrt(-9/(8 lam)), an unstable
spiral. The polygon R below cannot be entered from outside and carries
positive divergence, so it holds no closed orbits.

The same point with gamma = 0 is a fixed point of the full
(alpha, beta, gamma) system, where gamma = 1/x adds the stable eigenvalue
-1/(4 beta*). Full-system orbits tending to it form a single curve.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import integrate as _int
from . import odesys
from .core import DomainError, SolitonParams

ALPHA_STAR = -0.75


def _check(lam):
    if not lam < 0:
        raise DomainError("the shrinker limit system needs lambda < 0")


def beta_star(lam):
    _check(lam)
    return math.sqrt(-9.0 / (8.0 * lam))


def fixed_point(lam):
    return ALPHA_STAR, beta_star(lam)


def jacobian(alpha, beta, lam):
    """Analytic Jacobian of the limit field."""
    daa = -2 * lam * beta + (1 + 4 * alpha) / (2 * beta)
    dab = -2 * lam * (alpha + 2 / 3) - alpha * (1 + 2 * alpha) / (2 * beta * beta)
    return np.array([[daa, dab], [2.0, 0.0]])


def jacobian_fd(alpha, beta, lam, h=1e-6):
    """Central-difference Jacobian, scaled steps."""
    J = np.empty((2, 2))
    z = np.array([alpha, beta])
    for j in range(2):
        dz = np.zeros(2)
        dz[j] = h * max(1.0, abs(z[j]))
        fp = np.array(odesys.shrinker_limit_field(*(z + dz), lam))
        fm = np.array(odesys.shrinker_limit_field(*(z - dz), lam))
        J[:, j] = (fp - fm) / (2 * dz[j])
    return J


def linearization_eigenvalues(lam):
    """(5 sqrt(-2 lam) +- sqrt(46 lam)) / 12; sqrt(46 lam) is imaginary."""
    _check(lam)
    re = 5 * math.sqrt(-2 * lam) / 12
    im = math.sqrt(-46 * lam) / 12
    return complex(re, im), complex(re, -im)


def divergence(alpha, beta, lam):
    return (1 + 4 * alpha - 4 * lam * beta * beta) / (2 * beta)


# region R -------------------------------------------------------------------

A_LEFT = Fraction(-1)
A_RIGHT = Fraction(-21, 32)
B_FLOOR = Fraction(27, 32)          # times beta*
DIAG = Fraction(201, 32)            # 3 beta - 5 beta* alpha >= DIAG beta*
EDGE_RTOL = 1e-14


@dataclass(frozen=True)
class RegionR:
    beta_star: float

    @classmethod
    def for_lambda(cls, lam):
        return cls(beta_star(lam))

    @property
    def corners(self):
        bs = self.beta_star
        return ((-1.0, float(B_FLOOR) * bs), (-0.75, float(B_FLOOR) * bs), (float(A_RIGHT), bs))

    def contains(self, alpha, beta, rtol=EDGE_RTOL):
        """Closed membership; rtol absorbs the rounding of corners that sit on an edge."""
        bs = self.beta_star
        return bool(float(A_LEFT) - rtol <= alpha <= float(A_RIGHT) + rtol
                    and beta >= float(B_FLOOR) * bs * (1 - rtol)
                    and 3 * beta - 5 * bs * alpha >= float(DIAG) * bs * (1 - rtol))

    def edges(self, beta_max):
        """(name, start, end, inward unit normal); the two vertical edges run up to beta_max."""
        (a0, b0), (a1, b1), (a2, b2) = self.corners
        bs = self.beta_star
        n_diag = np.array([-5 * bs, 3.0]) / math.hypot(5 * bs, 3.0)
        return (
            ("alpha=-1", (a0, b0), (a0, beta_max), np.array([1.0, 0.0])),
            ("beta=27/32 beta*", (a0, b0), (a1, b1), np.array([0.0, 1.0])),
            ("diagonal", (a1, b1), (a2, b2), n_diag),
            ("alpha=-21/32", (a2, b2), (a2, beta_max), np.array([-1.0, 0.0])),
        )


def in_region_R(alpha, beta, lam):
    return RegionR.for_lambda(lam).contains(alpha, beta)


@dataclass
class NoEntryReport:
    ok: bool
    worst_margin: float               # largest inward flow component found (<= tol passes)
    per_edge: dict
    failures: list
    left_edge_bound: float            # max d(alpha)/dt on alpha = -1
    left_edge_corner_value: float     # its value at the corner, -139/(3456 beta*)
    samples_per_edge: int


def boundary_no_entry_check(lam, n_samples=1000, beta_max_factor=100.0, tol=1e-10):
    """Sample each edge of R and verify the flow never points inward beyond tol."""
    if n_samples < 100:
        raise DomainError("need at least 100 samples per edge")
    R = RegionR.for_lambda(lam)
    bs = R.beta_star
    per_edge = {}
    failures = []
    worst = -math.inf
    left_max = -math.inf
    for name, p, q, n_in in R.edges(beta_max_factor * bs):
        s = np.linspace(0.0, 1.0, n_samples)
        a = p[0] + s * (q[0] - p[0])
        b = p[1] + s * (q[1] - p[1])
        da, db = odesys.shrinker_limit_field(a, b, lam)
        inward = n_in[0] * da + n_in[1] * db
        if name == "alpha=-1":
            left_max = float(np.max(da))
        i = int(np.argmax(inward))
        per_edge[name] = {"max_inward": float(inward[i]), "at": (float(a[i]), float(b[i]))}
        worst = max(worst, float(inward[i]))
        for k in np.nonzero(inward > tol)[0][:10]:
            failures.append({"edge": name, "alpha": float(a[k]), "beta": float(b[k]),
                             "inward": float(inward[k])})
    corner = odesys.shrinker_limit_field(-1.0, float(B_FLOOR) * bs, lam)[0]
    return NoEntryReport(not failures, worst, per_edge, failures, left_max, float(corner),
                         n_samples)


def sample_region_R(lam, n, rng=None, beta_max_factor=100.0):
    """n uniform points of R truncated at beta_max (rejection sampling)."""
    rng = np.random.default_rng(rng)
    R = RegionR.for_lambda(lam)
    bs = R.beta_star
    out = []
    while len(out) < n:
        a = rng.uniform(-1.0, float(A_RIGHT), 2 * n)
        b = rng.uniform(float(B_FLOOR) * bs, beta_max_factor * bs, 2 * n)
        keep = (3 * b - 5 * bs * a >= float(DIAG) * bs)
        out.extend(zip(a[keep], b[keep]))
    return np.array(out[:n])


# limit trichotomy -------------------------------------------------------------

LIMIT_KINDS = ("ConvergesToACBranch", "FixedPoint", "FiniteTimeAlphaBlowup", "Inconclusive")


@dataclass(frozen=True)
class LimitOptions:
    max_t: float = 200.0
    alpha_blowup: float = 1e6
    branch_factor: float = 50.0      # beta > branch_factor beta* starts the branch test
    decade: float = 10.0
    stability_tol: float = 0.05      # relative change of beta (alpha + 2/3) over the decade
    fixed_tol: float = 1e-12
    rtol: float = 1e-11
    atol: float = 1e-13


@dataclass
class LimitOutcome:
    kind: str
    t_end: float
    diagnostics: dict = field(default_factory=dict)


def classify_limit(initial, lam, opts=None):
    opts = opts or LimitOptions()
    a0, b0 = map(float, initial)
    if not b0 > 0:
        raise DomainError("beta must be positive")
    bs = beta_star(lam)
    if math.hypot(a0 - ALPHA_STAR, b0 - bs) <= opts.fixed_tol:
        return LimitOutcome("FixedPoint", math.inf, {"distance": math.hypot(a0 + 0.75, b0 - bs)})
    b_stop = opts.branch_factor * opts.decade * bs
    events = (
        _int.Event("alpha_blowup", lambda t, z: z[0] - opts.alpha_blowup),
        # alpha blow-up drags beta up too; the branch keeps alpha near -2/3
        _int.Event("beta_decade", lambda t, z: z[1] - b_stop if z[0] < 0 else -1.0),
    )
    run = _int.IntegratorOptions(rtol=opts.rtol, atol=opts.atol, max_t=opts.max_t)
    tr = _int.integrate((a0, b0), odesys.SHRINKER_LIMIT, SolitonParams(lam), run, t0=0.0,
                        events=events)
    t = tr.t
    a, b = tr.z[:, 0], tr.z[:, 1]
    diag = {"termination": tr.termination, "alpha_end": float(a[-1]), "beta_end": float(b[-1])}
    fired = tr.events[-1][1] if tr.events else None
    if fired == "alpha_blowup":
        return LimitOutcome("FiniteTimeAlphaBlowup", float(t[-1]), diag)
    if fired == "beta_decade":
        i = int(np.searchsorted(b, opts.branch_factor * bs))
        m = b >= opts.branch_factor * bs
        inv = b * (a + 2 / 3)
        if i < len(b) and np.all(np.diff(b[m]) > 0):
            lo, hi = float(inv[i]), float(inv[-1])
            drift = abs(hi - lo) / max(abs(hi), 1e-300)
            diag.update({"beta_alpha_plus_2_3": [lo, hi], "relative_drift": drift})
            if drift < opts.stability_tol:
                return LimitOutcome("ConvergesToACBranch", float(t[-1]), diag)
    if tr.termination == "StepFailure" and a[-1] > 0 and a[-1] > 10 * abs(a[0]):
        diag["note"] = "step size collapsed while alpha grew"
        return LimitOutcome("FiniteTimeAlphaBlowup", float(t[-1]), diag)
    diag["reason"] = "no blow-up and no settled large-beta branch within max_t"
    return LimitOutcome("Inconclusive", float(t[-1]), diag)


def unstable_circle(lam, radius=1e-3, n=16):
    """Starting points on a small circle around the fixed point."""
    a, b = fixed_point(lam)
    th = np.linspace(0, 2 * math.pi, n, endpoint=False)
    return np.column_stack([a + radius * np.cos(th), b + radius * np.sin(th)])


# lifts ----------------------------------------------------------------------

def lift_fixed_point(lam, t, x0=4.0):
    """Constant (alpha, beta) = (-3/4, beta*) lifted by (log x)' = -(2 alpha + 1)/(2 beta).

    Returns (x, y, tau2) with y^2 = beta x and tau2 = alpha x. With x0 = 4
    this is the explicit exponential solution of the rescaling limit.
    """
    a, b = fixed_point(lam)
    rate = -(2 * a + 1) / (2 * b)
    x = x0 * np.exp(rate * np.asarray(t, dtype=float))
    return x, np.sqrt(b * x), a * x


def lift_trajectory(traj, x0=1.0):
    """Lift a sampled (alpha, beta) trajectory by trapezoidal quadrature of (log x)'."""
    a, b = traj.z[:, 0], traj.z[:, 1]
    r = -(2 * a + 1) / (2 * b)
    logx = np.concatenate([[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(traj.t))])
    x = x0 * np.exp(logx)
    return traj.t, x, np.sqrt(b * x), a * x


# phase portrait ---------------------------------------------------------------

PHASE_HEADER = "alpha,beta,dalpha,dbeta"


def phase_grid(lam, n_alpha=50, n_beta=50, alpha_range=(-1.5, 0.5), beta_range=None):
    bs = beta_star(lam)
    if beta_range is None:
        beta_range = (0.1 * bs, 3.0 * bs)
    A, B = np.meshgrid(np.linspace(*alpha_range, n_alpha), np.linspace(*beta_range, n_beta),
                       indexing="ij")
    dA, dB = odesys.shrinker_limit_field(A.ravel(), B.ravel(), lam)
    return np.column_stack([A.ravel(), B.ravel(), dA, dB])


def phase_trajectories(lam, starts, t_max=20.0):
    out = []
    for s in starts:
        tr = _int.integrate(tuple(s), odesys.SHRINKER_LIMIT, SolitonParams(lam),
                            _int.IntegratorOptions(max_t=t_max, rtol=1e-9, atol=1e-12), t0=0.0,
                            events=(_int.Event("escape", lambda t, z: abs(z[0]) - 1e3),))
        out.append(tr)
    return out


# full (alpha, beta, gamma) system near the fixed point ----------------------------

def abg_jacobian(lam, h=1e-7):
    """Central-difference Jacobian of the (alpha, beta, gamma) field at (-3/4, beta*, 0)."""
    a, b = fixed_point(lam)
    z = np.array([a, b, 0.0])
    J = np.empty((3, 3))
    for j in range(3):
        dz = np.zeros(3)
        dz[j] = h
        zm = z - dz
        if j == 2:
            # gamma must stay >= 0: one-sided second-order difference
            f0 = np.array(odesys.abg_field(*z, lam))
            f1 = np.array(odesys.abg_field(*(z + dz), lam))
            f2 = np.array(odesys.abg_field(*(z + 2 * dz), lam))
            J[:, j] = (-3 * f0 + 4 * f1 - f2) / (2 * h)
            continue
        J[:, j] = (np.array(odesys.abg_field(*(z + dz), lam))
                   - np.array(odesys.abg_field(*zm, lam))) / (2 * h)
    return J


def stable_direction(lam):
    """Eigenvector of the stable eigenvalue -1/(4 beta*), normalised to gamma = 1."""
    J = abg_jacobian(lam)
    w, V = np.linalg.eig(J)
    k = int(np.argmin(w.real))
    v = V[:, k].real
    return float(w[k].real), v / v[2]


def stable_manifold_point(lam, gamma0=1e-3, seed=1e-8, rtol=1e-12, atol=1e-14):
    """Point with gamma = gamma0 on the orbit that tends to (-3/4, beta*, 0).

    Found by integrating backwards in time from the linear stable direction,
    along which the backward flow is expanding.
    """
    from scipy.integrate import solve_ivp

    a, b = fixed_point(lam)
    _, v = stable_direction(lam)
    z0 = np.array([a, b, 0.0]) + seed * v

    def back(t, z):
        return [-c for c in odesys.abg_field(z[0], z[1], max(z[2], 0.0), lam)]

    hit = lambda t, z: z[2] - gamma0
    hit.terminal = True
    sol = solve_ivp(back, (0.0, 1e4), z0, method="DOP853", rtol=rtol, atol=atol, events=hit)
    if not sol.t_events[0].size:
        raise RuntimeError("backward shot did not reach gamma0")
    return sol.y_events[0][0]


def ac_branch_backward(lam, beta0_factor=50.0, t_back=2000.0, rtol=1e-12, atol=1e-14):
    """The large-beta branch traced backwards in time from beta0 = beta0_factor beta*.

    Forwards the branch repels at rate about 2|lam| beta, so it cannot be
    reached by shooting; backwards it attracts. The start uses
    alpha + 2/3 ~ 1/(18 lam beta^2). Returns (t, alpha, beta) with t <= 0,
    sampled densely, ending when the orbit is within 1e-8 of the fixed point.
    """
    from scipy.integrate import solve_ivp

    a_s, b_s = fixed_point(lam)
    b0 = beta0_factor * b_s
    z0 = [-2.0 / 3.0 + 1.0 / (18.0 * lam * b0 * b0), b0]

    def back(t, z):
        return [-c for c in odesys.shrinker_limit_field(z[0], z[1], lam)]

    near = lambda t, z: math.hypot(z[0] - a_s, z[1] - b_s) - 1e-8
    near.terminal = True
    sol = solve_ivp(back, (0.0, t_back), z0, method="DOP853", rtol=rtol, atol=atol,
                    events=near, dense_output=True)
    t = np.linspace(0.0, sol.t[-1], 4000)
    a, b = sol.sol(t)
    return -t, a, b
