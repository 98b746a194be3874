"""
The ten acceptance criteria, each at its stated tolerance and runtime.

Every test records one PASS/FAIL line; the lines are printed together in the
pytest terminal summary. Criterion 10 is not attainable from its prescribed
start and is a strict xfail; see test_c10_companion_stable_manifold for what
does hold.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from sp2soliton import explicit, integrate as I, limitdyn, odesys
from sp2soliton.classify import (classify, default_run_options,
                                 exp_shrinker_check, monitor_invariants, printed_rate2_forms)
from sp2soliton.core import SolitonParams, SolitonState, rate2_coefficients
from sp2soliton.lmap import lmap_eval, lmap_inverse, lmap_sweep
from sp2soliton.series import initial_state, smooth_closing_coeffs


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.dt = time.perf_counter() - self.t0


def test_c01_explicit_residuals(record):
    refs = [explicit.gaussian(-1), explicit.gaussian(0), explicit.gaussian(1),
            explicit.explicit_shrinker(1.5), explicit.fowdar(-1.0), explicit.expander_limit(1.0, 1.0)]
    with Timer() as tm:
        worst = max(explicit.max_residual(r) for r in refs)
    ok = worst < 1e-12 and tm.dt < 1.0
    record(1, ok, f"max scaled residual {worst:.2e}, {tm.dt:.2f} s")
    assert ok


def _printed(lam, b):
    b2 = b * b
    return {
        "x3": -(4 * lam * b2 + 9) / (54 * b2),
        "y2": (2 * lam * b2 + 9) / (36 * b),
        "tau2_1": Fraction(2 * lam) * b2 / 9,
        "tau2_3": -Fraction(2 * lam) * (4 * b2 * lam + 9) / 1215,
        "tau1_3": Fraction(-4 * lam, 9),
        "tau1_5": Fraction(2 * lam) * (26 * b2 * lam + 81) / (405 * b2),
        "u_1": Fraction(-7 * lam, 9),
        "u_3": Fraction(4 * lam) * (13 * b2 * lam + 63) / (1215 * b2),
    }


def test_c02_series_coefficients(record):
    bad = []
    with Timer() as tm:
        for lam, b in [(1, Fraction(1)), (-1, Fraction(3, 2)), (2, Fraction(1, 2))]:
            s = smooth_closing_coeffs(lam, b, 20)
            t1, u = s.tau1_coeffs(), s.u_coeffs()
            got = {"x3": s.x_coeffs[3], "y2": s.y_coeffs[2], "tau2_1": s.tau2_coeffs[1],
                   "tau2_3": s.tau2_coeffs[3], "tau1_3": t1[3], "tau1_5": t1[5],
                   "u_1": u[1], "u_3": u[3]}
            for k, v in _printed(lam, b).items():
                if not (isinstance(got[k], Fraction) and got[k] == v):
                    bad.append((lam, b, k, got[k], v))
        s = smooth_closing_coeffs(-1, Fraction(3, 2), 20)
        x_is_t = list(s.x_coeffs) == [0, 1] + [0] * 19
    ok = not bad and x_is_t and tm.dt < 1.0
    record(2, ok, f"{24 - len(bad)}/24 printed coefficients exact, x = t: {x_is_t}, {tm.dt:.2f} s")
    assert ok, bad


def test_c03_shrinker_cone_recovery(record):
    with Timer() as tm:
        end, traj = classify(-1, Fraction(3, 2))
    ok = end.kind == "AC"
    if ok:
        ell = end.fields["ell"]
        s_end = end.diagnostics["S_at_window_end"]
        kx = end.diagnostics["rate_minus_2"]["k_x"]
        ok = abs(ell - 0.5) < 1e-4 and abs(s_end - 2.25) < 1e-6 and abs(kx) < 1e-3 and tm.dt < 5
        detail = (f"AC, |ell-1/2| = {abs(ell - 0.5):.1e}, |S-9/4| = {abs(s_end - 2.25):.1e} "
                  f"at t = {end.evidence_window['t'][1]:.2f}, |k_x| = {abs(kx):.1e}, {tm.dt:.2f} s")
    else:
        detail = f"classified {end.kind}"
    record(3, ok, detail)
    assert ok


def test_c04_expander_completeness_invariants(record):
    rows = []
    with Timer() as tm:
        for q in (0.1, 1.0, 10.0):
            tr = I.integrate(initial_state(1.0, math.sqrt(q)), odesys.FULL, SolitonParams(1.0),
                             I.IntegratorOptions(max_g=1e3))
            rep = monitor_invariants(tr, tol=1e-8)
            ext = sum(1 for _, n in tr.events if n == "extinction")
            rows.append((q, tr.termination, ext, rep.ok, sum(rep.counts.values())))
    ok = all(term == "ReachedMaxG" and ext == 0 and good for _, term, ext, good, _ in rows)
    ok = ok and tm.dt < 30
    record(4, ok, f"{[(q, t, n) for q, t, _, _, n in rows]} (q, end, violations), {tm.dt:.1f} s")
    assert ok


def test_c05_lmap_properties(record):
    grid = [0.1, 0.5, 1, 2, 5, 10, 30]
    with Timer() as tm:
        sweep = lmap_sweep(grid)
        small = lmap_eval(0.01)
        inv = lmap_inverse(2.0)
    ells = [p.ell for p in sweep.points]
    inc = all(b > a for a, b in zip(ells, ells[1:])) and sweep.monotone
    above1 = all(l > 1 for l in ells)
    bound = all(l * l > q / 3 - 0.5 for q, l in zip(grid, ells))
    ok = inc and above1 and bound and small.ell < 1.1 and abs(inv.ell - 2) < 1e-3 and tm.dt < 120
    record(5, ok, f"increasing {inc}, ell > 1 {above1}, ell^2 > q/3 - 1/2 {bound}, "
                  f"ell(0.01) = {small.ell:.6f}, L(L^-1(2)) - 2 = {inv.ell - 2:.1e}, {tm.dt:.0f} s")
    assert ok


def test_c06_rate_minus_2(record):
    with Timer() as tm:
        end, traj = classify(1, 1.0)
    rep = end.diagnostics["rate_minus_2"]
    ell = end.fields["ell"]
    xs, zs = rate2_coefficients(ell, 1.0)
    ex = abs(rep["k_x"] - xs) / abs(xs)
    ey = abs(rep["k_y"] - zs) / abs(zs)
    ok = end.kind == "AC" and ex < 0.03 and ey < 0.03 and tm.dt < 10
    px, pz = printed_rate2_forms(ell, 1.0)
    record(6, ok, f"k_x = {rep['k_x']:.6f} vs {xs:.6f}, k_y = {rep['k_y']:.6f} vs {zs:.6f} "
                  f"(rel {ex:.1e}, {ey:.1e}); as printed: {px:.6f}, {pz:.6f}; {tm.dt:.1f} s")
    assert ok


def test_c07_limit_system(record):
    lam = -1.0
    with Timer() as tm:
        a, b = limitdyn.fixed_point(lam)
        res = max(abs(v) for v in odesys.shrinker_limit_field(a, b, lam))
        ev = sorted(np.linalg.eigvals(limitdyn.jacobian_fd(a, b, lam)), key=lambda z: z.imag)
        re = 5 * math.sqrt(-2 * lam) / 12
        im = math.sqrt(-46 * lam) / 12
        ref = [complex(re, -im), complex(re, im)]
        eig_err = max(abs(p - q) for p, q in zip(ev, ref))
        rep = limitdyn.boundary_no_entry_check(lam, 1000)
        pts = limitdyn.sample_region_R(lam, 10_000, np.random.default_rng(7))
        div_min = float(np.min(limitdyn.divergence(pts[:, 0], pts[:, 1], lam)))
    ok = res < 1e-15 and eig_err < 1e-8 and rep.ok and div_min > 0 and tm.dt < 10
    record(7, ok, f"fixed point residual {res:.1e}, eigenvalue error {eig_err:.1e}, "
                  f"no-entry {rep.ok}, min div {div_min:.3f}, {tm.dt:.1f} s")
    assert ok


def perturbation_grid(n=20):
    """Smoothly-closing (lam=1, b=1) state at t0=0.5, y scaled by s and tau2 shifted by d."""
    base = initial_state(1.0, 1.0, t0=0.5)
    for s in np.linspace(0.8, 1.2, n):
        for d in np.linspace(-1.0, 6.0, n):
            yield SolitonState(base.t, base.x, base.y * s, base.tau2 + d)


@pytest.mark.filterwarnings("ignore:t0=0.5 exceeds")
def test_c08_trichotomy_coverage(record):
    kinds = {}
    worst = 0.0
    with Timer() as tm:
        for st in perturbation_grid(20):
            end, _ = classify(1.0, initial=st, run_opts=default_run_options(1.0))
            kinds[end.kind] = kinds.get(end.kind, 0) + 1
            if end.kind == "Extinction":
                worst = max(worst, end.diagnostics["tt1_rel_err"])
    covered = (kinds.get("AC", 0) + kinds.get("Extinction", 0)) / 400
    ok = covered >= 0.95 and worst < 0.05 and tm.dt < 300
    record(8, ok, f"{kinds}, coverage {covered:.1%}, worst tt1 vs -3a^2/2 {worst:.1e}, "
                  f"{tm.dt:.0f} s")
    assert ok


def test_c09_frame_consistency(record):
    gaps = odesys.frame_consistency(1000, np.random.default_rng(2024))
    ok = max(gaps.values()) < 1e-10
    record(9, ok, ", ".join(f"{k} {v:.1e}" for k, v in gaps.items()))
    assert ok


def run_c10(start):
    lam = -1.0
    bs = limitdyn.beta_star(lam)
    opts = I.IntegratorOptions(rtol=1e-11, atol=1e-13, max_t=200.0)
    gamma_small = I.Event("gamma_small", lambda t, z: 1e-6 - z[2])
    tr = I.integrate(start, odesys.SHRINKER_ABG, SolitonParams(lam), opts, t0=0.0,
                     events=(gamma_small,))
    ok, dist, gm = exp_shrinker_check(tr)
    return ok, dist, gm, tr, bs


@pytest.mark.xfail(strict=True, reason="the prescribed start is off the stable manifold of the "
                                        "fixed point; the run blows up instead of converging")
def test_c10_shrinker_exotic_end(record):
    bs = limitdyn.beta_star(-1.0)
    with Timer() as tm:
        ok, dist, gm, tr, _ = run_c10((-0.74, 1.01 * bs, 1e-3))
    ok = ok and tm.dt < 10
    record(10, ok, f"from (-0.74, 1.01 beta*, 1e-3): {tr.termination} at t = {tr.t[-1]:.2f}, "
                   f"distance {dist:.2e}, gamma {gm:.2e} (expected failure, see ledger)")
    assert ok


def test_c10_companion_stable_manifold():
    """The same target is reached from the gamma = 1e-3 point on the stable manifold."""
    start = limitdyn.stable_manifold_point(-1.0, 1e-3)
    assert abs(start[0] + 0.74) < 0.02 and abs(start[1] / limitdyn.beta_star(-1.0) - 1.01) < 0.01
    ok, dist, gm, tr, _ = run_c10(start)
    assert ok and dist < 1e-3 and gm < 1e-6, (tr.termination, dist, gm)
