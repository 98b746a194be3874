import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sp2soliton import odesys
from sp2soliton.core import (DomainError, SolitonParams, SolitonState, alpha_fn, cone_from_ell,
                             cone_torsion, derive, derived_arrays, rate2_coefficients,
                             rate2_coefficients_closed, s_star, warp_correction)

pos = st.floats(0.05, 20.0)
lam_s = st.floats(-2.0, 2.0)


def test_params_kind_and_domain():
    assert SolitonParams(1.0).kind == "expander"
    assert SolitonParams(-1.0).kind == "shrinker"
    assert SolitonParams(0.0).kind == "steady"
    with pytest.raises(DomainError):
        SolitonParams(math.nan)
    with pytest.raises(DomainError):
        SolitonState(0.0, math.inf, 1.0, 0.0)


def test_derive_rejects_nonpositive_scales():
    with pytest.raises(DomainError):
        derive(SolitonState(1.0, 0.0, 1.0, 0.0), SolitonParams(1.0))


def test_gaussian_derived_values():
    # x = y = t/2, tau2 = 0: S = 0, u = -lam t/3, tt1 = lam t^3 / 12
    q = derive(SolitonState(2.0, 1.0, 1.0, 0.0), SolitonParams(1.0))
    assert q.S == 0.0
    assert q.u == pytest.approx(-2.0 / 3.0, rel=1e-15)
    assert q.tt1 == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert q.g == pytest.approx(1.0, rel=1e-15)


def test_explicit_shrinker_s_is_nine_quarters():
    # x = t, y^2 = 9/4 + t^2/4, tau2 = -t/2 along the explicit shrinker
    for t in (0.1, 1.0, 7.0):
        q = derive(SolitonState(t, t, math.sqrt(2.25 + t * t / 4), -t / 2), SolitonParams(-1.0))
        assert q.S == pytest.approx(2.25, rel=1e-14)


@given(pos, pos, st.floats(-5, 5), lam_s)
@settings(max_examples=300, deadline=None)
def test_m_over_g3_and_log_warp_rates(x, y, tau2, lam):
    """d/dt(M/g^3) = -3x/y^4 and d/dt log(y/x) = -S/g^3 along the full field."""
    dx, dy, dt2 = odesys.full_field(x, y, tau2, lam)
    q = derived_arrays(x, y, tau2, lam)
    g3 = x * y * y
    # M/g^3 = 3/(y^2) + tt1/g^3, differentiated by hand
    R1 = lam * x * y * y - 3 * tau2
    dR1 = lam * (dx * y * y + 2 * x * y * dy) - 3 * dt2
    d = x * x + 2 * y * y
    dd = 2 * x * dx + 4 * y * dy
    tt1 = 2 * x * x * R1 / d
    dtt1 = (4 * x * dx * R1 + 2 * x * x * dR1) / d - tt1 * dd / d
    dg3 = dx * y * y + 2 * x * y * dy
    rate = (3 * dx + dtt1) / g3 - q["M"] * dg3 / (g3 * g3)
    scale = max(1.0, abs(3 * dx / g3), abs(dtt1 / g3), abs(q["M"] * dg3 / g3 ** 2))
    assert abs(rate + 3 * x / y ** 4) <= 1e-11 * scale
    lw = dy / y - dx / x
    assert abs(lw + q["S"] / g3) <= 1e-11 * max(1.0, abs(dy / y), abs(dx / x))


@given(st.floats(0.05, 50.0), st.floats(0.05, 50.0))
def test_alpha_strictly_increasing(a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    if hi - lo < 1e-9 * hi:
        return
    assert alpha_fn(hi) > alpha_fn(lo)


def test_alpha_values():
    assert alpha_fn(1.0) == 0.0
    assert alpha_fn(0.5) == pytest.approx(-2.25, rel=1e-15)   # (1/4 - 1) 36 / 12
    with pytest.raises(DomainError):
        alpha_fn(0.0)


@given(st.floats(0.05, 20.0))
def test_cone_equation(ell):
    c = cone_from_ell(ell)
    assert abs(c.equation_residual()) <= 1e-12 * max(1.0, c.c1 * c.c2 ** 2)
    assert c.c2 / c.c1 == pytest.approx(ell, rel=1e-14)


def test_cone_special_values():
    c = cone_from_ell(1.0)
    assert (c.c1, c.c2) == (0.5, 0.5)
    # the torsion-free cone carries no torsion
    assert cone_torsion(c, 3.0) == (0.0, 0.0)
    c = cone_from_ell(0.5)
    assert (c.c1, c.c2) == (1.0, 0.5)
    with pytest.raises(DomainError):
        cone_from_ell(-1.0)


def test_s_star():
    assert s_star(0.5, -1.0) == 2.25
    assert s_star(1.0, 3.0) == 0.0
    with pytest.raises(DomainError):
        s_star(2.0, 0.0)


@given(st.floats(0.2, 10.0), st.one_of(st.floats(-3, -0.1), st.floats(0.1, 3)))
def test_rate2_forms_agree(ell, lam):
    a = rate2_coefficients(ell, lam)
    b = rate2_coefficients_closed(ell, lam)
    scale = max(1.0, *map(abs, a))
    assert all(abs(p - q) <= 1e-11 * scale for p, q in zip(a, b))


def test_rate2_explicit_shrinker():
    # x = t exactly on the explicit shrinker; y = sqrt(9/4 + t^2/4) = t/2 + (9/4)/t + ...
    xs, zs = rate2_coefficients(0.5, -1.0)
    assert xs == pytest.approx(0.0, abs=1e-15)
    assert zs == pytest.approx(2.25, rel=1e-14)


def test_warp_correction_matches_rate2():
    # x/y = (c1 t + xs/t)/(c2 t + zs/t) = (1/ell)(1 + (xs/c1 - zs/c2)/t^2 + ...)
    for ell, lam in [(1.3, 1.0), (0.7, -1.0), (2.5, 2.0)]:
        c = cone_from_ell(ell)
        xs, zs = rate2_coefficients(ell, lam)
        assert warp_correction(ell, lam) == pytest.approx(xs / c.c1 - zs / c.c2, rel=1e-12)
