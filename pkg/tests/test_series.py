import math
from fractions import Fraction

import numpy as np
import pytest

from sp2soliton import integrate as I, odesys
from sp2soliton.core import DomainError, SolitonParams, derive
from sp2soliton.series import (DegeneratePivot, eval_series, fit_extinction, initial_state,
                               series_residual, smooth_closing_coeffs)


def test_leading_coefficients_lambda1_b1():
    s = smooth_closing_coeffs(1, 1, 20)
    assert s.exact
    assert (s.x3, s.y2, s.tau21) == (Fraction(-13, 54), Fraction(11, 36), Fraction(2, 9))


@pytest.mark.parametrize("lam,b", [(1, Fraction(1)), (-1, Fraction(3, 2)), (2, Fraction(1, 2)),
                                   (-3, Fraction(7, 5)), (5, Fraction(2))])
def test_closed_form_leading_coefficients(lam, b):
    s = smooth_closing_coeffs(lam, b, 9)
    b2 = b * b
    assert s.x_coeffs[:2] == (0, 1) and s.y_coeffs[0] == b
    assert s.x3 == -(4 * lam * b2 + 9) / (54 * b2)
    assert s.y2 == (2 * lam * b2 + 9) / (36 * b)
    assert s.tau21 == Fraction(2 * lam) * b2 / 9


@pytest.mark.parametrize("lam,b", [(1, 1), (-1, Fraction(3, 2)), (Fraction(1, 3), 2)])
def test_parity(lam, b):
    s = smooth_closing_coeffs(lam, b, 21)
    assert all(c == 0 for c in s.x_coeffs[0::2])
    assert all(c == 0 for c in s.y_coeffs[1::2])
    assert all(c == 0 for c in s.tau2_coeffs[0::2])


def test_explicit_shrinker_series_truncates():
    s = smooth_closing_coeffs(-1, Fraction(3, 2), 25)
    assert list(s.x_coeffs) == [0, 1] + [0] * 24
    assert list(s.tau2_coeffs) == [0, Fraction(-1, 2)] + [0] * 24


def test_steady_series_has_no_tau2():
    for b in (1, Fraction(5, 2)):
        assert all(c == 0 for c in smooth_closing_coeffs(0, b, 15).tau2_coeffs)


def test_tau1_leading_term_through_derive():
    lam, t = 1.0, 1e-3
    st = eval_series(smooth_closing_coeffs(1, 1, 20), t).state
    tau1 = derive(st, SolitonParams(lam)).tau1
    assert tau1 == pytest.approx(-(4 * lam / 9) * t ** 3, rel=1e-5)


def test_float_mode_matches_exact_mode():
    ex = smooth_closing_coeffs(1, Fraction(3, 2), 20)
    fl = smooth_closing_coeffs(1.0, 1.5, 20)
    assert not fl.exact
    for a, b in zip(ex.x_coeffs + ex.y_coeffs + ex.tau2_coeffs,
                    fl.x_coeffs + fl.y_coeffs + fl.tau2_coeffs):
        assert abs(float(a) - float(b)) <= 1e-30 * max(1.0, abs(float(a)))


def test_eval_series_explicit_shrinker():
    st = eval_series(smooth_closing_coeffs(-1, Fraction(3, 2), 20), 0.1).state
    assert abs(st.x - 0.1) < 1e-10
    assert abs(st.y - math.sqrt(2.25 + 0.0025)) < 1e-10
    assert abs(st.tau2 + 0.05) < 1e-10


def test_eval_series_small_t0_limit():
    st = eval_series(smooth_closing_coeffs(1, 2, 20), 1e-9).state
    assert st.x == pytest.approx(1e-9, rel=1e-12) and st.y == pytest.approx(2.0, rel=1e-12)
    assert abs(st.tau2) < 1e-8


def test_order_self_convergence():
    a = eval_series(smooth_closing_coeffs(1, 1, 10), 0.1).state
    b = eval_series(smooth_closing_coeffs(1, 1, 20), 0.1).state
    assert max(abs(a.x - b.x), abs(a.y - b.y), abs(a.tau2 - b.tau2)) < 1e-8


@pytest.mark.parametrize("lam", [1, -1])
def test_residual_drops_with_order(lam):
    r10 = series_residual(smooth_closing_coeffs(lam, 1, 10), 0.05)
    r20 = series_residual(smooth_closing_coeffs(lam, 1, 20), 0.05)
    assert r20 * 1e3 <= r10


def test_window_warning():
    s = smooth_closing_coeffs(1, 1, 10)
    with pytest.warns(UserWarning, match="exceeds b/10"):
        out = eval_series(s, 0.5)
    assert out.warning is not None
    assert eval_series(s, 0.05).warning is None


def test_expander_initial_signs():
    for q in (0.1, 1.0, 10.0):
        st = initial_state(1.0, math.sqrt(q))
        d = derive(st, SolitonParams(1.0))
        assert d.S > 0 and st.tau2 > 0 and st.y > st.x


def test_errors():
    with pytest.raises(DomainError):
        smooth_closing_coeffs(1, 1, 2)
    with pytest.raises(DomainError):
        smooth_closing_coeffs(1, 1, 41)
    with pytest.raises(DomainError):
        smooth_closing_coeffs(1, 0, 10)
    with pytest.raises(DomainError):
        eval_series(smooth_closing_coeffs(1, 1, 5), 0.0)
    e = DegeneratePivot(7, "x_9")
    assert e.order_reached == 7 and "t^7" in str(e)


# extinction fit ---------------------------------------------------------------

def _synthetic(a=2.0, t_star=5.0, b=1.3, n=2000):
    t = np.linspace(0.0, t_star - 1e-6, n)
    x = a * np.sqrt(t_star - t)
    y = np.sqrt(b * b * 2 * a / x)      # x y^2 = 2 a b^2, the ansatz limit
    tau2 = np.zeros_like(t)
    return I.Trajectory(odesys.FULL, SolitonParams(1.0), t, np.column_stack([x, y, tau2]), [],
                        "Extinction", I.IntegratorOptions())


def test_fit_extinction_synthetic():
    f = fit_extinction(_synthetic())
    assert abs(f.a - 2.0) < 1e-6 and abs(f.t_star - 5.0) < 1e-6
    assert abs(f.b_ext - 1.3) < 1e-6
    assert f.fit_residual < 1e-9 and f.n_samples >= 50


def test_fit_extinction_needs_extinction():
    tr = _synthetic()
    tr.termination = "ReachedMaxT"
    with pytest.raises(ValueError):
        fit_extinction(tr)


def test_fit_extinction_shrinker_lambda_minus_1():
    tr = I.integrate(initial_state(-1.0, 1.0), odesys.FULL, SolitonParams(-1.0),
                     I.IntegratorOptions(max_t=50.0))
    assert tr.termination == "Extinction"
    f = fit_extinction(tr)
    # frozen values; oracle: the end slope of x^2 approaches -a^2
    assert f.t_star == pytest.approx(7.457623237278676, rel=1e-9)
    assert f.a == pytest.approx(6.018331862364847, rel=1e-7)
    assert abs(f.x2_slope_end + f.a ** 2) < 1e-3 * f.a ** 2
