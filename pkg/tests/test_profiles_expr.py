import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.expr import ExprError, parse_param_expr, parse_symbol
from qflux.profiles import bump, bump_step, bump_step_d, profile, smooth7, smooth7_d, symmetric_plateau, window


@pytest.mark.parametrize("name", ["bump", "smooth7"])
def test_step_profile_ends(name):
    S, _ = profile(name)
    s = np.array([-3.0, -1.0, 0.0, 2.0])
    assert np.array_equal(S(s), [0.0, 0.0, 1.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-1.5, 0.5), b=st.floats(-1.5, 0.5))
def test_step_profiles_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    for S in (bump_step, smooth7):
        assert S(lo) <= S(hi) + 1e-15


@pytest.mark.parametrize("S,dS", [(bump_step, bump_step_d), (smooth7, smooth7_d)])
def test_profile_derivatives_match_differences(S, dS):
    s = np.linspace(-0.95, -0.05, 37)
    e = 1e-5
    fd1 = (S(s + e) - S(s - e)) / (2 * e)
    fd2 = (S(s + e) - 2 * S(s) + S(s - e)) / e**2
    assert np.allclose(dS(s, 1), fd1, atol=1e-7)
    assert np.allclose(dS(s, 2), fd2, atol=1e-3)


def test_bump_step_symmetry():
    # S(s) + S(-1 - s) = 1 for the integrated bump
    s = np.linspace(-1, 0, 21)
    assert np.allclose(bump_step(s) + bump_step(-1 - s), 1.0)


def test_unknown_profile():
    with pytest.raises(ValueError):
        profile("tophat")


def test_window_and_plateau():
    t = np.array([0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    w = window(t, 0.2)
    assert w[0] == 1 and w[2] == 1 and w[4] == 0 and w[5] == 0
    assert symmetric_plateau(0.05, 0.1) == 1.0
    assert symmetric_plateau(0.25, 0.1) == 0.0


def test_bump_peak_and_support():
    assert bump(0.5, 0.5, 0.25) == pytest.approx(1.0)
    assert bump(0.76, 0.5, 0.25) == 0.0


def test_parse_symbol_arithmetic():
    s = parse_symbol("xi1^2 + xi2^2 - 1")
    x = [np.zeros(3), np.zeros(3)]
    xi = [np.array([1.0, 0.0, 0.6]), np.array([0.0, 1.0, 0.8])]
    assert np.allclose(s(x, xi), 0.0)
    assert s.xi_only


def test_parse_precedence():
    s = parse_symbol("-x1^2")
    assert s([np.array(2.0)], [np.array(0.0)]) == pytest.approx(-4.0)
    s = parse_symbol("2^3^2")
    assert s([np.array(0.0)], [np.array(0.0)]) == pytest.approx(512.0)


def test_parse_functions():
    s = parse_symbol("bump(xi2; 0.5, 0.25) * (1 + 0.5*cos(pi*x2))")
    v = s([np.array(0.0), np.array(0.0)], [np.array(0.0), np.array(0.5)])
    assert v == pytest.approx(1.5)
    assert not s.xi_only and not s.x_only


def test_parse_errors():
    with pytest.raises(ExprError):
        parse_symbol("xi1 +")
    with pytest.raises(ExprError):
        parse_symbol("foo(xi1)")
    with pytest.raises(ExprError):
        parse_symbol("s1 + xi1")
    with pytest.raises(ExprError):
        parse_param_expr("x1")


def test_param_expr():
    f = parse_param_expr("sqrt(1 - s2^2)")
    s = [np.zeros(3), np.array([0.0, 0.6, 1.0])]
    assert np.allclose(f(s), [1.0, 0.8, 0.0])
