import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.campaigns import tube_member
from qflux.core import make_grid, plane_wave
from qflux import tube_flux as TF


def _jet_sin_exp(X, Q):
    # f = sin(x) e^{q/2}
    e = np.exp(Q / 2)
    return TF.Jet(f=np.sin(X) * e, x=np.cos(X) * e, xx=-np.sin(X) * e, q=np.sin(X) * e / 2, qq=np.sin(X) * e / 4)


def _jet_poly(X, Q):
    # g = cos(2x) + q^2
    return TF.Jet(f=np.cos(2 * X) + Q**2, x=-2 * np.sin(2 * X), xx=-4 * np.cos(2 * X), q=2 * Q, qq=2 + 0 * Q)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-2, 2), q=st.floats(-2, 2))
def test_jet_product_rule_matches_differences(x, q):
    X, Q = np.array([x]), np.array([q])
    P = _jet_sin_exp(X, Q) * _jet_poly(X, Q)
    f = lambda a, b: (_jet_sin_exp(a, b) * _jet_poly(a, b))["f"]
    e = 1e-4
    assert P["x"] == pytest.approx((f(X + e, Q) - f(X - e, Q)) / (2 * e), abs=1e-6)
    assert P["q"] == pytest.approx((f(X, Q + e) - f(X, Q - e)) / (2 * e), abs=1e-6)
    assert P["xx"] == pytest.approx((f(X + e, Q) - 2 * f(X, Q) + f(X - e, Q)) / e**2, abs=1e-4)
    assert P["qq"] == pytest.approx((f(X, Q + e) - 2 * f(X, Q) + f(X, Q - e)) / e**2, abs=1e-4)
    S = _jet_sin_exp(X, Q) - _jet_sin_exp(X, Q)
    assert all(np.all(S[k] == 0) for k in TF.Jet.KEYS)


@pytest.mark.parametrize("w", [0.7, 2.5])
def test_bump_symbol_derivatives(w):
    a = TF.bump_symbol(0.3, w)
    q = np.linspace(0.3 - 0.95 * w, 0.3 + 0.95 * w, 23)
    e = 1e-5
    v, d1, d2 = a(q)
    assert np.allclose(d1, (a(q + e)[0] - a(q - e)[0]) / (2 * e), atol=1e-7)
    assert np.allclose(d2, (a(q + e)[0] - 2 * v + a(q - e)[0]) / e**2, atol=1e-3)
    assert a(np.array([0.3]))[0][0] == 1.0
    assert a(np.array([0.3 + w]))[0][0] == 0.0


def test_region_and_mode_guards():
    with pytest.raises(ValueError):
        TF.SlabRegion(0.5, -0.5)
    with pytest.raises(ValueError):
        TF.SlabRegion(tau=0.5)
    with pytest.raises(ValueError):
        TF.TubeModes(plane_wave(make_grid(2, 8, 0.1), [1, 1]))
    u = tube_member(0.1)
    with pytest.raises(ValueError):
        TF.two_qf(u, TF.SlabRegion(-0.05, 0.05), TF.constant_symbol(), 0.1)


@pytest.fixture(scope="module")
def member():
    return tube_member(0.1)


def test_zero_symbol_gives_zero(member):
    r = TF.two_qf(member, TF.SlabRegion(), TF.constant_symbol(0.0), 0.1)
    assert r["value"] == 0.0 and r["boundary"] == 0.0


def test_green_closure_conventions():
    reg, a = TF.SlabRegion(), TF.bump_symbol(0.0, 2.5)
    u = tube_member(0.2)
    r = TF.green_closure(u, reg, a, 0.1)
    assert r["gtilde"]["relative_residual"] < 1e-10
    assert r["literal"]["relative_residual"] < 1e-10
    # doubled gradient coefficient does not match the pairing coefficient 2
    assert r["dbar"]["relative_residual"] > 1e-8
    for s in (1, -1):
        assert TF.two_qf(u, reg, a, 0.1, s)["relative_residual"] < 1e-10


def test_boundary_is_eps_independent(member):
    r = TF.eps_independence(member, TF.SlabRegion(), TF.bump_symbol(0.0, 2.5))
    assert r["difference"] < 1e-13 * abs(r["boundary"][0])


def test_boundary_crosscheck(member):
    t = TF.theorem3_boundary_terms(member, TF.SlabRegion(), TF.bump_symbol(0.0, 2.5))
    assert t["one_term_crosscheck"] < 1e-12 * abs(t["one_term_with_rho"])
    assert t["dropped_nodes"] >= 0


def test_symbol_integral_values():
    reg = TF.SlabRegion()
    # four points (c_i, +-1), each a(1) + 16 a(-2) for even a
    assert TF.symbol_integral(reg, TF.constant_symbol(1.0)) == pytest.approx(68.0)
    b = lambda t: math.exp(1 - 1 / (1 - t * t))
    ref = 4 * (b(1 / 2.5) + 16 * b(2 / 2.5))
    assert TF.symbol_integral(reg, TF.bump_symbol(0.0, 2.5)) == pytest.approx(ref, rel=1e-12)
    assert ref == pytest.approx(14.1231139, rel=1e-7)


def test_calibrated_growth_on_power_law():
    rows = [{"h": h, "lhs_boundary": 3 * h**0.5} for h in (0.2, 0.1, 0.05)]
    r = TF.calibrated_growth(rows)
    assert r["h_power"] == pytest.approx(0.5)
    assert np.allclose(r["octave_ratios"], 2 ** -0.5)
    assert r["stable"]


def test_q1_pairing_linear_in_symbol(member):
    reg = TF.SlabRegion()
    a1 = TF.q1_pairing(member, reg, TF.constant_symbol(1.0), 0.1)
    a3 = TF.q1_pairing(member, reg, TF.constant_symbol(3.0), 0.1)
    assert a3 == pytest.approx(3 * a1)
    assert TF.q1_pairing(member, reg, TF.constant_symbol(0.0), 0.1) == 0.0
