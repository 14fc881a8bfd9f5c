import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.campaigns import TUBE_PERIOD, tube_member
from qflux.core import FourierField, make_grid, plane_wave
from qflux.grauert import (FermiChart, TubeGrid, cauchy_riemann_residual, conjugated_operator_apply, fd4,
                           grad_rho_checks, heat_apply, holomorphic_continue, kahler_checks, make_tube,
                           p_rho_residual, r2_complex, rho, symbol_q, t_hol)


def test_heat_on_plane_wave():
    g = make_grid(1, 32, 0.1)
    u = plane_wave(g, [3])
    v = heat_apply(u, 0.2)
    assert np.allclose(v.coeffs, math.exp(-0.1 * (3 * np.pi) ** 2) * u.coeffs)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(-5, 5), xi=st.floats(-0.5, 0.5))
def test_continuation_of_plane_wave(k, xi):
    g = make_grid(1, 32, 0.1)
    u = plane_wave(g, [k])
    x = g.axis()
    assert np.allclose(holomorphic_continue(u, [xi]), np.exp(1j * np.pi * k * (x + 1j * xi)))


def test_continuation_guards():
    g = make_grid(1, 16, 0.1)
    rng = np.random.default_rng(0)
    u = FourierField(g, rng.standard_normal(16) + 0j)
    with pytest.raises(ValueError):
        holomorphic_continue(u, [2.0])
    with pytest.raises(ValueError):
        holomorphic_continue(u, [0.1, 0.1])


def test_cauchy_riemann():
    g = make_grid(2, 16, 0.1)
    u = plane_wave(g, [2, -1])
    for axis in (0, 1):
        # central difference in xi with step 1e-4: truncation error ~ (kappa k)^2 1e-8
        assert cauchy_riemann_residual(u, [0.2, -0.1], axis=axis) < 1e-6


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-1, 1), xi=st.floats(-2, 2))
def test_kahler_potential_sign(x, xi):
    r = kahler_checks([np.array([xi])], [np.array([x])])
    assert r["minus_re"] < 1e-12
    assert r["minus_quarter_conj"] < 1e-12
    if abs(xi) > 0.1:
        assert r["plus_re"] > 1e-3


def test_r2_complex_nearest_image():
    assert r2_complex([0.9], [-0.9]) == pytest.approx(0.04)
    assert rho([np.array(2.0)]) == 2.0


def test_tube_grid_validation():
    g = make_grid(1, 32, 0.1)
    with pytest.raises(ValueError):
        TubeGrid(g, 0.9, 20)
    with pytest.raises(ValueError):
        TubeGrid(g, 1.5, 5)
    with pytest.raises(ValueError):
        TubeGrid(make_grid(1, 32, 0.001), 1.5, 20)
    t = make_tube(g, 1.5, 4)
    assert t.xi_axis()[0] == -1.5 and t.xi_axis()[-1] == 1.5
    assert t.xi_weights().sum() == pytest.approx(3.0)


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-2, 2), min_size=5, max_size=5), order=st.sampled_from([1, 2]))
def test_fd4_exact_on_quartics(c, order):
    x = np.linspace(-1, 1, 21)
    p = np.polynomial.Polynomial(c)
    got = fd4(p(x), 0, x[1] - x[0], order)
    assert np.allclose(got, p.deriv(order)(x), atol=1e-9 * (1 + max(map(abs, c))))


@pytest.mark.parametrize("order", [1, 2])
def test_fd4_fourth_order_convergence(order):
    errs = []
    for M in (41, 81):
        x = np.linspace(-1, 1, M)
        d = fd4(np.sin(3 * x), 0, x[1] - x[0], order)
        ref = 3 * np.cos(3 * x) if order == 1 else -9 * np.sin(3 * x)
        errs.append(np.max(np.abs(d - ref)))
    assert errs[0] / errs[1] > 12


def test_t_hol_two_routes_and_conjugated_operator():
    u = tube_member(0.1)
    assert u.grid.period == pytest.approx(TUBE_PERIOD)
    tube = make_tube(u.grid, 1.5, 32)
    r = t_hol(u, tube)
    assert r["deviation"] < 1e-13
    assert p_rho_residual(u, tube, "gtilde") < 1e-6
    assert p_rho_residual(u, tube, "dbar") < 1e-6
    assert p_rho_residual(u, tube, "literal") > 1e-2
    with pytest.raises(ValueError):
        conjugated_operator_apply(r["T"], tube, "weyl")


def test_grad_rho():
    tube = make_tube(make_grid(1, 16, 0.1), 1.5, 8)
    r = grad_rho_checks(tube)
    assert r["gradnorm"] == 0.0
    assert r["X_rho"] < 1e-10


def test_fermi_chart_validation():
    with pytest.raises(ValueError):
        FermiChart("plane", 1, Nx=(1.0,), Nxi=(1.0,))
    with pytest.raises(ValueError):
        FermiChart("xi_sphere", 2, c=0.5, beta_max=0.6)
    with pytest.raises(ValueError):
        FermiChart("cone", 1)
    ch = FermiChart("xi_sphere", 2, c=1.0)
    x = [np.array([0.1]), np.array([0.2])]
    xi = [np.array([0.6]), np.array([0.9])]
    assert ch.grad_defect(x, xi) < 1e-8
    assert ch.tangential_laplacian()["angular_coefficient"] == 1.0
    assert ch.metric_determinant() == 1.0


def test_symbol_q_hand_chart():
    # Sigma = {x = 0} in the n = 1 tube, point (0, 1): s = 1, rho_beta = 0
    a = lambda x, xi: 1.0 + 0.25 * xi[0] ** 2
    ch = FermiChart("plane", 1, Nx=(1.0,), Nxi=(0.0,))
    q = symbol_q(ch, a, [np.array(0.0)], [np.array(1.0)])
    assert q["q2"] == pytest.approx(1.25)
    assert q["q1"] == pytest.approx(16 * 2.0)
    zero = symbol_q(ch, lambda x, xi: 0.0 * xi[0], [np.array(0.0)], [np.array(-1.0)])
    assert zero == {"q1": 0.0, "q2": 0.0}
    sph = symbol_q(FermiChart("xi_sphere", 1, c=1.0, beta_max=0.5), a, [np.array(0.3)], [np.array(1.0)])
    assert sph["q1"] == 0.0 and sph["q2"] == 0.0
    with pytest.raises(ValueError):
        symbol_q(ch, a, [np.array(0.1)], [np.array(1.0)])
    with pytest.raises(ValueError):
        symbol_q(ch, a, [np.array(0.0)], [np.array(0.5)])
