import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.core import FourierField, SymbolFn, l2_inner, make_grid, symbol_x
from qflux.quantization import (build_P, chebyshev_coefficients, compose, energy_window, flow_invariant_check,
                                fourier_multiplier, frequency_cutoff, hyperplane_cutoff, identity, kn_matrix,
                                laplace_symbol, one_sided_commutator, operator_norm, position_multiplier,
                                quantize, sign_projector, slab_cutoff)


def _random_field(grid, seed, band=None):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if band is not None:
        mask = np.ones(grid.shape, bool)
        for k in grid.klattice():
            mask &= np.abs(k) <= band
        c = c * mask
    return FourierField(grid, c)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_quantized_real_symbol_is_self_adjoint(seed):
    g = make_grid(1, 16, 0.1)
    a = SymbolFn(lambda x, xi: np.cos(np.pi * x[0]) * xi[0] ** 2 + np.sin(np.pi * x[0]) * xi[0])
    A = quantize(a, g)
    u, v = _random_field(g, seed), _random_field(g, seed + 1)
    assert abs(l2_inner(A.apply(u), v) - l2_inner(u, A.apply(v))) < 1e-10


def test_kn_matrix_on_separable_symbol_matches_composition():
    g = make_grid(1, 16, 0.1)
    f = lambda x: 1 + 0.3 * np.cos(np.pi * x[0])
    m = lambda xi: xi[0] ** 2
    M = kn_matrix(g, SymbolFn(lambda x, xi: f(x) * m(xi)))
    op = compose(position_multiplier(g, f), fourier_multiplier(g, m))
    u = _random_field(g, 4)
    ref = op.apply(u).coeffs
    got = M @ u.coeffs.ravel()
    assert np.allclose(got, ref.ravel(), atol=1e-12)


def test_quantize_x_only_is_multiplication():
    g = make_grid(2, 8, 0.1)
    a = symbol_x(lambda x: np.cos(np.pi * x[0]) * np.sin(np.pi * x[1]))
    u = _random_field(g, 0)
    v = quantize(a, g).apply(u)
    assert np.allclose(v.values(), a(g.coords(), None) * u.values(), atol=1e-12)


def test_band_limit_enforced():
    g = make_grid(1, 16, 0.1)
    with pytest.raises(ValueError):
        quantize(SymbolFn(lambda x, xi: xi[0], band_limit=5), g)


def test_commutator_with_P_is_exact_derivative_identity():
    # (i/h)[ -h^2 Delta, f ] u = -i h (Delta f) u + 2 grad f . (-i h grad u)
    g = make_grid(1, 64, 0.05)
    h, kap = g.h, g.kappa
    P = build_P(g, E=1.0)
    f = lambda x: np.cos(np.pi * x[0])
    F = position_multiplier(g, f)
    u = _random_field(g, 1, band=8)
    lhs = (1j / h) * (P.apply(F.apply(u)).coeffs - F.apply(P.apply(u)).coeffs)
    x = g.axis()
    du = FourierField(g, 1j * kap * g.klattice()[0] * u.coeffs).values()
    rhs = -1j * h * (-np.pi**2 * np.cos(np.pi * x)) * u.values() + 2 * (-np.pi * np.sin(np.pi * x)) * (-1j * h) * du
    assert np.allclose(FourierField(g, lhs).values(), rhs, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), axis=st.sampled_from([0, 1]))
def test_sign_projectors_partition_identity(seed, axis):
    g = make_grid(2, 8, 0.1)
    u = _random_field(g, seed)
    p = sign_projector(g, axis, 1).apply(u).coeffs + sign_projector(g, axis, -1).apply(u).coeffs
    assert np.allclose(p, u.coeffs)
    assert sign_projector(g, axis, 0).kind == "identity"


def test_energy_window_dense_matches_chebyshev():
    g = make_grid(1, 32, 0.1)
    V = symbol_x(lambda x: 0.1 * np.cos(np.pi * x[0]))
    P = build_P(g, V, E=1.0)
    u = _random_field(g, 2)
    a = energy_window(P, 0.3, method="dense").apply(u).coeffs
    b = energy_window(P, 0.3, fn=lambda t: np.exp(-t**2), method="chebyshev").apply(u).coeffs
    c = energy_window(P, 0.3, fn=lambda t: np.exp(-t**2), method="dense").apply(u).coeffs
    assert np.allclose(b, c, atol=1e-7)
    assert np.all(np.isfinite(a))


def test_energy_window_free_is_multiplier():
    g = make_grid(1, 32, 0.1)
    P = build_P(g, E=1.0)
    W = energy_window(P, 0.2)
    assert W.kind == "fourier_multiplier"
    assert W.self_adjoint


def test_chebyshev_coefficients_converge():
    c = chebyshev_coefficients(np.cos, -1.0, 1.0, tol=1e-12)
    t = np.linspace(-1, 1, 7)
    assert np.allclose(np.polynomial.chebyshev.chebval(t, c), np.cos(t), atol=1e-11)


def test_operator_norm_of_multiplier():
    g = make_grid(1, 32, 0.1)
    m = 1 + laplace_symbol(g)
    assert operator_norm(fourier_multiplier(g, m).apply, g, iters=200) == pytest.approx(m.max(), rel=1e-6)


def test_cutoffs():
    c = hyperplane_cutoff(0, 0.5, 0.1)
    x = [np.array([0.5, 0.45, 0.35, 0.55])]
    assert np.allclose(c.chi_fn(x), [1.0, bump_at(-0.5), 0.0, 1.0])
    assert c.loc_fn(x)[0] == 1.0
    with pytest.raises(ValueError):
        hyperplane_cutoff(0, 0.5, 0.1, delta=0.05)
    with pytest.raises(ValueError):
        hyperplane_cutoff(0, 0.5, 0.3)
    s = slab_cutoff(0, -0.25, 0.25, 0.05)
    assert s.chi_fn([np.array([0.0])])[0] == 0.0
    assert s.chi_fn([np.array([0.6])])[0] == 1.0
    f = frequency_cutoff(1, 0.5, 0.1)
    assert f.kind == "xi"


def bump_at(s):
    from qflux.profiles import bump_step
    return float(bump_step(s))


def test_one_sided_commutator_signs_sum_to_full():
    g = make_grid(1, 32, 0.1)
    P = build_P(g, E=1.0)
    cut = hyperplane_cutoff(0, 0.0, 0.1)
    u = _random_field(g, 5)
    full = one_sided_commutator(P, cut, 0).apply(u).coeffs
    parts = one_sided_commutator(P, cut, 1).apply(u).coeffs + one_sided_commutator(P, cut, -1).apply(u).coeffs
    base = one_sided_commutator(P, cut, 0).base(u)
    pp = sign_projector(g, 0, 1).apply(base).coeffs + sign_projector(g, 0, -1).apply(base).coeffs
    assert np.allclose(pp, base.coeffs)
    assert np.allclose(full, parts, atol=1e-12)
    with pytest.raises(ValueError):
        one_sided_commutator(P, cut, 2)


def test_flow_invariant_check_admits_function_of_P():
    g = make_grid(1, 32, 0.1)
    P = build_P(g, E=1.0)
    A = fourier_multiplier(g, np.exp(-laplace_symbol(g)))
    r = flow_invariant_check(A, P, identity(g))
    assert r["admitted"] and r["defect"] < 1e-12
    B = position_multiplier(g, lambda x: np.cos(np.pi * x[0]))
    assert not flow_invariant_check(B, P, identity(g))["admitted"]
