import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.core import (FourierField, SeededRng, TorusGrid, l2_inner, l2_inner_grid, make_grid, plane_wave,
                        symbol_x, symbol_xi)


def test_grid_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        make_grid(2, 12, 0.1)


def test_grid_geometry():
    g = make_grid(2, 16, 0.1)
    assert g.shape == (16, 16)
    assert g.size == 256
    assert g.kappa == pytest.approx(np.pi)
    assert g.volume == pytest.approx(4.0)
    assert g.axis()[0] == pytest.approx(-1.0)
    # xi = h kappa k on the lattice
    assert g.frequencies()[0][1, 0] == pytest.approx(0.1 * np.pi)


def test_plane_wave_norm_and_values():
    g = make_grid(1, 32, 0.1)
    u = plane_wave(g, [3])
    x = g.axis()
    assert np.allclose(u.values(), np.exp(1j * np.pi * 3 * x))
    assert u.norm() == pytest.approx(np.sqrt(2.0))
    c = plane_wave(g, [3], "cos")
    assert np.allclose(c.values(), np.cos(3 * np.pi * x))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([1, 2]))
def test_values_coefficients_roundtrip(seed, n):
    g = make_grid(n, 8, 0.2)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    u = FourierField.from_values(g, v)
    assert np.allclose(u.values(), v, atol=1e-12)
    # Parseval: coefficient norm equals quadrature norm
    assert u.norm() == pytest.approx(np.sqrt(g.weight * np.sum(np.abs(v) ** 2)), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_inner_products_agree(seed):
    g = make_grid(2, 8, 0.2)
    rng = np.random.default_rng(seed)
    a = FourierField.from_values(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    b = FourierField.from_values(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    assert abs(l2_inner(a, b) - l2_inner_grid(a, b)) < 1e-12 * (1 + abs(l2_inner(a, b)))
    assert abs(l2_inner(a, b) - np.conj(l2_inner(b, a))) < 1e-12


def test_inner_product_grid_mismatch():
    a = plane_wave(make_grid(1, 8, 0.1), [1])
    b = plane_wave(make_grid(1, 16, 0.1), [1])
    with pytest.raises(ValueError):
        l2_inner(a, b)


def test_real_field_reflection():
    g = make_grid(2, 8, 0.1)
    u = FourierField.from_values(g, np.cos(np.pi * g.coords()[0]) + 0.2)
    assert u.conj_reflect_defect() < 1e-14


def test_seeded_streams_are_independent_of_order():
    r = SeededRng(12345)
    a = r.stream(3).standard_normal(4)
    r.stream(1).standard_normal(100)
    b = r.stream(3).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, r.stream(4).standard_normal(4))


def test_symbol_flags():
    sx = symbol_x(lambda x: np.cos(x[0]))
    sk = symbol_xi(lambda xi: xi[0] ** 2)
    assert sx.x_only and not sx.xi_only
    assert sk.xi_only and not sk.x_only
