import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.core import make_grid, symbol_x
from qflux.quantization import build_P
from qflux.spectral import (EigenCache, cache_key, circle_of_grid, decode_pairs, encode_pairs,
                            exact_lattice_modes, full_eigenspace, h_for_radius, lanczos_modes, lattice_circle,
                            random_qe_superposition, select_circle, weyl_sum)


@settings(max_examples=40, deadline=None)
@given(R2=st.integers(1, 3000))
def test_lattice_circle_points(R2):
    pts = lattice_circle(2, R2)
    assert all(a * a + b * b == R2 for a, b in pts)
    assert len(set(pts)) == len(pts)
    # brute force count
    r = math.isqrt(R2)
    ref = sum(1 for a in range(-r, r + 1) for b in range(-r, r + 1) if a * a + b * b == R2)
    assert len(pts) == ref


def test_lattice_circle_n1():
    assert lattice_circle(1, 9) == [(3,), (-3,)]
    assert lattice_circle(1, 8) == []


def test_h_for_radius_round_trip():
    h = h_for_radius(25)
    g = make_grid(2, 32, h)
    assert circle_of_grid(g, 1.0) == 25
    with pytest.raises(ValueError):
        circle_of_grid(make_grid(2, 32, 0.1234), 1.0)


def test_weyl_sum_and_selection():
    assert weyl_sum([(1, 0), (-1, 0)], J=1) == pytest.approx(0.0, abs=1e-15)
    assert weyl_sum([(1, 0), (-1, 0)], J=2) == pytest.approx(1.0)
    R2 = select_circle(10, min_points=16)
    assert len(lattice_circle(2, R2)) >= 16
    assert 100 <= R2 < 400
    with pytest.raises(ValueError):
        select_circle(1, min_points=1000)


def test_full_eigenspace_is_orthonormal_eigenbasis():
    g = make_grid(2, 32, h_for_radius(25))
    ens = full_eigenspace(g)
    assert len(ens.members) == len(lattice_circle(2, 25)) == 12
    assert ens.gram_defect() < 1e-12
    assert max(m.residual_norm for m in ens.members) < 1e-12
    assert all(m.u.conj_reflect_defect() < 1e-14 for m in ens.members)


def test_nyquist_guard():
    g = make_grid(2, 8, h_for_radius(25))
    with pytest.raises(ValueError):
        exact_lattice_modes(g)


def test_random_superposition_is_reproducible():
    g = make_grid(2, 32, h_for_radius(25))
    a = random_qe_superposition(g, 1.0, 4, seed=7)
    b = random_qe_superposition(g, 1.0, 4, seed=7)
    assert a.gram_defect() < 1e-12
    assert all(np.array_equal(x.u.coeffs, y.u.coeffs) for x, y in zip(a.members, b.members))
    with pytest.raises(ValueError):
        random_qe_superposition(g, 1.0, 13)


def test_lanczos_free_recovers_lattice_eigenspace():
    g = make_grid(2, 16, h_for_radius(5))
    pairs = lanczos_modes(g, None, 1.0, 1e-6)
    assert len(pairs) == len(lattice_circle(2, 5))
    assert all(abs(p.Eh) < 1e-10 for p in pairs)


def test_lanczos_with_potential_residuals():
    g = make_grid(1, 64, 0.05)
    V = symbol_x(lambda x: 0.2 * np.cos(np.pi * x[0]))
    pairs = lanczos_modes(g, V, 1.0, 0.2)
    assert pairs
    P = build_P(g, V, 1.0)
    for p in pairs:
        r = (P.apply(p.u) + p.u.scale(-p.Eh)).norm()
        assert r < 1e-6 and abs(p.Eh) <= 0.2


def test_cache_roundtrip_and_tamper(tmp_path):
    g = make_grid(2, 16, h_for_radius(5))
    pairs = full_eigenspace(g).members
    blob = encode_pairs(g, pairs)
    g2, back = decode_pairs(blob)
    assert g2 == g
    assert all(np.array_equal(a.u.coeffs, b.u.coeffs) for a, b in zip(pairs, back))
    bad = bytearray(blob)
    bad[40] ^= 1
    with pytest.raises(ValueError, match="checksum"):
        decode_pairs(bytes(bad))

    cache = EigenCache(tmp_path)
    key = cache_key(2, 16, 2.0, g.h, "0", 0.0)
    cache.get_or_compute(key, lambda: pairs)
    cache.get_or_compute(key, lambda: pairs)
    assert (cache.hits, cache.misses) == (1, 1)
    f = tmp_path / f"{key}.qflx"
    raw = bytearray(f.read_bytes())
    raw[50] ^= 0xFF
    f.write_bytes(bytes(raw))
    cache.get_or_compute(key, lambda: pairs)
    assert cache.misses == 2 and "checksum mismatch" in cache.warnings[0]


def test_cache_key_depends_on_inputs():
    a = cache_key(2, 16, 2.0, 0.1, "0", 0.0)
    assert a != cache_key(2, 16, 2.0, 0.1 + 1e-15, "0", 0.0)
    assert a != cache_key(2, 32, 2.0, 0.1, "0", 0.0)
    assert a == cache_key(2, 16, 2.0, 0.1, "0", 0.0)
