import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.core import SymbolFn
from qflux.geometry import (H_p_beta, Hamiltonian, SectionMeasure, ball_bundle_integral, classify_transversality,
                            corollary_rhs, cosphere_measure, example4_surface, exact_free_shell, flow,
                            free_hamiltonian, hypersurface_from_json, liouville_measure, section_integral,
                            symplectic_density)


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-1, 1), y=st.floats(-1, 1), th=st.floats(0, 2 * np.pi), t=st.floats(0.1, 2.0))
def test_free_flow_is_straight_line(x, y, th, t):
    H = free_hamiltonian()
    xi = [np.cos(th), np.sin(th)]
    (X, Y), K = flow(H, [x, y], xi, t, dt=1e-2, period=None)
    assert X == pytest.approx(x + 2 * t * xi[0], abs=1e-12)
    assert Y == pytest.approx(y + 2 * t * xi[1], abs=1e-12)
    assert np.allclose(K, xi)


def test_verlet_conserves_energy_with_potential():
    V = lambda x: 0.3 * np.cos(np.pi * x[0])
    gV = lambda x: [-0.3 * np.pi * np.sin(np.pi * x[0]), np.zeros(np.shape(x[0]))]
    H = Hamiltonian(2, 1.0, V, gV)
    x0, k0 = [np.array(0.1), np.array(0.2)], [np.array(0.6), np.array(0.5)]
    x1, k1 = flow(H, x0, k0, 3.0, dt=1e-3)
    assert abs(H.p(x1, k1) - H.p(x0, k0)) < 1e-6


def test_general_form_matches_kinetic():
    Hk = free_hamiltonian(2)
    Hg = Hamiltonian(2, p_general=SymbolFn(lambda x, xi: xi[0] ** 2 + xi[1] ** 2 - 1.0))
    x0, k0 = [0.1, -0.3], [0.8, 0.6]
    a = flow(Hk, x0, k0, 0.7, dt=1e-3)
    b = flow(Hg, x0, k0, 0.7, dt=1e-3)
    assert np.allclose(a[0], b[0], atol=1e-7) and np.allclose(a[1], b[1], atol=1e-7)
    with pytest.raises(ValueError):
        flow(Hk, x0, k0, 1.0, dt=0.1)


def test_cosphere_measure_closed_form():
    assert cosphere_measure(2) == pytest.approx(8 * np.pi)
    assert cosphere_measure(2, normalization="leray") == pytest.approx(4 * np.pi)
    assert cosphere_measure(1) == pytest.approx(4.0)


@pytest.mark.parametrize("norm", ["surface", "leray"])
def test_liouville_shell_quadrature_matches_closed_form(norm):
    H = free_hamiltonian(2)
    r = liouville_measure(H, n_x=4, normalization=norm)
    ref = cosphere_measure(2, normalization=norm)
    assert r["value"] == pytest.approx(ref, rel=1e-4)
    assert r["exact_product"] == pytest.approx(ref, rel=1e-12)


def test_exact_free_shell_weights_symbol():
    # average of xi1^2 over the unit circle is 1/2
    H = free_hamiltonian(2)
    v = exact_free_shell(H, lambda x, xi: xi[0] ** 2, n_x=4)
    assert v == pytest.approx(0.5 * 8 * np.pi)


def test_example4_surface_nodes_lie_on_sigma():
    S = example4_surface()
    chk = S.check_nodes(free_hamiltonian())
    assert chk["ok"], chk


def test_section_integrals_analytic():
    # flux: sign(H_p beta)|grad_xi p| = 2 over x2 in period 2, xi2 in (-1, 1): 2 * 2 * 2
    H = free_hamiltonian()
    S = example4_surface()
    assert section_integral(S, SectionMeasure(H, S, "flux"), lambda x, xi: 1.0 + 0 * x[0]) == pytest.approx(8.0)
    # literal: H_p beta = 2 xi1 = 2 sqrt(1 - xi2^2); integral 2 * 2 * pi/2
    lit = section_integral(S, SectionMeasure(H, S, "literal"), lambda x, xi: 1.0 + 0 * x[0])
    assert lit == pytest.approx(2 * np.pi, rel=1e-4)
    Sf = S.flipped()
    assert section_integral(Sf, SectionMeasure(H, Sf, "flux"), lambda x, xi: 1.0 + 0 * x[0]) == pytest.approx(-8.0)
    assert section_integral(S, SectionMeasure(H, S, "flux"), None) == 0.0


def test_json_surface_matches_builtin():
    doc = {"beta": "x1 - 0.5", "orientation": 1,
           "patches": [{"param_ranges": [[-1, 1], [-1, 1]], "node_counts": [16, 48],
                        "chart": ["0.5", "s1", "sqrt(1 - s2^2)", "s2"]}]}
    S = hypersurface_from_json(json.dumps(doc))
    H = free_hamiltonian()
    v = section_integral(S, SectionMeasure(H, S, "flux"), lambda x, xi: xi[1] ** 2)
    S0 = example4_surface()
    ref = section_integral(S0, SectionMeasure(H, S0, "flux"), lambda x, xi: xi[1] ** 2)
    assert v == pytest.approx(ref, rel=1e-6)
    with pytest.raises(ValueError):
        hypersurface_from_json({"beta": "x1", "patches": [{"param_ranges": [[0, 1]], "node_counts": [4],
                                                           "chart": ["0", "s1", "0", "1"]}]})


def test_transversality_classification():
    S = example4_surface(n_xi2=8)
    H = free_hamiltonian()
    cls = classify_transversality(S, H)[0]
    assert set(cls) == {"transversal"}
    x, xi = [np.array([0.5]), np.array([0.0])], [np.array([0.0]), np.array([1.0])]
    assert H_p_beta(H, S, x, xi)[0] == 0.0


def test_symplectic_density_rejects_high_dim():
    t = ([np.ones(1)] * 3, [np.zeros(1)] * 3)
    with pytest.raises(ValueError):
        symplectic_density([t, t, t], 3)


def test_corollary_rhs_values():
    assert corollary_rhs(lambda x2, s: 1.0 + 0 * s) == pytest.approx(0.5, rel=1e-12)
    assert corollary_rhs(lambda x2, s: 1.0 + s**2) == pytest.approx(0.625, rel=1e-12)
    assert ball_bundle_integral(lambda x2, s: np.cos(np.pi * x2) + 0 * s) == pytest.approx(0.0, abs=1e-12)
