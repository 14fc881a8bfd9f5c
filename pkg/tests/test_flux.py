import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflux.core import make_grid
from qflux.flux import (ZERO_FLOOR, chi_independence, decay_fit, ensemble_stats, extrapolate_eps, qf_pm,
                        qf_product, rellich_identity_check)
from qflux.quantization import build_P, frequency_cutoff, hyperplane_cutoff
from qflux.spectral import EigenPair, full_eigenspace, h_for_radius


@pytest.fixture(scope="module")
def setup():
    g = make_grid(2, 32, h_for_radius(25))
    return g, build_P(g, E=1.0), full_eigenspace(g).members


@settings(max_examples=30, deadline=None)
@given(p=st.floats(0.2, 4.0), c=st.floats(0.1, 10.0))
def test_decay_fit_recovers_power(p, c):
    hs = [0.1, 0.05, 0.025]
    r = decay_fit(hs, [c * h**p for h in hs])
    assert r["exponent"] == pytest.approx(p, rel=1e-9)


def test_decay_fit_floor_and_short_input():
    r = decay_fit([0.1, 0.05], [1e-13, 0.0])
    assert r["exponent"] == math.inf and r["identically_zero"]
    assert math.isnan(decay_fit([0.1], [0.3])["exponent"])
    assert ZERO_FLOOR == 1e-11


def test_extrapolate_eps():
    r = extrapolate_eps([0.2, 0.1, 0.05], [1.2, 1.1, 1.05])
    assert r["value"] == pytest.approx(1.0)
    assert not r["flagged"]
    assert extrapolate_eps([0.2, 0.1, 0.05], [1.0, 1.2, 1.1])["flagged"]
    with pytest.raises(ValueError):
        extrapolate_eps([0.1, 0.2], [1.0, 1.0])


def test_ensemble_stats():
    s = ensemble_stats([1.0, 2.0, 3.0])
    assert s["mean"] == 2.0 and s["stderr"] == pytest.approx(1 / math.sqrt(3))
    assert math.isnan(ensemble_stats([1.0])["stderr"])


def test_admission_rejects_large_residual(setup):
    g, P, members = setup
    bad = EigenPair(members[0].u, 10 * g.h, 0.0)
    with pytest.raises(ValueError):
        qf_product(None, bad, P, hyperplane_cutoff(0, 0.5, 0.1), 1)


def test_chi_independence_for_eigenfunctions():
    g = make_grid(2, 256, h_for_radius(25))
    P = build_P(g, E=1.0)
    members = full_eigenspace(g).members
    a = hyperplane_cutoff(0, 0.5, 0.1, profile_name="bump")
    b = hyperplane_cutoff(0, 0.5, 0.1, profile_name="smooth7")
    for pair in members[:4]:
        r = chi_independence(None, pair, P, a, b)
        assert r["difference"] < 1e-9
        assert r["telescoped"] < 1e-9
    far = hyperplane_cutoff(0, 0.0, 0.1)
    with pytest.raises(ValueError):
        chi_independence(None, members[0], P, a, far)


def test_split_fluxes_add_up(setup):
    g, P, members = setup
    cut = hyperplane_cutoff(0, 0.5, 0.1)
    for pair in members[:3]:
        r = rellich_identity_check(pair, P, cut, None)
        assert r["residual"] < 1e-10 * (1 + abs(r["whole"]))


def test_qf_pm_requires_x_surface(setup):
    g, P, members = setup
    with pytest.raises(ValueError):
        qf_pm(members[0], P, frequency_cutoff(0, 0.5, 0.1), None, 1)


def test_unsplit_flux_of_real_mode_vanishes(setup):
    # real eigenfunctions carry no net current through a hyperplane
    g, P, members = setup
    cut = hyperplane_cutoff(0, 0.5, 0.1)
    for pair in members:
        assert abs(qf_product(None, pair, P, cut, 0)["value"]) < 1e-9
