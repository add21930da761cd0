import math

import numpy as np
import pytest

from eplase import Phase, classify, derive, eigensystem, phase_diagram, standard_params
from eplase.errors import ClassificationError, ParameterError


def test_symmetric_phase_eigenvalues(ep_params):
    e = eigensystem(ep_params.replace(coupling_G=50e3))
    assert e.lambda_plus == pytest.approx(math.sqrt(50e3**2 - 39.75e3**2), rel=1e-12)
    assert e.lambda_plus.real == pytest.approx(30.33e3, rel=1e-3)
    assert e.lambda_plus.imag == 0.0
    assert e.lambda_minus == -e.lambda_plus


def test_broken_phase_eigenvalues(ep_params):
    e = eigensystem(ep_params.replace(coupling_G=20e3))
    assert e.lambda_plus.real == 0.0
    assert e.lambda_plus.imag == pytest.approx(34.35e3, rel=1e-3)
    assert e.lambda_minus == -e.lambda_plus


def test_ep_coalescence(ep_params):
    e = eigensystem(ep_params)
    assert e.lambda_plus == 0 and e.lambda_minus == 0
    assert e.defective
    # coalesced vector is (1, i)/sqrt(2) up to a global phase
    v = e.vec_plus / e.vec_plus[0]
    assert v[1] == pytest.approx(1j, abs=1e-12)
    assert np.allclose(e.vec_plus, e.vec_minus)
    assert np.linalg.norm(e.vec_plus) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("G,expected", [
    (3.975e3, Phase.PT_BROKEN),
    (39.75e3, Phase.EXCEPTIONAL_POINT),
    (3975e3, Phase.PT_SYMMETRIC),
])
def test_classification(ep_params, G, expected):
    assert classify(ep_params.replace(coupling_G=G)) is expected


def test_classification_requires_symmetric_detuning(ep_params):
    with pytest.raises(ClassificationError):
        classify(ep_params.replace(delta_a=10.0))


def test_unit_norm_and_bilinear_orthogonality(ep_params):
    # right eigenvectors of the complex symmetric matrix pair to zero under
    # the unconjugated product v.w in both non-degenerate phases
    for G in (5e3, 20e3, 39.7e3, 39.8e3, 50e3, 200e3):
        e = eigensystem(ep_params.replace(coupling_G=G))
        assert np.linalg.norm(e.vec_plus) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(e.vec_minus) == pytest.approx(1.0, abs=1e-12)
        assert abs(np.dot(e.vec_plus, e.vec_minus)) < 1e-12


def test_antisymmetry_on_resonance(ep_params):
    for G in (1e3, 30e3, 39.75e3, 60e3, 500e3):
        e = eigensystem(ep_params.replace(coupling_G=G))
        assert e.lambda_plus == pytest.approx(-e.lambda_minus, abs=1e-9)


def test_trace_invariance_general_detunings(ep_params):
    rng = np.random.default_rng(7)
    for _ in range(20):
        da, db = rng.uniform(-5e4, 5e4, size=2)
        G = rng.uniform(0, 1e5)
        p = ep_params.replace(delta_a=da, delta_b=db, coupling_G=G)
        e = eigensystem(p)
        q = 0.25 * (p.kappa_b - p.kappa_a)
        trace = (da + 1j * q) + (db - 1j * q)
        assert e.lambda_plus + e.lambda_minus == pytest.approx(trace, abs=1e-9 * 1e5)


def test_sqrt_scaling_near_ep(ep_params):
    g_ep = derive(ep_params).g_ep
    eps = np.geomspace(1e-4, 1e-2, 12) * g_ep
    split = [abs(eigensystem(ep_params.replace(coupling_G=g_ep + d)).lambda_plus)
             for d in eps]
    slope = np.polyfit(np.log(eps), np.log(split), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.05)


def test_phase_diagram_structure(ep_params):
    g_ep = derive(ep_params).g_ep
    grid = np.linspace(0.0, 2 * g_ep, 161)   # contains g_ep exactly
    rows = phase_diagram(ep_params, grid)
    assert len(rows) == 161
    for r in rows:
        if r["G_Hz"] < g_ep:
            assert r["re_plus"] == 0.0 and abs(r["im_plus"]) > 0
        elif r["G_Hz"] > g_ep:
            assert r["im_plus"] == 0.0 and abs(r["re_plus"]) > 0
    ep_row = rows[80]
    assert ep_row["G_Hz"] == pytest.approx(g_ep)
    assert abs(ep_row["re_plus"]) < 1e-6 and abs(ep_row["im_plus"]) < 1e-6


def test_phase_diagram_grid_validation(ep_params):
    with pytest.raises(ParameterError):
        phase_diagram(ep_params, [])
    with pytest.raises(ParameterError):
        phase_diagram(ep_params, [2.0, 1.0])


def test_continuity_across_ep(ep_params):
    g_ep = derive(ep_params).g_ep
    grid = np.linspace(0.9 * g_ep, 1.1 * g_ep, 400)
    lams = [eigensystem(ep_params.replace(coupling_G=float(G))).lambda_plus
            for G in grid]
    jumps = np.abs(np.diff(lams))
    # sqrt-type branch: neighboring samples stay within a few percent of g_ep
    assert jumps.max() < 0.05 * g_ep
