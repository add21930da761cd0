import math

import numpy as np
import pytest
from scipy.linalg import expm

from eplase import (CumulantState, atomic_cavity_rate, bright_dark,
                    dicke_coordinates, steady_state)
from eplase.errors import ClosureViolationError, ParameterError
from eplase.params import TWO_PI


def ladder_top(n):
    return math.sqrt((n / 2) * (n / 2 + 1))


def test_fully_excited_point():
    n = 10**6
    d = dicke_coordinates(CumulantState(pop=1.0, pair=1.0), n)
    assert d.jz == pytest.approx(n / 2)
    assert d.j_len == pytest.approx(ladder_top(n), rel=1e-12)
    assert d.j_eff == pytest.approx(n / 2, rel=1e-9)
    assert d.m == d.jz


def test_ground_point():
    n = 10**6
    d = dicke_coordinates(CumulantState(), n)
    assert d.jz == pytest.approx(-n / 2)
    assert d.j_len == pytest.approx(ladder_top(n), rel=1e-12)


def test_ladder_ascent_monotone(ep_params):
    jz = []
    for eta in np.geomspace(1e-4, 1e3, 25):
        s = steady_state(ep_params.replace(eta=float(eta)))
        jz.append(dicke_coordinates(s, ep_params.atom_count).jz)
    assert all(b >= a for a, b in zip(jz, jz[1:]))
    assert jz[0] < -0.4 * ep_params.atom_count      # subradiant start
    assert jz[-1] > 0.49 * ep_params.atom_count     # fully excited end


def test_boundary_containment(ep_params, ptbp_params, ptsp_params):
    for p in (ep_params, ptbp_params, ptsp_params):
        for eta in (1e-4, 1e-2, 1.0, 18.0, 300.0):
            s = steady_state(p.replace(eta=float(eta)))
            d = dicke_coordinates(s, p.atom_count)
            slack = 1e-6 * p.atom_count
            assert abs(d.m) <= d.j_eff + slack
            assert d.j_eff <= p.atom_count / 2 + slack


def test_imaginary_corr_warns():
    with pytest.warns(UserWarning, match="Dicke"):
        dicke_coordinates(CumulantState(pop=0.5, corr=1e-3j, pair=0.25), 100)


def test_closure_violation_raises():
    # corr + pair - pop + 1/4 pushed far below the algebraic floor
    with pytest.raises(ClosureViolationError):
        dicke_coordinates(CumulantState(pop=1.0, corr=-1.0, pair=0.0), 10**6)


def test_atomic_cavity_rate(ep_params):
    assert atomic_cavity_rate(ep_params) == pytest.approx(5.8813e-3, rel=1e-3)
    with pytest.raises(ParameterError):
        atomic_cavity_rate(ep_params.replace(kappa_b=0.0))


def test_dark_system_stays_empty(ep_params):
    res = bright_dark(ep_params.replace(eta=0.0), t_end=2.0)
    assert np.allclose(res.n_bright, 0.0)
    assert np.allclose(res.n_dark, 0.0)
    assert not res.bright_divergent and not res.dark_divergent


def test_bright_steady_value(ep_params):
    p = ep_params.replace(eta=5e-4)      # below gamma: both modes settle
    res = bright_dark(p, t_end=3e4)
    n = p.atom_count
    k_ato = atomic_cavity_rate(p)
    expected = p.eta / (n * k_ato + p.gamma + p.gamma_phi - p.eta)
    assert res.n_bright[-1] == pytest.approx(expected, rel=1e-6)
    assert not res.bright_divergent and not res.dark_divergent


def test_dark_decouples_without_dephasing(ep_params):
    p = ep_params.replace(eta=5e-4, gamma_phi=0.0)
    res = bright_dark(p, t_end=500.0)
    rate = TWO_PI * (p.gamma - p.eta)
    expected = (p.atom_count - 1) * p.eta / (p.gamma - p.eta) * (
        1.0 - np.exp(-rate * res.t))
    assert np.allclose(res.n_dark, expected, rtol=1e-6, atol=1e-6)


def test_divergence_flags(ep_params):
    res = bright_dark(ep_params, t_end=1e-3)   # eta = 18 Hz > gamma
    assert res.dark_divergent
    assert not res.bright_divergent
    assert np.all(np.isfinite(res.n_dark))


def test_matches_closed_form(ep_params):
    p = ep_params.replace(eta=2e-4)
    t_end = 800.0
    res = bright_dark(p, t_end=t_end, n_out=7)
    n = p.atom_count
    k_ato = atomic_cavity_rate(p)
    A = TWO_PI * np.array([
        [-(n * k_ato + p.gamma + p.gamma_phi - p.eta), 0.0],
        [p.gamma_phi, -(p.gamma - p.eta)]])
    c = TWO_PI * np.array([p.eta, (n - 1) * p.eta])
    shift = np.linalg.solve(A, c)
    for i, t in enumerate(res.t):
        exact = expm(A * t) @ shift - shift
        assert res.n_bright[i] == pytest.approx(exact[0], rel=1e-6, abs=1e-12)
        assert res.n_dark[i] == pytest.approx(exact[1], rel=1e-6, abs=1e-9)
