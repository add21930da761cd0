import numpy as np
import pytest

from eplase import ClockSpec, allan_deviation, emission_power, qpn_instability
from eplase.errors import ParameterError


def test_microhertz_clock_floor():
    spec = ClockSpec(linewidth=1e-6, nu_clock=1e14, atom_count=10**7)
    assert qpn_instability(spec) == pytest.approx(1.0e-24, rel=0.10)


def test_millihertz_clock_floor():
    spec = ClockSpec(linewidth=1e-3, nu_clock=1e14, atom_count=10**6)
    assert qpn_instability(spec) == pytest.approx(3.2e-21, rel=0.05)


def test_averaging_time_scaling():
    base = ClockSpec(linewidth=1e-6, nu_clock=1e14, atom_count=10**7, tau=1.0)
    longer = ClockSpec(linewidth=1e-6, nu_clock=1e14, atom_count=10**7, tau=4.0)
    assert qpn_instability(longer) == pytest.approx(0.5 * qpn_instability(base))


def test_qpn_parameter_scalings():
    base = ClockSpec(linewidth=2e-6, nu_clock=1e14, atom_count=10**6,
                     t_cycle=0.5, tau=2.0)
    s0 = qpn_instability(base)
    assert qpn_instability(ClockSpec(linewidth=4e-6, nu_clock=1e14,
                                     atom_count=10**6, t_cycle=0.5, tau=2.0)) \
        == pytest.approx(2 * s0)
    assert qpn_instability(ClockSpec(linewidth=2e-6, nu_clock=1e14,
                                     atom_count=4 * 10**6, t_cycle=0.5, tau=2.0)) \
        == pytest.approx(0.5 * s0)


def test_clock_spec_validation():
    with pytest.raises(ParameterError, match="linewidth"):
        ClockSpec(linewidth=0.0, nu_clock=1e14, atom_count=10)


def test_allan_constant_series():
    assert allan_deviation([4.3e14] * 12, 4.3e14) == 0.0


def test_allan_two_point():
    nu = 1e14
    series = [nu * (1 + 1e-15), nu * (1 - 1e-15)]
    assert allan_deviation(series, nu) == pytest.approx(np.sqrt(2) * 1e-15, rel=1e-12)


def test_allan_alternating_series():
    nu, d = 1e14, 250.0
    for length in (4, 9, 40):
        series = nu + d * np.array([(-1)**k for k in range(length)])
        assert allan_deviation(series, nu) == pytest.approx(
            2 * d / (np.sqrt(2) * nu), rel=1e-12)


def test_allan_offset_invariance():
    rng = np.random.default_rng(3)
    series = 1e14 + rng.normal(0, 5.0, size=50)
    a = allan_deviation(series, 1e14)
    b = allan_deviation(series + 123.456, 1e14)
    assert a == pytest.approx(b, rel=1e-12)


def test_allan_needs_two_points():
    with pytest.raises(ParameterError):
        allan_deviation([1e14], 1e14)


def test_power_zero(ep_params):
    assert emission_power(ep_params, 0.0) == 0.0


def test_power_reference_value(ep_params):
    watts = emission_power(ep_params, 10.0)
    assert watts == pytest.approx(2.864e-12, rel=1e-3)


def test_power_linear(ep_params):
    assert emission_power(ep_params, 6.4) == pytest.approx(
        2 * emission_power(ep_params, 3.2), rel=1e-12)


def test_power_effective_collection(ep_params):
    from eplase import derive
    ratio = emission_power(ep_params, 1.0, kappa="eff") / emission_power(ep_params, 1.0)
    assert ratio == pytest.approx(derive(ep_params).kappa_eff / ep_params.kappa_a)
    with pytest.raises(ParameterError):
        emission_power(ep_params, 1.0, kappa="b")
    with pytest.raises(ParameterError):
        emission_power(ep_params, -1.0)
