"""Clock-performance metrics: emission power, projection-noise floor, Allan deviation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar

from .errors import ParameterError
from .params import TWO_PI, SystemParams, derive


@dataclass(frozen=True)
class ClockSpec:
    """Inputs of the projection-noise instability estimate.

    linewidth and nu_clock are cyclic Hz (only their ratio enters);
    chi_shape is the line-shape factor, near unity.
    """

    linewidth: float
    nu_clock: float
    atom_count: int
    t_cycle: float = 1.0
    tau: float = 1.0
    chi_shape: float = 1.0

    def __post_init__(self):
        for name in ("linewidth", "nu_clock", "atom_count", "t_cycle", "tau", "chi_shape"):
            v = getattr(self, name)
            if not v > 0:
                raise ParameterError(f"{name} must be positive, got {v}")


def qpn_instability(spec: ClockSpec) -> float:
    """Quantum-projection-noise-limited fractional instability.

    sigma = chi * (linewidth / nu_clock) / pi * sqrt(T_c / (N tau)).
    """
    return (spec.chi_shape * spec.linewidth / (math.pi * spec.nu_clock)
            * math.sqrt(spec.t_cycle / (spec.atom_count * spec.tau)))


def allan_deviation(freq_series, nu_clock: float) -> float:
    """Two-sample fractional deviation of consecutive frequency estimates.

    sigma = sqrt( sum_n (w_{n+1} - w_n)^2 / (2 (L-1) nu^2) ) over the
    L-point series; invariant under a constant frequency offset.
    """
    w = np.asarray(freq_series, dtype=float)
    if w.size < 2:
        raise ParameterError(f"frequency series needs >= 2 points, got {w.size}")
    if not nu_clock > 0:
        raise ParameterError("nu_clock must be positive")
    diffs = np.diff(w)
    return math.sqrt(float(np.sum(diffs**2)) / (2.0 * (w.size - 1) * nu_clock**2))


def emission_power(params: SystemParams, n_a: float, kappa: str = "a") -> float:
    """Output power hbar * omega_a * kappa * <a+a> in watts.

    The collection rate is kappa_a by default (emission is observed through
    cavity a); pass kappa="eff" to use the eliminated-cavity total loss
    instead.
    """
    if n_a < 0:
        raise ParameterError(f"n_a must be >= 0, got {n_a}")
    if kappa == "a":
        k = params.kappa_a
    elif kappa == "eff":
        k = derive(params).kappa_eff
    else:
        raise ParameterError(f"kappa must be 'a' or 'eff', got {kappa!r}")
    omega_a = TWO_PI * (params.nu_sigma + params.delta_a)
    return hbar * omega_a * (TWO_PI * k) * n_a
