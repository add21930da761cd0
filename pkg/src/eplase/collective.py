"""Collective-spin (Dicke) coordinates and the low-excitation bright/dark modes.

The mean-field state maps onto one point of the Dicke ladder through

    Jz = N (pop - 1/2),
    |J| = sqrt(3N/4 + N(N-1)(Re corr + pair - pop + 1/4)),

and J follows from J(J+1) = |J|^2.  In the low-excitation (bosonic) picture
the symmetric superposition of all atoms is the only mode coupled to the
cavity; dephasing feeds its population into the N-1 dark superpositions,
giving the linear rate equations integrated by :func:`bright_dark`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .cumulant import CumulantState
from .errors import ClosureViolationError, ParameterError
from .params import TWO_PI, SystemParams

#: tolerated imaginary part of the pair correlation before warning
IM_CORR_TOL = 1e-6


@dataclass(frozen=True)
class DickePoint:
    jz: float       # <Jz> (hbar = 1)
    j_len: float    # sqrt(<J^2>)
    j_eff: float    # J solving J(J+1) = <J^2>
    m: float        # ladder projection, equals jz


def dicke_coordinates(steady: CumulantState, atom_count: int) -> DickePoint:
    """Map a converged steady state onto (J, M) ladder coordinates.

    Uses Re(corr); at resonance the imaginary part vanishes and a nonzero
    one (beyond IM_CORR_TOL) triggers a warning because the formula assumes
    a real pair correlation.  A radicand below -1e-9 N^2 means the closure
    broke the spin algebra and is raised as an error.
    """
    n = atom_count
    if abs(steady.corr.imag) > IM_CORR_TOL:
        warnings.warn(
            f"discarding Im<s1+ s2-> = {steady.corr.imag:.3e} in Dicke mapping",
            UserWarning, stacklevel=2)
    jz = n * (steady.pop - 0.5)
    radicand = 0.75 * n + n * (n - 1.0) * (
        steady.corr.real + steady.pair - steady.pop + 0.25)
    if radicand < -1e-9 * n * n:
        raise ClosureViolationError(
            f"negative <J^2> = {radicand:.3e} beyond closure slack")
    j_len = math.sqrt(max(radicand, 0.0))
    j_eff = 0.5 * (math.sqrt(1.0 + 4.0 * j_len**2) - 1.0)
    return DickePoint(jz=jz, j_len=j_len, j_eff=j_eff, m=jz)


def atomic_cavity_rate(params: SystemParams) -> float:
    """Per-atom loss rate through the eliminated cavities (cyclic Hz).

    kappa_ato = 4 g^2 (4G^2 + kappa_a kappa_b) / (kappa_a^2 kappa_b); the
    bright mode decays at N times this rate.
    """
    p = params
    if p.kappa_a <= 0 or p.kappa_b <= 0:
        raise ParameterError("atomic_cavity_rate requires kappa_a > 0 and kappa_b > 0")
    return (4.0 * p.coupling_g**2 * (4.0 * p.coupling_G**2 + p.kappa_a * p.kappa_b)
            / (p.kappa_a**2 * p.kappa_b))


@dataclass
class BrightDarkResult:
    t: np.ndarray
    n_bright: np.ndarray
    n_dark: np.ndarray
    bright_divergent: bool
    dark_divergent: bool


def bright_dark(params: SystemParams, t_end: float, n_out: int = 400) -> BrightDarkResult:
    """Integrate the low-excitation bright/dark-mode populations over [0, t_end].

        d n_b/dt = -(N kappa_ato + gamma + gamma_phi) n_b + eta n_b + eta
        d n_d/dt = -gamma n_d + gamma_phi n_b + eta n_d + (N - 1) eta

    Valid only while excitation stays low (caller's judgment); the pump
    terms make the linear system unstable for eta >= N kappa_ato + gamma +
    gamma_phi (bright) or eta >= gamma (dark), which is flagged on the
    result while the finite-time series is still returned.
    """
    if not t_end > 0:
        raise ParameterError(f"t_end must be > 0, got {t_end}")
    p = params
    k_ato = atomic_cavity_rate(p)
    n = p.atom_count
    bright_net = n * k_ato + p.gamma + p.gamma_phi - p.eta
    dark_net = p.gamma - p.eta
    A = TWO_PI * np.array([[-bright_net, 0.0], [p.gamma_phi, -dark_net]])
    c = TWO_PI * np.array([p.eta, (n - 1.0) * p.eta])
    sol = solve_ivp(lambda t, y: A @ y + c, (0.0, t_end), [0.0, 0.0],
                    method="LSODA", rtol=1e-10, atol=1e-14,
                    t_eval=np.linspace(0.0, t_end, n_out))
    if not sol.success:
        raise ParameterError(f"bright/dark integration failed: {sol.message}")
    return BrightDarkResult(
        t=sol.t, n_bright=sol.y[0], n_dark=sol.y[1],
        bright_divergent=bright_net <= 0.0, dark_divergent=dark_net <= 0.0)
