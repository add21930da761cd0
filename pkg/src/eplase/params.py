"""System parameters and derived quantities of the tunneling-coupled two-cavity laser.

All frequencies and rates are cyclic (the "/2pi" numbers), in Hz.  Dynamical
code multiplies by 2*pi internally so that time is in seconds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields, replace

from .errors import BadCavityWarning, EliminationUndefinedError, ParameterError

TWO_PI = 2.0 * math.pi

#: fields that must be non-negative and finite
_RATE_FIELDS = ("delta_a", "delta_b", "coupling_G", "coupling_g", "kappa_a",
                "kappa_b", "gamma", "eta", "gamma_phi", "nu_sigma")
_SIGNED_FIELDS = ("delta_a", "delta_b")  # detunings may be negative


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of one simulation instance (cyclic Hz).

    kappa_a, kappa_b : decay rates of the lasing cavity a and auxiliary cavity b
    coupling_G       : inter-cavity tunneling rate
    coupling_g       : single-atom coupling to cavity a
    atom_count       : number of two-level atoms N
    gamma, eta, gamma_phi : single-atom decay, incoherent pump, pure dephasing
    delta_a, delta_b : cavity detunings from the atomic transition
    nu_sigma         : absolute atomic transition frequency (clock metrics only)
    """

    kappa_a: float
    kappa_b: float
    coupling_G: float
    coupling_g: float
    atom_count: int
    gamma: float
    eta: float
    gamma_phi: float
    delta_a: float = 0.0
    delta_b: float = 0.0
    nu_sigma: float = 4.3e14

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from :class:`SystemParams` (cyclic Hz, C dimensionless).

    chi_gauge    : (kappa_a + kappa_b)/4, decay offset removed by the gauge transform
    g_ep         : (kappa_a - kappa_b)/4, tunneling strength at the exceptional point
    kappa_eff    : kappa_a + 4 G^2/kappa_b, cavity-a loss after eliminating cavity b
    cooperativity: C = 4 g^2 kappa_b / [(kappa_a kappa_b + 4 G^2) gamma]
    gamma_c      : Purcell-enhanced single-atom emission rate, C * gamma
    gamma_total  : dipole relaxation rate eta + gamma + gamma_phi
    eta_max      : upper lasing threshold N * gamma_c
    """

    chi_gauge: float
    g_ep: float
    kappa_eff: float
    cooperativity: float
    gamma_c: float
    gamma_total: float
    eta_max: float


def validate(params: SystemParams) -> SystemParams:
    """Check parameter invariants; return the (unchanged) parameters.

    Raises :class:`ParameterError` naming the offending field for negative
    rates, non-finite values, or ``atom_count < 1``.  Emits a non-fatal
    :class:`BadCavityWarning` when g*sqrt(N) > 0.1*kappa_a, i.e. when the
    collective coupling is no longer small against the linewidth of the
    cavity the atoms couple to.
    """
    for f in fields(params):
        v = getattr(params, f.name)
        if f.name == "atom_count":
            if not isinstance(v, (int,)) or isinstance(v, bool):
                raise ParameterError(f"atom_count must be an integer, got {v!r}")
            if v < 1:
                raise ParameterError(f"atom_count must be >= 1, got {v}")
            continue
        if not math.isfinite(v):
            raise ParameterError(f"{f.name} must be finite, got {v!r}")
        if f.name not in _SIGNED_FIELDS and v < 0:
            raise ParameterError(f"{f.name} must be >= 0, got {v}")
    g_root_n = params.coupling_g * math.sqrt(params.atom_count)
    if g_root_n > 0.1 * params.kappa_a:
        warnings.warn(
            f"bad-cavity condition degraded: g*sqrt(N) = {g_root_n:.4g} Hz "
            f"exceeds 0.1*kappa_a = {0.1 * params.kappa_a:.4g} Hz",
            BadCavityWarning, stacklevel=2)
    return params


def derive(params: SystemParams) -> DerivedParams:
    """Compute all derived rates and thresholds.

    Requires ``kappa_b > 0`` whenever ``coupling_G > 0`` (otherwise the
    elimination of cavity b is undefined).  With ``coupling_G == 0`` cavity b
    drops out exactly and the single-cavity limit kappa_eff = kappa_a,
    gamma_c = 4 g^2/kappa_a is used, valid even for ``kappa_b == 0``.
    """
    p = params
    chi = 0.25 * (p.kappa_a + p.kappa_b)
    g_ep = 0.25 * (p.kappa_a - p.kappa_b)
    if p.coupling_G == 0.0:
        if p.kappa_a <= 0:
            raise EliminationUndefinedError(
                "kappa_a = 0 with G = 0: no dissipative channel to eliminate")
        kappa_eff = p.kappa_a
        gamma_c = 4.0 * p.coupling_g**2 / p.kappa_a
    else:
        if p.kappa_b <= 0:
            raise EliminationUndefinedError(
                "kappa_b = 0 with G > 0: adiabatic elimination of cavity b undefined")
        kappa_eff = p.kappa_a + 4.0 * p.coupling_G**2 / p.kappa_b
        gamma_c = 4.0 * p.coupling_g**2 * p.kappa_b / (
            4.0 * p.coupling_G**2 + p.kappa_a * p.kappa_b)
    if p.gamma > 0:
        cooperativity = gamma_c / p.gamma
        gamma_c = cooperativity * p.gamma   # keeps gamma_c == C*gamma bit-exact
    else:
        cooperativity = math.inf
    return DerivedParams(
        chi_gauge=chi,
        g_ep=g_ep,
        kappa_eff=kappa_eff,
        cooperativity=cooperativity,
        gamma_c=gamma_c,
        gamma_total=p.eta + p.gamma + p.gamma_phi,
        eta_max=p.atom_count * gamma_c,
    )


def purcell_rate_variant(params: SystemParams) -> float:
    """Total-loss-weighted collective rate 4 g^2 (kappa_a+kappa_b)/(4G^2 + kappa_a kappa_b).

    Differs from ``gamma_c`` by the factor (kappa_a+kappa_b)/kappa_b.  Exposed
    alongside the canonical ``gamma_c`` because the two conventions are easy to
    conflate; ``gamma_c`` is the one every threshold/linewidth formula uses.
    """
    p = params
    denom = 4.0 * p.coupling_G**2 + p.kappa_a * p.kappa_b
    if denom <= 0:
        raise EliminationUndefinedError("4G^2 + kappa_a*kappa_b = 0")
    return 4.0 * p.coupling_g**2 * (p.kappa_a + p.kappa_b) / denom


def standard_params(regime: str = "ep", eta: float = 18.0) -> SystemParams:
    """Benchmark Sr-lattice parameter set; `regime` picks the tunneling strength.

    kappa_a/2pi = 160 kHz, kappa_b/2pi = 1 kHz, g/2pi = 2.41 Hz, N = 1e7,
    gamma/2pi = gamma_phi/2pi = 1 mHz.  G is set at the exceptional point
    ("ep", 39.75 kHz), a tenth of it ("ptbp", broken phase) or a hundred
    times it ("ptsp", symmetric phase).
    """
    g_ep = (160e3 - 1e3) / 4.0
    G = {"ep": g_ep, "ptbp": g_ep / 10.0, "ptsp": g_ep * 100.0}
    if regime not in G:
        raise ParameterError(f"unknown regime {regime!r}; use ep|ptbp|ptsp")
    return SystemParams(
        kappa_a=160e3, kappa_b=1e3, coupling_G=G[regime], coupling_g=2.41,
        atom_count=10**7, gamma=1e-3, eta=eta, gamma_phi=1e-3)


# ---------------------------------------------------------------------------
# flat key=value configuration files (INI/TOML-style, frequencies in Hz)

_PARAM_KEYS = {f.name for f in fields(SystemParams)}


def _parse_value(key: str, raw: str):
    raw = raw.strip().strip('"').strip("'")
    if key == "atom_count":
        return int(float(raw))
    return float(raw)


def load_config(path) -> dict:
    """Read a flat ``key = value`` file; keys must be SystemParams field names."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].split(";", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in _PARAM_KEYS:
                raise ParameterError(f"{path}:{lineno}: unknown parameter {key!r}")
            out[key] = _parse_value(key, raw)
    return out


def apply_overrides(base: SystemParams, assignments) -> SystemParams:
    """Apply ``key=value`` strings (CLI overrides) on top of a parameter set."""
    changes = {}
    for item in assignments:
        if "=" not in item:
            raise ParameterError(f"override must be key=value, got {item!r}")
        key, raw = (s.strip() for s in item.split("=", 1))
        if key not in _PARAM_KEYS:
            raise ParameterError(f"unknown parameter {key!r}")
        changes[key] = _parse_value(key, raw)
    return base.replace(**changes) if changes else base


def params_from_config(path=None, overrides=(), base: SystemParams | None = None) -> SystemParams:
    """Resolve a parameter set from an optional config file plus CLI overrides."""
    p = base if base is not None else standard_params()
    if path is not None:
        p = p.replace(**load_config(path))
    return validate(apply_overrides(p, overrides))
