"""Steady-state observables of a two-cavity PT-symmetric superradiant laser."""

__version__ = "0.1.0"

from .clock import ClockSpec, allan_deviation, emission_power, qpn_instability
from .collective import (BrightDarkResult, DickePoint, atomic_cavity_rate,
                         bright_dark, dicke_coordinates)
from .cumulant import (AnalyticSteady, CumulantState, Trajectory, analytic_steady,
                       integrate, lasing_seed, residual, rhs, steady_state,
                       trivial_state)
from .filtercav import (AugmentedState, FilterParams, FilterScan, LorentzFit,
                        PullingResult, augmented_rhs, default_filter,
                        linewidth_vs_atoms, pulling_factor, spectrum_scan,
                        steady_augmented)
from .lindblad import OracleConfig, evolve_exact, steady_exact
from .params import (DerivedParams, SystemParams, derive, purcell_rate_variant,
                     standard_params, validate)
from .ptsym import Phase, PtEigensystem, classify, eigensystem, phase_diagram
from .spectrum import (LinewidthReport, QrtSystem, build_qrt, decompose,
                       linewidth_analytic, linewidth_qrt, linewidth_s29,
                       spectrum_curve)
from .sweep import SweepSpec, SweepResult, evaluate_point, run_2d_sweep, run_sweep

__all__ = [
    "__version__",
    "SystemParams", "DerivedParams", "validate", "derive", "standard_params",
    "purcell_rate_variant",
    "Phase", "PtEigensystem", "eigensystem", "classify", "phase_diagram",
    "CumulantState", "AnalyticSteady", "Trajectory", "rhs", "integrate",
    "steady_state", "analytic_steady", "trivial_state", "lasing_seed", "residual",
    "OracleConfig", "evolve_exact", "steady_exact",
    "QrtSystem", "LinewidthReport", "build_qrt", "decompose", "spectrum_curve",
    "linewidth_qrt", "linewidth_analytic", "linewidth_s29",
    "FilterParams", "FilterScan", "AugmentedState", "LorentzFit", "PullingResult",
    "augmented_rhs", "steady_augmented", "default_filter", "spectrum_scan",
    "pulling_factor", "linewidth_vs_atoms",
    "DickePoint", "BrightDarkResult", "dicke_coordinates", "bright_dark",
    "atomic_cavity_rate",
    "ClockSpec", "qpn_instability", "allan_deviation", "emission_power",
    "SweepSpec", "SweepResult", "run_sweep", "run_2d_sweep", "evaluate_point",
]
