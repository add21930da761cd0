"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """A physical parameter violates its constraints; message names the field."""


class EliminationUndefinedError(ValueError):
    """Adiabatic elimination of the auxiliary cavity is undefined (kappa_b = 0 with G > 0)."""


class ClassificationError(ValueError):
    """PT-phase classification requested off the symmetric-detuning line."""


class ConvergenceError(RuntimeError):
    """Steady-state solver did not converge; carries the final scaled residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StiffnessError(RuntimeError):
    """Time integrator failed (step-size underflow); message names the eigenvalue scales."""


class CutoffSaturationError(RuntimeError):
    """Photon population reached the Fock-space truncation; rerun with a larger cutoff."""


class ClosureViolationError(RuntimeError):
    """Second-order closure produced a state beyond the allowed physical-bound slack."""


class PeakFitError(RuntimeError):
    """Lorentzian peak fit failed or peak not bracketed; raw scan data is preserved on `.scan`."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan


class BadCavityWarning(UserWarning):
    """g*sqrt(N) is not small against the cavity linewidth; bad-cavity results may degrade."""


class FilterResolutionWarning(UserWarning):
    """Filter-cavity decay is not small against the linewidth being resolved."""
