"""Second-order mean-field (cumulant) equations of motion and steady states.

The closed set evolves eight expectation values: the photon numbers <a+a>,
<b+b>, the field correlator <a+b>, the atom-field correlators <a+s1->,
<b s1+>, the single-atom excited population <s1+ s1->, the pair correlation
<s1+ s2-> and the joint excitation <s1+ s1- s2+ s2->.  Conjugate partners
(<b+ s1->, <a s1+>, <a b+>) are never independent variables; they enter as
complex conjugates, which halves the system and enforces conjugation
symmetry structurally.

Parameters come in cyclic Hz; the equations run in angular units so time is
in seconds.  The nonlinear closure terms couple the excited population to
the field correlators (gain saturation), which is what pins the lasing
branch of the steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import _solver
from .errors import (ClosureViolationError, ConvergenceError, EliminationUndefinedError,
                     ParameterError, StiffnessError)
from .params import TWO_PI, SystemParams, derive

#: slack allowed on the physical bounds of a converged steady state
EPS_BOUND = 1e-6

#: default solver tolerances (see steady_state / integrate)
STEADY_TOL = 1e-8
REL_TOL = 1e-10
ABS_TOL = 1e-14

#: real-vector layout: scalar fields and (re, im) pairs of the complex ones
IDX_NA, IDX_NB = 0, 1
IDX_AB, IDX_AS, IDX_BS = 2, 4, 6
IDX_POP, IDX_CORR, IDX_PAIR = 8, 9, 11
DIM = 12
FIELD_GROUPS = ((0,), (1,), (2, 3), (4, 5), (6, 7), (8,), (9, 10), (11,))


@dataclass
class CumulantState:
    """One point of the closed second-order state (all entries dimensionless)."""

    n_a: float = 0.0        # <a+ a>
    n_b: float = 0.0        # <b+ b>
    ab: complex = 0.0j      # <a+ b>
    as_: complex = 0.0j     # <a+ s1->
    bs: complex = 0.0j      # <b s1+>
    pop: float = 0.0        # <s1+ s1->
    corr: complex = 0.0j    # <s1+ s2->
    pair: float = 0.0       # <s1+ s1- s2+ s2->

    def to_vector(self) -> np.ndarray:
        return np.array([
            self.n_a, self.n_b,
            self.ab.real, self.ab.imag,
            self.as_.real, self.as_.imag,
            self.bs.real, self.bs.imag,
            self.pop,
            self.corr.real, self.corr.imag,
            self.pair,
        ])

    @classmethod
    def from_vector(cls, x) -> "CumulantState":
        return cls(
            n_a=float(x[0]), n_b=float(x[1]),
            ab=complex(x[2], x[3]), as_=complex(x[4], x[5]), bs=complex(x[6], x[7]),
            pop=float(x[8]), corr=complex(x[9], x[10]), pair=float(x[11]),
        )


class Rates:
    """SystemParams converted once to angular units for the dynamical code."""

    __slots__ = ("ka", "kb", "G", "g", "gam", "eta", "gphi", "Da", "Db", "N", "Gamma")

    def __init__(self, p: SystemParams):
        self.ka = TWO_PI * p.kappa_a
        self.kb = TWO_PI * p.kappa_b
        self.G = TWO_PI * p.coupling_G
        self.g = TWO_PI * p.coupling_g
        self.gam = TWO_PI * p.gamma
        self.eta = TWO_PI * p.eta
        self.gphi = TWO_PI * p.gamma_phi
        self.Da = TWO_PI * p.delta_a
        self.Db = TWO_PI * p.delta_b
        self.N = p.atom_count
        self.Gamma = self.gam + self.eta + self.gphi


def rhs_vector(x: np.ndarray, r: Rates) -> np.ndarray:
    """Time derivative of the packed real state (1/s, angular convention)."""
    na, nb, abr, abi, asr, asi, bsr, bsi, pop, cr, ci, pair = x
    dD = r.Da - r.Db
    chi2 = 0.5 * (r.ka + r.kb)
    L_as = -0.5 * (r.Gamma + r.ka)
    L_bs = -0.5 * (r.Gamma + r.kb)
    g, G, N = r.g, r.G, r.N
    out = np.empty(DIM)
    out[0] = 2.0 * G * abi + 2.0 * g * N * asi - r.ka * na
    out[1] = -2.0 * G * abi - r.kb * nb
    out[2] = -chi2 * abr - dD * abi - N * g * bsi
    out[3] = -chi2 * abi + dD * abr + G * (nb - na) + N * g * bsr
    out[4] = L_as * asr - r.Da * asi + G * bsi - g * (N - 1) * ci
    out[5] = (L_as * asi + r.Da * asr + g * pop - g * na
              + 2.0 * g * pop * na + G * bsr + g * (N - 1) * cr)
    out[6] = L_bs * bsr + r.Db * bsi - g * (1.0 - 2.0 * pop) * abi - G * asi
    out[7] = L_bs * bsi - r.Db * bsr + g * (1.0 - 2.0 * pop) * abr - G * asr
    out[8] = r.eta - (r.gam + r.eta) * pop - 2.0 * g * asi
    out[9] = -r.Gamma * cr - 2.0 * g * asi + 4.0 * g * pop * asi
    out[10] = -r.Gamma * ci
    out[11] = -2.0 * r.gam * pair + 2.0 * r.eta * (pop - pair) - 4.0 * g * pop * asi
    return out


def jac_vector(x: np.ndarray, r: Rates) -> np.ndarray:
    """Analytic Jacobian of :func:`rhs_vector` (needed by Newton and the stiff integrator)."""
    na = x[0]
    abr, abi = x[2], x[3]
    asi = x[5]
    pop = x[8]
    dD = r.Da - r.Db
    chi2 = 0.5 * (r.ka + r.kb)
    L_as = -0.5 * (r.Gamma + r.ka)
    L_bs = -0.5 * (r.Gamma + r.kb)
    g, G, N = r.g, r.G, r.N
    J = np.zeros((DIM, DIM))
    J[0, 0] = -r.ka
    J[0, 3] = 2.0 * G
    J[0, 5] = 2.0 * g * N
    J[1, 1] = -r.kb
    J[1, 3] = -2.0 * G
    J[2, 2] = -chi2
    J[2, 3] = -dD
    J[2, 7] = -N * g
    J[3, 0] = -G
    J[3, 1] = G
    J[3, 2] = dD
    J[3, 3] = -chi2
    J[3, 6] = N * g
    J[4, 4] = L_as
    J[4, 5] = -r.Da
    J[4, 7] = G
    J[4, 10] = -g * (N - 1)
    J[5, 0] = -g + 2.0 * g * pop
    J[5, 4] = r.Da
    J[5, 5] = L_as
    J[5, 6] = G
    J[5, 8] = g + 2.0 * g * na
    J[5, 9] = g * (N - 1)
    J[6, 3] = -g * (1.0 - 2.0 * pop)
    J[6, 5] = -G
    J[6, 6] = L_bs
    J[6, 7] = r.Db
    J[6, 8] = 2.0 * g * abi
    J[7, 2] = g * (1.0 - 2.0 * pop)
    J[7, 4] = -G
    J[7, 6] = -r.Db
    J[7, 7] = L_bs
    J[7, 8] = -2.0 * g * abr
    J[8, 5] = -2.0 * g
    J[8, 8] = -(r.gam + r.eta)
    J[9, 5] = -2.0 * g + 4.0 * g * pop
    J[9, 8] = 4.0 * g * asi
    J[9, 9] = -r.Gamma
    J[10, 10] = -r.Gamma
    J[11, 5] = -4.0 * g * pop
    J[11, 8] = 2.0 * r.eta - 4.0 * g * asi
    J[11, 11] = -2.0 * r.gam - 2.0 * r.eta
    return J


def rhs(state: CumulantState, params: SystemParams) -> CumulantState:
    """Time derivative of a state (public wrapper over the packed form)."""
    x = state.to_vector()
    if not np.all(np.isfinite(x)):
        raise ParameterError("state contains a non-finite component")
    return CumulantState.from_vector(rhs_vector(x, Rates(params)))


# ---------------------------------------------------------------------------
# analytic steady state and seeds

@dataclass(frozen=True)
class AnalyticSteady:
    """Collective-regime closed-form fixed point; `valid` marks gamma < eta < N*gamma_c."""

    pop: float
    corr: float
    valid: bool


def analytic_steady(params: SystemParams) -> AnalyticSteady:
    """Closed-form excited population and pair correlation on the lasing branch.

    pop  = (N C gamma + Gamma) / (2 N C gamma)
    corr = [-(N C gamma + Gamma)(eta + gamma) + 2 N C gamma eta] / (2 (N C gamma)^2)

    Derived by dropping the non-collective source terms, so it only applies
    inside the enhanced-radiance window gamma < eta < N C gamma (the `valid`
    flag).  Outside that window the numbers are still returned but carry no
    physical meaning.
    """
    p = params
    d = derive(p)
    nc = d.eta_max          # N * gamma_c
    Gam = d.gamma_total
    if nc <= 0.0:
        pop = p.eta / (p.eta + p.gamma) if (p.eta + p.gamma) > 0 else 0.0
        return AnalyticSteady(pop=pop, corr=0.0, valid=False)
    pop = (nc + Gam) / (2.0 * nc)
    corr = (-(nc + Gam) * (p.eta + p.gamma) + 2.0 * nc * p.eta) / (2.0 * nc**2)
    return AnalyticSteady(pop=pop, corr=corr, valid=p.gamma < p.eta < nc)


def trivial_state(params: SystemParams) -> CumulantState:
    """Non-collective fixed point of the pump/decay balance (fields dark)."""
    p = params
    pop = p.eta / (p.eta + p.gamma) if (p.eta + p.gamma) > 0 else 0.0
    return CumulantState(pop=pop, pair=pop * pop)


def lasing_seed(params: SystemParams) -> CumulantState:
    """Full seed on the lasing branch, fields filled from the adiabatic relations.

    The atomic coherence fixes <a+ s1-> = 2i N g kappa_b corr/(4G^2+ka kb),
    from which photon numbers and the remaining correlators follow.
    """
    p = params
    d = derive(p)
    a = analytic_steady(p)
    denom = 4.0 * p.coupling_G**2 + p.kappa_a * p.kappa_b
    ratio_b = p.kappa_b / denom if denom > 0 else 1.0 / p.kappa_a
    as_ = 2j * p.atom_count * p.coupling_g * ratio_b * a.corr
    n_a = p.atom_count * d.eta_max * a.corr / d.kappa_eff
    if p.kappa_b > 0:
        bs = complex(np.conj(2j * p.coupling_G / p.kappa_b * as_))
        ab = -2j * p.coupling_G / p.kappa_b * n_a
        n_b = 4.0 * p.coupling_G**2 * n_a / p.kappa_b**2
    else:
        bs, ab, n_b = 0.0j, 0.0j, 0.0
    return CumulantState(n_a=n_a, n_b=n_b, ab=ab, as_=as_, bs=bs,
                         pop=a.pop, corr=complex(a.corr), pair=a.pop**2)


def check_physical(state: CumulantState, eps: float = EPS_BOUND) -> CumulantState:
    """Enforce the physical-bound slack of the closure; raise beyond it."""
    s = state
    checks = [
        ("n_a", s.n_a >= -eps), ("n_b", s.n_b >= -eps),
        ("pop", -eps <= s.pop <= 1.0 + eps),
        ("pair", -eps <= s.pair <= 1.0 + eps),
        ("pair<=pop", s.pair <= s.pop + eps),
    ]
    bad = [name for name, ok in checks if not ok]
    if bad:
        raise ClosureViolationError(
            f"steady state violates physical bounds beyond eps={eps:g}: {', '.join(bad)}")
    return state


# ---------------------------------------------------------------------------
# time integration

@dataclass
class Trajectory:
    """Time-stamped solution of the equations of motion."""

    t: np.ndarray
    y: np.ndarray           # shape (len(t), 12), packed real states

    def state(self, i: int) -> CumulantState:
        return CumulantState.from_vector(self.y[i])

    @property
    def final(self) -> CumulantState:
        return CumulantState.from_vector(self.y[-1])


def integrate(state0: CumulantState, params: SystemParams, t_end: float,
              rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL,
              n_out: int = 200) -> Trajectory:
    """Stiff adaptive integration of the cumulant equations over [0, t_end].

    The system spans rate scales from gamma (mHz) to kappa_a (100 kHz-ish),
    a stiffness ratio of order 1e8, and deep in the symmetric phase carries
    fast weakly damped oscillations (eigenvalues hugging the imaginary
    axis), so an A-stable Radau scheme with the analytic Jacobian is used;
    BDF would be step-limited by its stability wedge there.
    """
    if not t_end > 0:
        raise ParameterError(f"t_end must be > 0, got {t_end}")
    if not (0 < rel_tol < 1 and 0 < abs_tol < 1):
        raise ParameterError("tolerances must lie in (0, 1)")
    x0 = state0.to_vector()
    if not np.all(np.isfinite(x0)):
        raise ParameterError("initial state contains a non-finite component")
    r = Rates(params)
    sol = solve_ivp(
        lambda t, x: rhs_vector(x, r), (0.0, t_end), x0,
        method="Radau", jac=lambda t, x: jac_vector(x, r),
        rtol=rel_tol, atol=abs_tol,
        t_eval=np.linspace(0.0, t_end, n_out),
    )
    if not sol.success:
        eigs = np.linalg.eigvals(jac_vector(x0, r))
        scales = np.abs(eigs.real)
        raise StiffnessError(
            f"integrator failed: {sol.message}; Jacobian eigenvalue scales span "
            f"|Re| in [{scales.min():.3e}, {scales.max():.3e}] 1/s")
    return Trajectory(t=sol.t, y=sol.y.T)


# ---------------------------------------------------------------------------
# steady state

def steady_state(params: SystemParams, tol: float = STEADY_TOL,
                 branch: str = "auto") -> CumulantState:
    """Fixed point of the cumulant equations with scaled residual below `tol`.

    Strategy: damped Newton with the analytic Jacobian, seeded from the
    analytic lasing branch when it exists (else from the non-collective
    fixed point); if Newton stalls, relax by stiff time integration over
    progressively longer horizons and polish with Newton again.  Inside the
    lasing window both the collective and the non-collective branch solve
    rhs = 0; `branch` ("auto" | "lasing" | "trivial") picks the seed, with
    "auto" following the physically attracting branch.

    Deep in the symmetric phase the huge tunneling rate leaves an
    irreducible rounding floor on the scaled residual (correlators of order
    1e-6 against cancelling 1e7 Hz terms); a root resolved to machine
    precision (collapsed Newton step) is accepted there even above `tol`.

    Deterministic for fixed inputs.  Raises ConvergenceError with the final
    residual if the whole fallback chain fails.
    """
    r = Rates(params)
    try:
        analytic = analytic_steady(params)
    except EliminationUndefinedError:
        # undamped-but-coupled cavity b: no adiabatic branch, relax from the
        # non-collective fixed point instead
        analytic = AnalyticSteady(pop=0.0, corr=0.0, valid=False)
    if branch == "lasing":
        seed = lasing_seed(params)
    elif branch == "trivial":
        seed = trivial_state(params)
    elif branch == "auto":
        seed = lasing_seed(params) if (analytic.valid and analytic.corr > 0) \
            else trivial_state(params)
    else:
        raise ParameterError(f"branch must be auto|lasing|trivial, got {branch!r}")

    def fun(x):
        return rhs_vector(x, r)

    def jac(x):
        return jac_vector(x, r)

    x0 = seed.to_vector()
    # drop the inert b sector when it is fully decoupled and undamped,
    # otherwise the Jacobian is singular
    reduced = params.coupling_G == 0.0 and params.kappa_b == 0.0
    if reduced:
        keep = np.array([0, 4, 5, 8, 9, 10, 11])
        groups = ((0,), (1, 2), (3,), (4, 5), (6,))

        def fun(z):  # noqa: F811
            x = np.zeros(DIM)
            x[keep] = z
            return rhs_vector(x, r)[keep]

        def jac(z):  # noqa: F811
            x = np.zeros(DIM)
            x[keep] = z
            return jac_vector(x, r)[np.ix_(keep, keep)]

        x0 = x0[keep]
    else:
        groups = FIELD_GROUPS

    try:
        x, _ = _solver.newton_steady(fun, jac, x0, groups, tol)
    except ConvergenceError:
        x = _relax_and_polish(fun, jac, x0, groups, tol, r)
    if reduced:
        full = np.zeros(DIM)
        full[keep] = x
        x = full
    return check_physical(CumulantState.from_vector(x))


def _relax_and_polish(fun, jac, x0, groups, tol, r: Rates):
    """Integrate toward the attractor, then polish with Newton."""
    positive = [v for v in (r.gam + r.eta, r.Gamma, r.ka, r.kb) if v > 0]
    t_base = 10.0 / min(positive) if positive else 1.0
    x = np.array(x0, dtype=float)
    last_exc = None
    for factor in (1.0, 10.0, 100.0, 1000.0):
        sol = solve_ivp(lambda t, z: fun(z), (0.0, t_base * factor), x,
                        method="Radau", jac=lambda t, z: jac(z),
                        rtol=1e-10, atol=1e-14)
        if not sol.success:
            raise StiffnessError(f"relaxation integration failed: {sol.message}")
        x = sol.y[:, -1]
        try:
            x_new, _ = _solver.newton_steady(fun, jac, x, groups, tol)
            return x_new
        except ConvergenceError as exc:
            last_exc = exc
    raise ConvergenceError(
        "steady state not found: Newton and relaxation fallback both failed "
        f"(final scaled residual {last_exc.residual:.3e})",
        residual=last_exc.residual)


def residual(state: CumulantState, params: SystemParams) -> float:
    """Scaled residual of a candidate fixed point (the solver's convergence metric)."""
    x = state.to_vector()
    return _solver.scaled_residual(x, rhs_vector(x, Rates(params)), FIELD_GROUPS)
