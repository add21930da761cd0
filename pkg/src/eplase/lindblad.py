"""Exact Lindblad evolution of tiny instances, used to validate the closure.

Builds the full density-matrix generator for N <= 3 atoms and two truncated
boson modes (Hilbert dimension capped at 4096), vectorizes it as a sparse
matrix, and either integrates d(vec rho)/dt = L vec(rho) directly or solves
L x = 0 with a trace constraint for the steady state.  Dissipators: cavity
decays kappa_a and kappa_b, per-atom decay gamma, incoherent pump eta, and
pure dephasing gamma_phi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import CutoffSaturationError, ParameterError, StiffnessError
from .params import TWO_PI, SystemParams

MAX_DIM = 4096
MAX_ATOMS = 3

#: occupancy allowed in the top two Fock levels before a cutoff error fires
SATURATION_TOL = 1e-6


@dataclass(frozen=True)
class OracleConfig:
    params: SystemParams
    fock_cutoff_a: int = 4
    fock_cutoff_b: int = 4
    t_end: float = 40.0

    def __post_init__(self):
        if self.params.atom_count > MAX_ATOMS:
            raise ParameterError(f"oracle supports atom_count <= {MAX_ATOMS}")
        if self.fock_cutoff_a < 1 or self.fock_cutoff_b < 1:
            raise ParameterError("Fock cutoffs must be >= 1")
        if self.dim > MAX_DIM:
            raise ParameterError(f"Hilbert dimension {self.dim} exceeds {MAX_DIM}")

    @property
    def dim(self) -> int:
        return ((self.fock_cutoff_a + 1) * (self.fock_cutoff_b + 1)
                * 2**self.params.atom_count)


@dataclass
class OracleOperators:
    """Dense mode/atom operators on the composite Hilbert space."""

    a: np.ndarray
    b: np.ndarray
    sm: list[np.ndarray] = field(default_factory=list)   # lowering operator per atom

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def build_operators(config: OracleConfig) -> OracleOperators:
    ca, cb = config.fock_cutoff_a, config.fock_cutoff_b
    n_at = config.params.atom_count
    da = np.diag(np.sqrt(np.arange(1.0, ca + 1)), 1)
    db = np.diag(np.sqrt(np.arange(1.0, cb + 1)), 1)
    sm1 = np.array([[0.0, 1.0], [0.0, 0.0]])   # basis |g>, |e>
    eye2 = np.eye(2)

    def embed(ops_per_slot):
        out = ops_per_slot[0]
        for o in ops_per_slot[1:]:
            out = np.kron(out, o)
        return out

    ia, ib = np.eye(ca + 1), np.eye(cb + 1)
    a = embed([da, ib] + [eye2] * n_at)
    b = embed([ia, db] + [eye2] * n_at)
    sms = []
    for j in range(n_at):
        slots = [ia, ib] + [eye2] * n_at
        slots[2 + j] = sm1
        sms.append(embed(slots))
    return OracleOperators(a=a, b=b, sm=sms)


def hamiltonian(config: OracleConfig, ops: OracleOperators) -> np.ndarray:
    """Rotating-frame Hamiltonian (angular units, frame at the atomic frequency)."""
    p = config.params
    H = (TWO_PI * p.delta_a) * ops.a.conj().T @ ops.a \
        + (TWO_PI * p.delta_b) * ops.b.conj().T @ ops.b \
        + (TWO_PI * p.coupling_G) * (ops.a.conj().T @ ops.b + ops.a @ ops.b.conj().T)
    for s in ops.sm:
        H = H + (TWO_PI * p.coupling_g) * (ops.a.conj().T @ s + ops.a @ s.conj().T)
    return H


def collapse_operators(config: OracleConfig, ops: OracleOperators):
    """(rate, operator) pairs for all five dissipation channels (angular rates)."""
    p = config.params
    out = [(TWO_PI * p.kappa_a, ops.a), (TWO_PI * p.kappa_b, ops.b)]
    for s in ops.sm:
        out.append((TWO_PI * p.gamma, s))
        out.append((TWO_PI * p.eta, s.conj().T))
        out.append((TWO_PI * p.gamma_phi, s.conj().T @ s))
    return [(rate, op) for rate, op in out if rate > 0.0]


def liouvillian(H: np.ndarray, collapse) -> sp.csr_matrix:
    """Column-stacking vectorization of the Lindblad generator."""
    n = H.shape[0]
    eye = sp.identity(n, format="csr")
    Hs = sp.csr_matrix(H)
    L = -1j * (sp.kron(eye, Hs) - sp.kron(Hs.T, eye))
    for rate, op in collapse:
        Os = sp.csr_matrix(op)
        OdO = sp.csr_matrix(op.conj().T @ op)
        L = L + rate * (sp.kron(Os.conj(), Os)
                        - 0.5 * sp.kron(eye, OdO)
                        - 0.5 * sp.kron(OdO.T, eye))
    return L.tocsr()


def ground_state(config: OracleConfig) -> np.ndarray:
    """Density matrix of atomic ground times double vacuum."""
    dim = config.dim
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _unvec(x: np.ndarray, dim: int) -> np.ndarray:
    return x.reshape((dim, dim), order="F")


def _observables(rho: np.ndarray, ops: OracleOperators) -> dict:
    def ev(O):
        return complex(np.trace(O @ rho))

    n_at = len(ops.sm)
    out = {
        "n_a": ev(ops.a.conj().T @ ops.a).real,
        "n_b": ev(ops.b.conj().T @ ops.b).real,
        "pop": ev(ops.sm[0].conj().T @ ops.sm[0]).real,
    }
    out["corr"] = ev(ops.sm[0].conj().T @ ops.sm[1]) if n_at >= 2 else 0.0j
    return out


def _check_cutoffs(rho: np.ndarray, config: OracleConfig):
    """Error out when the top two Fock levels of either mode carry population."""
    ca, cb = config.fock_cutoff_a, config.fock_cutoff_b
    rest = 2**config.params.atom_count
    pops = np.real(np.diag(rho)).reshape(ca + 1, cb + 1, rest)
    # top two Fock levels, but never the vacuum itself
    top_a = pops[max(ca - 1, 1):, :, :].sum()
    top_b = pops[:, max(cb - 1, 1):, :].sum()
    if top_a > SATURATION_TOL or top_b > SATURATION_TOL:
        raise CutoffSaturationError(
            f"photon population within 2 levels of the cutoff "
            f"(mode a: {top_a:.2e}, mode b: {top_b:.2e}); increase the Fock cutoffs")


@dataclass
class OracleTimeSeries:
    t: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    pop: np.ndarray
    corr: np.ndarray
    trace: np.ndarray
    min_eigenvalue: np.ndarray


def evolve_exact(config: OracleConfig, n_out: int = 60,
                 rho0: np.ndarray | None = None,
                 hamiltonian_only: bool = False) -> OracleTimeSeries:
    """Integrate the vectorized master equation and sample observables.

    Starts from atomic ground times double vacuum unless `rho0` is given.
    `hamiltonian_only` drops every dissipator (for conservation checks).
    Trace and Hermiticity are preserved by construction; the returned series
    carries the trace and the minimum density-matrix eigenvalue at each
    sample so callers can verify.
    """
    ops = build_operators(config)
    H = hamiltonian(config, ops)
    collapse = [] if hamiltonian_only else collapse_operators(config, ops)
    L = liouvillian(H, collapse)
    dim = config.dim
    rho = ground_state(config) if rho0 is None else np.asarray(rho0, dtype=complex)

    # real-stacked form: BDF does not integrate complex systems
    Lr = sp.bmat([[L.real, -L.imag], [L.imag, L.real]], format="csc")
    x0 = np.concatenate([rho.flatten(order="F").real, rho.flatten(order="F").imag])
    t_eval = np.linspace(0.0, config.t_end, n_out)
    sol = solve_ivp(lambda t, x: Lr @ x, (0.0, config.t_end), x0,
                    method="BDF", jac=Lr, rtol=1e-8, atol=1e-12, t_eval=t_eval)
    if not sol.success:
        raise StiffnessError(f"oracle integration failed: {sol.message}")

    series = {k: [] for k in ("n_a", "n_b", "pop", "corr", "trace", "min_eigenvalue")}
    for k in range(sol.t.size):
        x = sol.y[:, k]
        rho_t = _unvec(x[:dim * dim] + 1j * x[dim * dim:], dim)
        obs = _observables(rho_t, ops)
        series["n_a"].append(obs["n_a"])
        series["n_b"].append(obs["n_b"])
        series["pop"].append(obs["pop"])
        series["corr"].append(obs["corr"])
        series["trace"].append(np.trace(rho_t).real)
        series["min_eigenvalue"].append(
            float(np.linalg.eigvalsh(0.5 * (rho_t + rho_t.conj().T)).min()))
    _check_cutoffs(_unvec(sol.y[:dim * dim, -1] + 1j * sol.y[dim * dim:, -1], dim), config)
    return OracleTimeSeries(
        t=sol.t,
        n_a=np.array(series["n_a"]), n_b=np.array(series["n_b"]),
        pop=np.array(series["pop"]), corr=np.array(series["corr"]),
        trace=np.array(series["trace"]),
        min_eigenvalue=np.array(series["min_eigenvalue"]))


def steady_exact(config: OracleConfig) -> dict:
    """Exact steady-state observables from the Liouvillian null space.

    Solves (L + w e0 tr^T) x = w e0, which pins trace(rho) = 1 while keeping
    the system sparse; w is a typical rate so the added row is well scaled.
    """
    ops = build_operators(config)
    L = liouvillian(hamiltonian(config, ops), collapse_operators(config, ops))
    dim = config.dim
    diag_idx = np.arange(dim) * dim + np.arange(dim)
    w = TWO_PI * max(config.params.kappa_a, config.params.kappa_b,
                     config.params.gamma, config.params.eta, 1.0)
    trace_row = sp.csr_matrix(
        (np.full(dim, w), (np.zeros(dim, dtype=int), diag_idx)),
        shape=(dim * dim, dim * dim))
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = w
    x = spla.spsolve((L + trace_row).tocsc(), rhs)
    rho = _unvec(x, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    _check_cutoffs(rho, config)
    out = _observables(rho, ops)
    out["trace_residual"] = abs(np.trace(rho).real - 1.0)
    out["lindblad_residual"] = float(np.abs(L @ rho.flatten(order="F")).max())
    return out
