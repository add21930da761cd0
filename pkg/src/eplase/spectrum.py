"""Emission spectrum and linewidth from the quantum regression theorem.

The two-time correlator vector R(t) = (<a+(t)a(0)>, <s1+(t)a(0)>, <b+(t)a(0)>)
obeys dR/dt = T R with the 3x3 matrix built from the steady state.  The
spectrum is the one-sided Fourier transform of the first component,

    S(w) = 2 Re [ e1 . (i w I - T)^{-1} R(0) ],

a superposition of three Lorentzians at offsets Im(lambda_i) with widths
2|Re(lambda_i)| when T is diagonalizable.  Near a cavity exceptional point T
can become numerically defective; the biorthogonal expansion is then skipped
and the curve is evaluated through the resolvent directly, which is the
closed-form transform of the propagated correlator and needs no
eigenvector basis.

Internally everything is angular; the public grid and the returned widths
are cyclic Hz.  The equations of motion live in the frame rotating at the
atomic frequency, so the grid offsets w are measured from the atomic line
(identical to cavity-a offsets whenever delta_a = 0); on a detuned cavity
the emission stays pinned near the atoms and Im(lambda_slow) is the pulled
shift of the lasing peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .cumulant import CumulantState
from .errors import ClassificationError, ParameterError
from .params import TWO_PI, SystemParams, derive
from .ptsym import Phase, classify

#: relative eigenvalue gap below which the matrix may be defective
DEFECT_GAP_REL = 1e-6

#: eigenvector-matrix condition number confirming a defective (coalescing) pair
DEFECT_COND = 1e6

#: cyclic-frequency floor below which a composite FWHM is not bisected
GRID_FLOOR_HZ = 1e-9


@dataclass
class QrtSystem:
    """Coefficient matrix, initial conditions and (once decomposed) eigendata.

    matrix and eigenvalues are angular (rad/s); rows/columns are ordered
    (<a+(t)a(0)>, <s1+(t)a(0)>, <b+(t)a(0)>).  `weights` are the Lorentzian
    coefficients C_i = [|i> <i~| R(0)]_1; they stay None when `defective`.
    """

    matrix: np.ndarray
    r0: np.ndarray
    eigenvalues: np.ndarray | None = None
    right_vecs: np.ndarray | None = None    # columns |i>
    left_vecs: np.ndarray | None = None     # rows <i~|
    weights: np.ndarray | None = None
    defective: bool = False


@dataclass(frozen=True)
class LinewidthReport:
    """Per-pole widths 2|Re lambda_i| and the composite half-max width (cyclic Hz)."""

    per_pole: tuple
    composite_fwhm: float
    peak_offset: float      # composite-peak offset from the atomic frequency
    unresolved: bool = False


def build_qrt(params: SystemParams, steady: CumulantState) -> QrtSystem:
    """Assemble the regression matrix and initial conditions from a steady state.

    Row 1: (-kappa_a/2 + i delta_a, i N g, i G)
    Row 2: (i g (1 - 2 pop), -Gamma/2, 0)
    Row 3: (i G, 0, i delta_b - kappa_b/2)
    with R(0) = (<a+a>, conj<a+s1->, conj<a+b>) taken at the fixed point.
    """
    p = params
    ka, kb = TWO_PI * p.kappa_a, TWO_PI * p.kappa_b
    G, g = TWO_PI * p.coupling_G, TWO_PI * p.coupling_g
    Da, Db = TWO_PI * p.delta_a, TWO_PI * p.delta_b
    Gamma = TWO_PI * (p.eta + p.gamma + p.gamma_phi)
    T = np.array([
        [-0.5 * ka + 1j * Da, 1j * p.atom_count * g, 1j * G],
        [1j * g * (1.0 - 2.0 * steady.pop), -0.5 * Gamma, 0.0],
        [1j * G, 0.0, 1j * Db - 0.5 * kb],
    ], dtype=complex)
    r0 = np.array([steady.n_a, np.conj(steady.as_), np.conj(steady.ab)], dtype=complex)
    return QrtSystem(matrix=T, r0=r0)


def decompose(q: QrtSystem) -> QrtSystem:
    """Fill the biorthogonal eigendata; flag near-degeneracy instead of normalizing it.

    Left vectors are the rows of the inverse right-vector matrix, so
    <i~|j> = delta_ij holds to machine precision.  When the smallest pairwise
    eigenvalue gap drops below DEFECT_GAP_REL times the spectral radius and
    the eigenvectors are collapsing onto each other (ill-conditioned basis),
    the weights are not computed and downstream consumers use the resolvent
    path.  The conditioning check keeps diagonalizable systems with an
    exactly decoupled mode -- whose zero eigenvalue can sit arbitrarily
    close to the ultranarrow lasing pole -- on the ordinary weights path.
    """
    lam, R = np.linalg.eig(q.matrix)
    radius = float(np.abs(lam).max())
    gap = min(abs(lam[i] - lam[j]) for i in range(3) for j in range(i + 1, 3))
    if gap < DEFECT_GAP_REL * radius and np.linalg.cond(R) > DEFECT_COND:
        return replace(q, eigenvalues=lam, defective=True)
    L = np.linalg.inv(R)
    weights = R[0, :] * (L @ q.r0)
    return replace(q, eigenvalues=lam, right_vecs=R, left_vecs=L,
                   weights=weights, defective=False)


def _curve_angular(q: QrtSystem, w: np.ndarray) -> np.ndarray:
    """S at angular offsets `w` from the atomic frequency."""
    if q.defective or q.weights is None:
        eye = np.eye(3)
        out = np.empty(w.shape)
        for k, wk in np.ndenumerate(w):
            x = np.linalg.solve(1j * wk * eye - q.matrix, q.r0)
            out[k] = 2.0 * x[0].real
        return out
    lam, C = q.eigenvalues, q.weights
    out = np.zeros(w.shape)
    for i in range(3):
        if C[i] == 0.0:
            continue    # inert pole (decoupled mode): no spectral content
        out += (2.0 * C[i] / (1j * (w - lam[i].imag) - lam[i].real)).real
    return out


def dominant_pole(q: QrtSystem) -> int:
    """Index of the pole carrying the spectral peak.

    With weights available the tallest Lorentzian (|C| over its half-width)
    wins, which ignores inert zero-weight poles such as a fully decoupled
    cavity b; otherwise the narrowest pole is picked.
    """
    if q.eigenvalues is None:
        raise ParameterError("decompose the system first")
    lam = q.eigenvalues
    if q.weights is not None and np.abs(q.weights).max() > 0.0:
        heights = np.abs(q.weights) / np.maximum(np.abs(lam.real), 1e-300)
        return int(np.argmax(heights))
    return int(np.argmin(np.abs(lam.real)))


def spectrum_curve(q: QrtSystem, omega_grid) -> np.ndarray:
    """Sample S on a grid of cyclic-Hz offsets from the atomic frequency.

    The full complex Lorentzian superposition is used (weights keep their
    dispersive parts); integrating the curve over angular frequency returns
    2 pi <a+a>.
    """
    grid = np.asarray(omega_grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("omega_grid must be non-empty")
    if q.eigenvalues is None:
        q = decompose(q)
    return _curve_angular(q, TWO_PI * grid)


def linewidth_qrt(q: QrtSystem) -> LinewidthReport:
    """Per-pole widths plus the half-max width of the composite curve.

    The composite peak sits on the pole with the smallest |Re lambda|; its
    height is refined on a local grid and the half-max crossings are found by
    doubling-and-bisection on each side (the flanks need not be symmetric
    because the broad poles tilt the baseline).  Peaks narrower than
    GRID_FLOOR_HZ are reported from the pole value with `unresolved` set.
    """
    if q.eigenvalues is None:
        q = decompose(q)
    lam = q.eigenvalues
    per_pole = tuple(2.0 * abs(l.real) / TWO_PI for l in lam)
    i_dom = dominant_pole(q)
    half_width = abs(lam[i_dom].real)
    center = lam[i_dom].imag
    if per_pole[i_dom] < GRID_FLOOR_HZ:
        return LinewidthReport(per_pole=per_pole, composite_fwhm=per_pole[i_dom],
                               peak_offset=center / TWO_PI, unresolved=True)

    local = center + np.linspace(-1.0, 1.0, 41) * half_width
    vals = _curve_angular(q, local)
    peak_x = float(local[np.argmax(vals)])
    peak_s = float(vals.max())
    half = 0.5 * peak_s

    def crossing(sign: float) -> float:
        hi = 0.5 * half_width
        while _curve_angular(q, np.array([peak_x + sign * hi]))[0] > half:
            hi *= 2.0
            if hi > 1e9 * max(half_width, 1.0):
                raise ParameterError("half-max crossing not bracketed")
        lo = 0.0
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            if _curve_angular(q, np.array([peak_x + sign * mid]))[0] > half:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    fwhm = (crossing(1.0) + crossing(-1.0)) / TWO_PI
    return LinewidthReport(per_pole=per_pole, composite_fwhm=fwhm,
                           peak_offset=peak_x / TWO_PI, unresolved=False)


def linewidth_s29(params: SystemParams, pop: float) -> float:
    """First-order slow-pole width in terms of the excited population (cyclic Hz)."""
    p = params
    denom4 = 4.0 * p.coupling_G**2 + p.kappa_a * p.kappa_b
    if denom4 <= 0.0:
        raise ParameterError("4G^2 + kappa_a*kappa_b must be positive")
    Gamma = p.eta + p.gamma + p.gamma_phi
    inv_term = 4.0 * p.coupling_g**2 * p.atom_count * (1.0 - 2.0 * pop)
    num = denom4 * Gamma + inv_term * p.kappa_b
    den = denom4 + (p.kappa_a + p.kappa_b) * Gamma + inv_term
    return num / den


def linewidth_analytic(params: SystemParams, steady: CumulantState) -> float:
    """Closed-form emission linewidth from the steady inversion (cyclic Hz).

    Delta_nu = (Gamma - 2 Gamma_c Jz) / [1 + (ka+kb) Gamma/(4G^2+ka kb)
                                           - 2 Jz Gamma_c / kb]
    with Jz = N (pop - 1/2).  At the exceptional point the same expression
    collapses to the form with Gamma_c = 16 g^2 kb/(ka+kb)^2 and
    4 Gamma/(ka+kb); both are evaluated there and cross-checked.
    """
    p = params
    d = derive(p)
    denom4 = 4.0 * p.coupling_G**2 + p.kappa_a * p.kappa_b
    if denom4 <= 0.0:
        raise ParameterError(
            "analytic linewidth needs 4G^2 + kappa_a*kappa_b > 0 (two-cavity form)")
    jz = p.atom_count * (steady.pop - 0.5)
    Gamma = d.gamma_total
    value = (Gamma - 2.0 * d.gamma_c * jz) / (
        1.0 + (p.kappa_a + p.kappa_b) * Gamma / denom4
        - 2.0 * jz * d.gamma_c / p.kappa_b) if p.kappa_b > 0 else None
    if value is None:
        # kappa_b = 0 forces G = 0 upstream; the Jz/kb term has no meaning there
        raise ParameterError("analytic linewidth undefined for kappa_b = 0")

    try:
        at_ep = classify(p) is Phase.EXCEPTIONAL_POINT
    except ClassificationError:
        at_ep = False
    if at_ep:
        ksum = p.kappa_a + p.kappa_b
        gc_ep = 16.0 * p.coupling_g**2 * p.kappa_b / ksum**2
        ep_value = (Gamma - 2.0 * gc_ep * jz) / (
            1.0 + 4.0 * Gamma / ksum - 2.0 * jz * gc_ep / p.kappa_b)
        # identity up to the EP classification slack |G - g_ep|
        slack = 8.0 * abs(4.0 * p.coupling_G**2 - 4.0 * d.g_ep**2) / denom4
        assert math.isclose(ep_value, value, rel_tol=1e-9 + slack, abs_tol=1e-300), \
            f"EP linewidth specialization mismatch: {ep_value!r} vs {value!r}"
    return value
