"""Eigenstructure and phase classification of the coupled-cavity subsystem.

After removing the mean decay chi = (kappa_a+kappa_b)/4 by a gauge transform,
the two tunneling-coupled dissipative cavities are governed by the complex
symmetric 2x2 matrix

    M = [[delta_a + i q, G], [G, delta_b - i q]],   q = (kappa_b - kappa_a)/4,

whose spectrum is real in the symmetric phase (G > g_ep), imaginary in the
broken phase (G < g_ep) and defective at the exceptional point G = g_ep,
with g_ep = (kappa_a - kappa_b)/4.  Everything here is in cyclic Hz.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassificationError, ParameterError
from .params import SystemParams, derive

#: relative half-width of the band around g_ep classified as the EP
EP_TOL_REL = 1e-9


class Phase(enum.Enum):
    PT_SYMMETRIC = "PTSP"
    EXCEPTIONAL_POINT = "EP"
    PT_BROKEN = "PTBP"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PtEigensystem:
    """Eigenpairs of the effective 2x2 cavity matrix (cyclic Hz).

    `phase` is filled only on the symmetric-detuning line (None otherwise);
    `defective` marks the coalesced case where both eigenvectors are the
    single Jordan vector and no biorthogonal normalization exists.
    """

    lambda_plus: complex
    lambda_minus: complex
    vec_plus: np.ndarray
    vec_minus: np.ndarray
    phase: Phase | None
    ep_distance: float
    defective: bool = False


def classify(params: SystemParams, tol_rel: float = EP_TOL_REL) -> Phase:
    """Classify the PT phase from G against g_ep = (kappa_a - kappa_b)/4.

    Defined only for delta_a == delta_b; raises ClassificationError otherwise.
    """
    if params.delta_a != params.delta_b:
        raise ClassificationError(
            "phase classification requires delta_a == delta_b "
            f"(got {params.delta_a} and {params.delta_b})")
    g_ep = derive(params).g_ep
    if abs(params.coupling_G - g_ep) <= tol_rel * abs(g_ep):
        return Phase.EXCEPTIONAL_POINT
    return Phase.PT_SYMMETRIC if params.coupling_G > g_ep else Phase.PT_BROKEN


def eigensystem(params: SystemParams, tol_rel: float = EP_TOL_REL) -> PtEigensystem:
    """Both eigenpairs of the gauge-transformed cavity matrix.

    On the resonant line (delta_a = delta_b = 0) the closed forms are used:
    eigenvalues +-sqrt(G^2 - g_ep^2), eigenvectors (1, e^{+-i phi})-type in
    the symmetric phase and (1, i e^{+-phi})-type in the broken phase, the
    pair coalescing onto (1, i)/sqrt(2) at the EP.  General detunings fall
    back to the quadratic formula.  Eigenvectors have unit Euclidean norm;
    they are mutually orthogonal under the unconjugated bilinear product
    v.w (the natural pairing for a complex symmetric matrix), not under the
    Hermitian one.
    """
    p = params
    d = derive(p)
    g_ep = d.g_ep
    ep_distance = p.coupling_G - g_ep
    phase = classify(p, tol_rel) if p.delta_a == p.delta_b else None

    if p.delta_a == p.delta_b == 0.0:
        lam_p, lam_m, v_p, v_m, defective = _resonant_eigensystem(p.coupling_G, g_ep, phase)
    else:
        lam_p, lam_m, v_p, v_m, defective = _general_eigensystem(p, tol_rel)

    return PtEigensystem(lambda_plus=lam_p, lambda_minus=lam_m,
                         vec_plus=v_p, vec_minus=v_m, phase=phase,
                         ep_distance=ep_distance, defective=defective)


def _resonant_eigensystem(G, g_ep, phase):
    s2 = 1.0 / math.sqrt(2.0)
    if G == 0.0 and g_ep == 0.0:
        # zero matrix: degenerate but diagonalizable
        return 0.0 + 0.0j, 0.0 + 0.0j, np.array([1.0 + 0j, 0j]), np.array([0j, 1.0 + 0j]), False
    if phase is Phase.EXCEPTIONAL_POINT:
        v = np.array([s2, 1j * s2]) if g_ep >= 0 else np.array([s2, -1j * s2])
        return 0.0 + 0.0j, 0.0 + 0.0j, v, v.copy(), True
    if G == 0.0:
        # diagonal matrix: modes do not hybridize
        lam = 1j * abs(g_ep)
        v_p = np.array([1.0 + 0j, 0.0 + 0j]) if g_ep <= 0 else np.array([0.0 + 0j, 1.0 + 0j])
        v_m = np.array([0.0 + 0j, 1.0 + 0j]) if g_ep <= 0 else np.array([1.0 + 0j, 0.0 + 0j])
        return lam, -lam, v_p, v_m, False
    q = abs(g_ep)
    if G > q:  # symmetric phase: real spectrum
        lam = math.sqrt(G**2 - q**2)
        phi = math.asin(q / G) * (1 if g_ep >= 0 else -1)
        v_p = s2 * np.array([1.0, cmath.exp(1j * phi)])
        v_m = s2 * np.array([1.0, -cmath.exp(-1j * phi)])
        return complex(lam), complex(-lam), v_p, v_m, False
    # broken phase: imaginary spectrum
    lam = 1j * math.sqrt(q**2 - G**2)
    phi = math.acosh(q / G)
    if g_ep >= 0:
        v_p = s2_norm(np.array([1.0, 1j * math.exp(phi)]))
        v_m = s2_norm(np.array([1.0, 1j * math.exp(-phi)]))
    else:
        v_p = s2_norm(np.array([1.0, -1j * math.exp(-phi)]))
        v_m = s2_norm(np.array([1.0, -1j * math.exp(phi)]))
    return lam, -lam, v_p, v_m, False


def s2_norm(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _general_eigensystem(p: SystemParams, tol_rel):
    q = 0.25 * (p.kappa_b - p.kappa_a)
    m00 = p.delta_a + 1j * q
    m11 = p.delta_b - 1j * q
    G = p.coupling_G
    tr = m00 + m11
    disc = cmath.sqrt(0.25 * (m00 - m11)**2 + G**2)
    lam_p = 0.5 * tr + disc
    lam_m = 0.5 * tr - disc
    scale = max(abs(lam_p), abs(lam_m), abs(m00), abs(m11), G, 1e-300)
    if abs(lam_p - lam_m) <= 2.0 * tol_rel * scale:
        v = _null_vector(m00 - lam_p, G)
        return lam_p, lam_m, v, v.copy(), True
    return lam_p, lam_m, _null_vector(m00 - lam_p, G), _null_vector(m00 - lam_m, G), False


def _null_vector(a, G):
    # solve (a, G; G, *) v = 0 rows; pick the numerically safer expression
    if abs(G) >= abs(a):
        v = np.array([1.0 + 0j, -a / G]) if G != 0 else np.array([1.0 + 0j, 0j])
    else:
        v = np.array([-G / a, 1.0 + 0j])
    return v / np.linalg.norm(v)


def phase_diagram(params: SystemParams, g_grid) -> list[dict]:
    """Eigenvalue branches versus tunneling strength G, one row per grid point.

    Rows carry G_Hz, re/im of both branches, and the phase label, ready for
    direct plotting.  The grid must be non-empty and ascending.
    """
    g_grid = list(g_grid)
    if not g_grid:
        raise ParameterError("g_grid must be non-empty")
    if any(b < a for a, b in zip(g_grid, g_grid[1:])):
        raise ParameterError("g_grid must be ascending")
    rows = []
    for G in g_grid:
        e = eigensystem(params.replace(coupling_G=float(G)))
        rows.append({
            "G_Hz": float(G),
            "re_plus": e.lambda_plus.real, "im_plus": e.lambda_plus.imag,
            "re_minus": e.lambda_minus.real, "im_minus": e.lambda_minus.imag,
            "phase": str(e.phase),
        })
    return rows
