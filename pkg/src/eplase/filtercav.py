"""Spectrum measurement through a weakly coupled filter cavity.

A probe mode f (decay kappa_f, detuning delta from the atoms) is attached to
cavity a with coupling beta.  Its steady photon number <f+f> versus delta
traces the emission spectrum convolved with the filter Lorentzian, so a
Lorentzian fit of the scan gives the line center and, after subtracting
kappa_f (Lorentzian widths add under convolution), the emission linewidth.
The same machinery yields the cavity-pulling slope d(omega_s)/d(omega_a) and
the linewidth sensitivity to atom number.

The probe must stay passive: kappa_f well below the linewidth to resolve it,
and beta small enough that the filter does not hybridize with the
ultranarrow lasing line (the defaults tie beta to sqrt(kappa_f * linewidth),
which keeps both the back-action on <a+a> and the width distortion
negligible).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from . import _solver
from .cumulant import (DIM, FIELD_GROUPS, STEADY_TOL, CumulantState, Rates,
                       jac_vector, rhs_vector, steady_state)
from .errors import (ConvergenceError, FilterResolutionWarning, ParameterError,
                     PeakFitError)
from .params import TWO_PI, SystemParams, derive
from .spectrum import build_qrt, decompose, dominant_pole, linewidth_analytic

AUG_DIM = 19
IDX_NF, IDX_AF, IDX_BF, IDX_SF = 12, 13, 15, 17
AUG_GROUPS = FIELD_GROUPS + ((12,), (13, 14), (15, 16), (17, 18))

#: floor on the filter decay rate (cyclic Hz)
KAPPA_F_FLOOR = 1e-9

#: coarse/refined scan layout (spans in units of the effective width)
COARSE_SPAN, COARSE_POINTS = 20.0, 31
REFINE_SPAN, REFINE_POINTS = 4.0, 61

#: acceptable rms fit residual relative to the peak amplitude
FIT_RESIDUAL_MAX = 0.10


@dataclass(frozen=True)
class FilterParams:
    """Probe-cavity parameters (cyclic Hz): detuning from the atoms, coupling, decay."""

    delta_f: float
    beta: float
    kappa_f: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if not self.kappa_f > 0:
            raise ParameterError(f"kappa_f must be > 0, got {self.kappa_f}")

    def replace(self, **kw) -> "FilterParams":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass
class AugmentedState:
    """Cumulant state extended by the filter block <f+f>, <a+f>, <b+f>, <s1+f>."""

    base: CumulantState
    n_f: float = 0.0
    af: complex = 0.0j
    bf: complex = 0.0j
    sf: complex = 0.0j

    def to_vector(self) -> np.ndarray:
        out = np.empty(AUG_DIM)
        out[:DIM] = self.base.to_vector()
        out[IDX_NF] = self.n_f
        out[IDX_AF], out[IDX_AF + 1] = self.af.real, self.af.imag
        out[IDX_BF], out[IDX_BF + 1] = self.bf.real, self.bf.imag
        out[IDX_SF], out[IDX_SF + 1] = self.sf.real, self.sf.imag
        return out

    @classmethod
    def from_vector(cls, x) -> "AugmentedState":
        return cls(base=CumulantState.from_vector(x[:DIM]),
                   n_f=float(x[IDX_NF]),
                   af=complex(x[IDX_AF], x[IDX_AF + 1]),
                   bf=complex(x[IDX_BF], x[IDX_BF + 1]),
                   sf=complex(x[IDX_SF], x[IDX_SF + 1]))


class _FilterRates:
    __slots__ = ("beta", "kf", "delta")

    def __init__(self, f: FilterParams):
        self.beta = TWO_PI * f.beta
        self.kf = TWO_PI * f.kappa_f
        self.delta = TWO_PI * f.delta_f


def aug_rhs_vector(x: np.ndarray, r: Rates, fr: _FilterRates) -> np.ndarray:
    """Filter equations plus the beta-modified base equations.

    The base block gains 2 beta Im<a+f> in d<a+a>/dt, i beta conj<b+f> in
    d<a+b>/dt and i beta conj<s1+f> in d<a+s1->/dt; conjugate partners are
    never independent variables.
    """
    na = x[0]
    abr, abi = x[2], x[3]
    asr, asi = x[4], x[5]
    pop = x[8]
    nf = x[IDX_NF]
    afr, afi = x[IDX_AF], x[IDX_AF + 1]
    bfr, bfi = x[IDX_BF], x[IDX_BF + 1]
    sfr, sfi = x[IDX_SF], x[IDX_SF + 1]
    beta, kf, delta = fr.beta, fr.kf, fr.delta
    out = np.empty(AUG_DIM)
    out[:DIM] = rhs_vector(x[:DIM], r)
    out[0] += 2.0 * beta * afi
    out[2] += beta * bfi
    out[3] += beta * bfr
    out[4] += beta * sfi
    out[5] += beta * sfr
    L_af = -0.5 * (r.ka + kf)
    L_bf = -0.5 * (r.kb + kf)
    L_sf = -0.5 * (r.Gamma + kf)
    D_af = r.Da - delta
    D_bf = r.Db - delta
    g, G, N = r.g, r.G, r.N
    out[IDX_NF] = -2.0 * beta * afi - kf * nf
    out[IDX_AF] = L_af * afr - D_af * afi - G * bfi - N * g * sfi
    out[IDX_AF + 1] = L_af * afi + D_af * afr + G * bfr + beta * (nf - na) + N * g * sfr
    out[IDX_BF] = L_bf * bfr - D_bf * bfi - G * afi - beta * abi
    out[IDX_BF + 1] = L_bf * bfi + D_bf * bfr + G * afr - beta * abr
    out[IDX_SF] = L_sf * sfr + delta * sfi - g * (1.0 - 2.0 * pop) * afi - beta * asi
    out[IDX_SF + 1] = L_sf * sfi - delta * sfr + g * (1.0 - 2.0 * pop) * afr - beta * asr
    return out


def aug_jac_vector(x: np.ndarray, r: Rates, fr: _FilterRates) -> np.ndarray:
    abr, abi = x[2], x[3]
    pop = x[8]
    afr, afi = x[IDX_AF], x[IDX_AF + 1]
    beta, kf, delta = fr.beta, fr.kf, fr.delta
    g, G, N = r.g, r.G, r.N
    J = np.zeros((AUG_DIM, AUG_DIM))
    J[:DIM, :DIM] = jac_vector(x[:DIM], r)
    J[0, IDX_AF + 1] += 2.0 * beta
    J[2, IDX_BF + 1] += beta
    J[3, IDX_BF] += beta
    J[4, IDX_SF + 1] += beta
    J[5, IDX_SF] += beta
    L_af = -0.5 * (r.ka + kf)
    L_bf = -0.5 * (r.kb + kf)
    L_sf = -0.5 * (r.Gamma + kf)
    D_af = r.Da - delta
    D_bf = r.Db - delta
    J[IDX_NF, IDX_AF + 1] = -2.0 * beta
    J[IDX_NF, IDX_NF] = -kf
    J[IDX_AF, IDX_AF] = L_af
    J[IDX_AF, IDX_AF + 1] = -D_af
    J[IDX_AF, IDX_BF + 1] = -G
    J[IDX_AF, IDX_SF + 1] = -N * g
    J[IDX_AF + 1, IDX_AF + 1] = L_af
    J[IDX_AF + 1, IDX_AF] = D_af
    J[IDX_AF + 1, IDX_BF] = G
    J[IDX_AF + 1, IDX_NF] = beta
    J[IDX_AF + 1, 0] = -beta
    J[IDX_AF + 1, IDX_SF] = N * g
    J[IDX_BF, IDX_BF] = L_bf
    J[IDX_BF, IDX_BF + 1] = -D_bf
    J[IDX_BF, IDX_AF + 1] = -G
    J[IDX_BF, 3] = -beta
    J[IDX_BF + 1, IDX_BF + 1] = L_bf
    J[IDX_BF + 1, IDX_BF] = D_bf
    J[IDX_BF + 1, IDX_AF] = G
    J[IDX_BF + 1, 2] = -beta
    J[IDX_SF, IDX_SF] = L_sf
    J[IDX_SF, IDX_SF + 1] = delta
    J[IDX_SF, IDX_AF + 1] = -g * (1.0 - 2.0 * pop)
    J[IDX_SF, 8] = 2.0 * g * afi
    J[IDX_SF, 5] = -beta
    J[IDX_SF + 1, IDX_SF + 1] = L_sf
    J[IDX_SF + 1, IDX_SF] = -delta
    J[IDX_SF + 1, IDX_AF] = g * (1.0 - 2.0 * pop)
    J[IDX_SF + 1, 8] = -2.0 * g * afr
    J[IDX_SF + 1, 4] = -beta
    return J


def augmented_rhs(state: AugmentedState, params: SystemParams,
                  filt: FilterParams) -> AugmentedState:
    """Time derivative of the filter-augmented state (public wrapper)."""
    x = state.to_vector()
    if not np.all(np.isfinite(x)):
        raise ParameterError("state contains a non-finite component")
    dx = aug_rhs_vector(x, Rates(params), _FilterRates(filt))
    return AugmentedState.from_vector(dx)


def steady_augmented(params: SystemParams, filt: FilterParams,
                     tol: float = STEADY_TOL,
                     base: CumulantState | None = None) -> AugmentedState:
    """Fixed point of the augmented system, seeded from the filter-free one."""
    if base is None:
        base = steady_state(params, tol=tol)
    r = Rates(params)
    fr = _FilterRates(filt)
    x0 = AugmentedState(base=base).to_vector()
    x, _ = _solver.newton_steady(
        lambda x_: aug_rhs_vector(x_, r, fr),
        lambda x_: aug_jac_vector(x_, r, fr),
        x0, AUG_GROUPS, tol)
    return AugmentedState.from_vector(x)


# ---------------------------------------------------------------------------
# line estimate and probe defaults

def estimate_line(params: SystemParams, steady: CumulantState) -> tuple[float, float]:
    """(center, width) of the lasing line in cyclic Hz relative to the atoms.

    Both come from the slow pole of the regression matrix, whose imaginary
    part is the pulled line position in the atomic frame.  On resonance the
    analytic closed form replaces the pole width (they agree well within the
    scan margins); off resonance the closed form does not apply.
    """
    q = decompose(build_qrt(params, steady))
    slow = q.eigenvalues[dominant_pole(q)]
    center = slow.imag / TWO_PI
    width = 2.0 * abs(slow.real) / TWO_PI
    if params.delta_a == params.delta_b == 0.0:
        try:
            width = linewidth_analytic(params, steady)
        except ParameterError:
            pass    # single-cavity configuration: keep the pole width
    return center, abs(width)


def default_filter(params: SystemParams, linewidth_estimate: float,
                   delta_f: float = 0.0) -> FilterParams:
    """Probe defaults scaled to the line being resolved.

    kappa_f = max(estimate/10, 1e-9 Hz) resolves the line; beta is capped at
    sqrt(kappa_f * estimate)/10 (never above g/100) so the probe stays in
    the weak-coupling regime and does not broaden the measured line.
    """
    kappa_f = max(linewidth_estimate / 10.0, KAPPA_F_FLOOR)
    beta = min(params.coupling_g / 100.0,
               math.sqrt(kappa_f * max(linewidth_estimate, KAPPA_F_FLOOR)) / 10.0)
    return FilterParams(delta_f=delta_f, beta=beta, kappa_f=kappa_f)


# ---------------------------------------------------------------------------
# scanning

@dataclass(frozen=True)
class LorentzFit:
    peak_freq: float
    fwhm_raw: float
    fwhm_deconvolved: float
    amplitude: float
    offset: float
    fit_residual: float     # rms residual / amplitude


@dataclass
class FilterScan:
    deltas: np.ndarray
    n_f: np.ndarray
    n_a: np.ndarray
    filter_params: FilterParams
    fit: LorentzFit | None = None


def _scan_point(args):
    params, filt_fields, delta, base_vec, tol = args
    filt = FilterParams(delta_f=delta, beta=filt_fields[0], kappa_f=filt_fields[1])
    base = CumulantState.from_vector(np.asarray(base_vec))
    aug = steady_augmented(params, filt, tol=tol, base=base)
    return aug.n_f, aug.base.n_a


def _run_points(params, filt, deltas, base, tol, jobs):
    tasks = [(params, (filt.beta, filt.kappa_f), float(d), base.to_vector(), tol)
             for d in deltas]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_scan_point, tasks))
    else:
        results = [_scan_point(t) for t in tasks]
    nf = np.array([r[0] for r in results])
    na = np.array([r[1] for r in results])
    return nf, na


def _lorentzian(d, amp, d0, w, c):
    return amp * (0.5 * w)**2 / ((d - d0)**2 + (0.5 * w)**2) + c


def fit_lorentzian(deltas: np.ndarray, values: np.ndarray,
                   width_guess: float) -> tuple[float, float, float, float, float]:
    """Least-squares Lorentzian + constant offset; returns (amp, d0, w, c, rms/amp)."""
    lo = float(values.min())
    amp0 = float(values.max()) - lo
    if amp0 <= 0:
        raise PeakFitError("scan has no peak above the baseline")
    d0 = float(deltas[np.argmax(values)])
    p0 = (amp0, d0, max(width_guess, 1e-300), lo)
    try:
        popt, _ = curve_fit(
            _lorentzian, deltas, values, p0=p0, maxfev=20000,
            bounds=([0.0, -np.inf, 0.0, -np.inf], [np.inf, np.inf, np.inf, np.inf]))
    except RuntimeError as exc:
        raise PeakFitError(f"Lorentzian fit did not converge: {exc}") from exc
    amp, d0, w, c = (float(v) for v in popt)
    rms = float(np.sqrt(np.mean((_lorentzian(deltas, *popt) - values)**2)))
    return amp, d0, w, c, rms / amp if amp > 0 else math.inf


def spectrum_scan(params: SystemParams, filter_base: FilterParams | None = None,
                  delta_grid=None, tol: float = STEADY_TOL, jobs: int = 1,
                  branch: str = "auto") -> FilterScan:
    """Map the emission line by scanning the filter detuning.

    With `delta_grid` omitted, a coarse bracketing pass (COARSE_POINTS over
    +-COARSE_SPAN effective widths around the estimated line center, the
    estimate coming from the regression poles) is refined around its peak
    (REFINE_POINTS over +-REFINE_SPAN widths); an explicit grid is used
    verbatim and must bracket the peak.  The Lorentzian fit must reproduce
    the scan to FIT_RESIDUAL_MAX of the peak amplitude, otherwise the raw
    data is preserved on the raised error.  fwhm_deconvolved subtracts
    kappa_f from the fitted width (Lorentzian convolution adds widths).
    """
    base = steady_state(params, tol=tol, branch=branch)
    center, est = estimate_line(params, base)
    if filter_base is None:
        filt = default_filter(params, est)
    else:
        filt = filter_base
        if filt.kappa_f > 0.2 * est:
            warnings.warn(
                f"kappa_f = {filt.kappa_f:.3g} Hz is not small against the "
                f"estimated linewidth {est:.3g} Hz; deconvolution degrades",
                FilterResolutionWarning, stacklevel=2)
    w_eff = est + filt.kappa_f

    if delta_grid is not None:
        deltas = np.asarray(delta_grid, dtype=float)
        if deltas.size < 5:
            raise ParameterError("explicit delta_grid needs >= 5 points")
        nf, na = _run_points(params, filt, deltas, base, tol, jobs)
        if np.argmax(nf) in (0, deltas.size - 1):
            raise PeakFitError(
                "scan peak not bracketed by the supplied grid",
                scan=FilterScan(deltas, nf, na, filt))
    else:
        coarse = center + np.linspace(-COARSE_SPAN, COARSE_SPAN, COARSE_POINTS) * w_eff
        nf_c, na_c = _run_points(params, filt, coarse, base, tol, jobs)
        i_pk = int(np.argmax(nf_c))
        if i_pk in (0, COARSE_POINTS - 1):
            raise PeakFitError(
                "coarse scan peak not bracketed; line estimate off",
                scan=FilterScan(coarse, nf_c, na_c, filt))
        fine = coarse[i_pk] + np.linspace(-REFINE_SPAN, REFINE_SPAN, REFINE_POINTS) * w_eff
        nf_f, na_f = _run_points(params, filt, fine, base, tol, jobs)
        deltas = np.concatenate([coarse, fine])
        order = np.argsort(deltas, kind="stable")
        deltas = deltas[order]
        nf = np.concatenate([nf_c, nf_f])[order]
        na = np.concatenate([na_c, na_f])[order]

    scan = FilterScan(deltas=deltas, n_f=nf, n_a=na, filter_params=filt)
    amp, d0, w, c, resid = fit_lorentzian(deltas, nf, w_eff)
    if resid > FIT_RESIDUAL_MAX:
        raise PeakFitError(
            f"Lorentzian fit residual {resid:.3g} exceeds {FIT_RESIDUAL_MAX}",
            scan=scan)
    scan.fit = LorentzFit(
        peak_freq=d0, fwhm_raw=w,
        fwhm_deconvolved=max(w - filt.kappa_f, 0.0),
        amplitude=amp, offset=c, fit_residual=resid)
    return scan


# ---------------------------------------------------------------------------
# derived measurements

@dataclass
class PullingResult:
    slope: float
    intercept: float
    offsets: np.ndarray     # cavity-a detunings (cyclic Hz)
    peaks: np.ndarray       # fitted line centers (cyclic Hz from the atoms)


def pulling_factor(params: SystemParams, filter_base: FilterParams | None = None,
                   omega_a_offsets=(1e2, 1e3, 1e4, 1e5, 1e6),
                   tol: float = STEADY_TOL, jobs: int = 1) -> PullingResult:
    """Slope of the lasing-peak frequency against the cavity-a detuning.

    Each offset shifts delta_a, the line is located with a filter scan, and
    the pulling factor is the least-squares slope of peak position versus
    cavity detuning (dimensionless).
    """
    offsets = np.asarray(list(omega_a_offsets), dtype=float)
    if offsets.size < 3:
        raise ParameterError("need >= 3 cavity offsets for a slope fit")
    peaks = []
    for off in offsets:
        scan = spectrum_scan(params.replace(delta_a=float(off)),
                             filter_base=filter_base, tol=tol, jobs=jobs)
        peaks.append(scan.fit.peak_freq)
    peaks = np.asarray(peaks)
    slope, intercept = np.polyfit(offsets, peaks, 1)
    return PullingResult(slope=float(slope), intercept=float(intercept),
                         offsets=offsets, peaks=peaks)


@dataclass
class AtomNumberRow:
    atom_count: int
    linewidth: float
    flagged: bool


@dataclass
class AtomNumberScan:
    rows: list
    spread: float           # +- excursion: half the peak-to-peak variation


def linewidth_vs_atoms(params: SystemParams, filter_base: FilterParams | None = None,
                       n_grid=(), tol: float = STEADY_TOL,
                       jobs: int = 1) -> AtomNumberScan:
    """Deconvolved linewidth per atom number; rows outside the lasing window are flagged.

    The spread, half the peak-to-peak variation over the clean rows,
    quantifies how much a +- atom-number fluctuation across the grid moves
    the linewidth.
    """
    rows = []
    for n in n_grid:
        n = int(n)
        p = params.replace(atom_count=n)
        d = derive(p)
        if not (p.gamma < p.eta < d.eta_max):
            rows.append(AtomNumberRow(atom_count=n, linewidth=math.nan, flagged=True))
            continue
        try:
            scan = spectrum_scan(p, filter_base=filter_base, tol=tol, jobs=jobs)
            rows.append(AtomNumberRow(atom_count=n,
                                      linewidth=scan.fit.fwhm_deconvolved,
                                      flagged=False))
        except (PeakFitError, ConvergenceError):
            rows.append(AtomNumberRow(atom_count=n, linewidth=math.nan, flagged=True))
    clean = [r.linewidth for r in rows if not r.flagged]
    spread = 0.5 * (max(clean) - min(clean)) if clean else math.nan
    return AtomNumberScan(rows=rows, spread=spread)
