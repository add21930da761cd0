"""Command-line front end: figure-reproduction data emitters and scalar reports.

Every table-writing subcommand emits deterministic CSV (or JSON) with a
header block carrying the resolved parameters, and renders a quick-look PNG
next to the table unless --no-plot is given.  Physical parameters come from
the built-in benchmark set, overridden by --config FILE and --set key=value.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, clock, collective, cumulant, filtercav, lindblad
from . import params as params_mod
from . import ptsym, spectrum, sweep
from .errors import ParameterError
from .params import SystemParams, derive


def _plot_path(out_path) -> str:
    stem, _ = os.path.splitext(str(out_path))
    return stem + ".png"


def _add_common(sp):
    sp.add_argument("--config", help="flat key=value parameter file (Hz)")
    sp.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE", help="override one parameter")
    sp.add_argument("--out", help="output file (default: stdout)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--jobs", type=int, default=1,
                    help="worker processes for sweeps/scans (0 = all cores)")
    sp.add_argument("--plot", dest="plot", action="store_true", default=True,
                    help=argparse.SUPPRESS)
    sp.add_argument("--no-plot", dest="plot", action="store_false",
                    help="skip the PNG next to the output table")
    sp.add_argument("--branch", choices=("auto", "lasing", "trivial"),
                    default="auto", help="steady-state branch selection")


def _params(args) -> SystemParams:
    return params_mod.params_from_config(args.config, args.overrides)


def _jobs(args) -> int | None:
    return None if args.jobs == 0 else args.jobs


def _emit_table(args, result: sweep.SweepResult):
    if args.out is None:
        sweep.write_table("/dev/stdout", result, fmt=args.format)
        return
    sweep.write_table(args.out, result, fmt=args.format)


def _rows_result(columns, rows, meta) -> sweep.SweepResult:
    return sweep.SweepResult(columns=columns, rows=rows, meta=meta)


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_phase_diagram(args):
    p = _params(args)
    grid = np.linspace(args.gmin, args.gmax, args.points)
    rows = ptsym.phase_diagram(p, grid)
    meta = sweep._meta_block(p, gmin=args.gmin, gmax=args.gmax, points=args.points)
    res = _rows_result(["G_Hz", "re_plus", "im_plus", "re_minus", "im_minus", "phase"],
                       rows, meta)
    _emit_table(args, res)
    if args.plot and args.out:
        from . import plots
        plots.eigenvalue_plot(_plot_path(args.out), grid,
                              [r["re_plus"] for r in rows], [r["im_plus"] for r in rows],
                              [r["re_minus"] for r in rows], [r["im_minus"] for r in rows])
    return 0


def cmd_steady(args):
    p = _params(args)
    s = cumulant.steady_state(p, branch=args.branch)
    d = derive(p)
    payload = {
        "state": {
            "n_a": s.n_a, "n_b": s.n_b, "ab": s.ab, "as": s.as_, "bs": s.bs,
            "pop": s.pop, "corr": s.corr, "pair": s.pair,
        },
        "residual": cumulant.residual(s, p),
        "derived": {
            "chi_gauge": d.chi_gauge, "g_ep": d.g_ep, "kappa_eff": d.kappa_eff,
            "cooperativity": d.cooperativity, "gamma_c": d.gamma_c,
            "gamma_total": d.gamma_total, "eta_max": d.eta_max,
        },
    }
    sweep.write_report(args.out, payload, p)
    return 0


def _run_1d(args, spec: sweep.SweepSpec, logx: bool):
    res = sweep.run_sweep(spec, out_path=args.out, jobs=_jobs(args), fmt=args.format)
    if args.out is None:
        sweep.write_table("/dev/stdout", res, fmt=args.format)
    elif args.plot:
        from . import plots
        x = [r[spec.axis] for r in res.rows]
        series = {name: [r.get(name, math.nan) for r in res.rows]
                  for name in spec.outputs}
        plots.line_plot(_plot_path(args.out), x, series, f"{spec.axis} (Hz)", logx=logx)
    return 0


def cmd_sweep_eta(args):
    p = _params(args)
    spec = sweep.SweepSpec(axis="eta", scale="log", start=args.start, stop=args.stop,
                           points=args.points, fixed=p,
                           outputs=tuple(args.outputs.split(",")), branch=args.branch)
    return _run_1d(args, spec, logx=True)


def cmd_sweep_g(args):
    p = _params(args)
    spec = sweep.SweepSpec(axis="coupling_G", scale=args.scale, start=args.start,
                           stop=args.stop, points=args.points, fixed=p,
                           outputs=tuple(args.outputs.split(",")), branch=args.branch)
    return _run_1d(args, spec, logx=args.scale == "log")


def cmd_dicke_map(args):
    p = _params(args)
    spec = sweep.SweepSpec(axis="eta", scale="log", start=args.start, stop=args.stop,
                           points=args.points, fixed=p,
                           outputs=("m_plus_n_half", "j_eff"), branch=args.branch)
    return _run_1d(args, spec, logx=True)


def cmd_map2d(args):
    p = _params(args)
    outputs = tuple(args.outputs.split(","))
    sx = sweep.SweepSpec(axis=args.x_axis, scale=args.x_scale, start=args.x_start,
                         stop=args.x_stop, points=args.x_points, fixed=p,
                         outputs=outputs, branch=args.branch, lock_ep=args.lock_ep)
    sy = sweep.SweepSpec(axis=args.y_axis, scale=args.y_scale, start=args.y_start,
                         stop=args.y_stop, points=args.y_points, fixed=p,
                         outputs=outputs, branch=args.branch)
    res = sweep.run_2d_sweep(sx, sy, out_path=args.out, jobs=_jobs(args), fmt=args.format)
    if args.out is None:
        sweep.write_table("/dev/stdout", res, fmt=args.format)
    elif args.plot:
        from . import plots
        plots.map_plot(_plot_path(args.out),
                       [r[args.x_axis] for r in res.rows],
                       [r[args.y_axis] for r in res.rows],
                       [r.get(outputs[0], math.nan) for r in res.rows],
                       args.x_axis, args.y_axis, outputs[0],
                       logx=args.x_scale == "log", logy=args.y_scale == "log")
    return 0


def cmd_spectrum(args):
    p = _params(args)
    s = cumulant.steady_state(p, branch=args.branch)
    q = spectrum.decompose(spectrum.build_qrt(p, s))
    lw = spectrum.linewidth_qrt(q)
    if args.span is None:
        span = 20.0 * max(lw.composite_fwhm, 1e-9)
    else:
        span = args.span
    grid = lw.peak_offset + np.linspace(-span, span, args.points)
    vals = spectrum.spectrum_curve(q, grid)
    rows = [{"offset_hz": float(g), "spectrum": float(v)} for g, v in zip(grid, vals)]
    meta = sweep._meta_block(p, span_hz=span, points=args.points,
                             defective=q.defective)
    poles = {
        "eigenvalues_hz": [l / params_mod.TWO_PI for l in q.eigenvalues],
        "weights": None if q.weights is None else list(q.weights),
        "defective": q.defective,
        "per_pole_fwhm_hz": lw.per_pole,
        "composite_fwhm_hz": lw.composite_fwhm,
        "peak_offset_hz": lw.peak_offset,
    }
    if args.format == "json" or args.out is None:
        sweep.write_report(args.out, {"poles": poles, "curve": rows}, p)
    else:
        _emit_table(args, _rows_result(["offset_hz", "spectrum"], rows, meta))
        with open(str(args.out) + ".poles.json", "w") as fh:
            json.dump(poles, fh, indent=1, default=sweep._json_default)
            fh.write("\n")
        if args.plot:
            from . import plots
            plots.line_plot(_plot_path(args.out), grid, {"spectrum": vals},
                            "offset from cavity a (Hz)")
    return 0


def cmd_linewidth(args):
    p = _params(args)
    s = cumulant.steady_state(p, branch=args.branch)
    q = spectrum.decompose(spectrum.build_qrt(p, s))
    lw = spectrum.linewidth_qrt(q)
    payload = {
        "per_pole_hz": lw.per_pole,
        "composite_fwhm_hz": lw.composite_fwhm,
        "peak_offset_hz": lw.peak_offset,
        "unresolved": lw.unresolved,
        "analytic_hz": spectrum.linewidth_analytic(p, s),
    }
    sweep.write_report(args.out, payload, p)
    return 0


def _filter_from_args(args, p, est):
    if args.beta is None and args.kappa_f is None:
        return None
    base = filtercav.default_filter(p, est)
    return filtercav.FilterParams(
        delta_f=0.0,
        beta=args.beta if args.beta is not None else base.beta,
        kappa_f=args.kappa_f if args.kappa_f is not None else base.kappa_f)


def cmd_filter_scan(args):
    p = _params(args)
    base = cumulant.steady_state(p, branch=args.branch)
    _, est = filtercav.estimate_line(p, base)
    scan = filtercav.spectrum_scan(p, filter_base=_filter_from_args(args, p, est),
                                   jobs=_jobs(args), branch=args.branch)
    rows = [{"delta_hz": float(d), "n_f": float(v), "n_a": float(a)}
            for d, v, a in zip(scan.deltas, scan.n_f, scan.n_a)]
    meta = sweep._meta_block(
        p, beta_hz=scan.filter_params.beta, kappa_f_hz=scan.filter_params.kappa_f,
        fit_peak_hz=scan.fit.peak_freq, fit_fwhm_raw_hz=scan.fit.fwhm_raw,
        fit_fwhm_deconvolved_hz=scan.fit.fwhm_deconvolved,
        fit_amplitude=scan.fit.amplitude, fit_residual=scan.fit.fit_residual)
    if args.format == "json" or args.out is None:
        sweep.write_report(args.out, {
            "filter": {"beta_hz": scan.filter_params.beta,
                       "kappa_f_hz": scan.filter_params.kappa_f},
            "fit": scan.fit.__dict__, "rows": rows}, p)
    else:
        _emit_table(args, _rows_result(["delta_hz", "n_f", "n_a"], rows, meta))
        if args.plot:
            from . import plots
            plots.line_plot(_plot_path(args.out), scan.deltas, {"n_f": scan.n_f},
                            "filter detuning (Hz)")
    return 0


def cmd_pulling(args):
    p = _params(args)
    offsets = [float(v) for v in args.offsets.split(",")]
    res = filtercav.pulling_factor(p, omega_a_offsets=offsets, jobs=_jobs(args))
    rows = [{"offset_hz": float(o), "peak_hz": float(pk)}
            for o, pk in zip(res.offsets, res.peaks)]
    meta = sweep._meta_block(p, slope=res.slope, intercept_hz=res.intercept)
    if args.format == "json" or args.out is None:
        sweep.write_report(args.out, {"slope": res.slope,
                                      "intercept_hz": res.intercept,
                                      "rows": rows}, p)
    else:
        _emit_table(args, _rows_result(["offset_hz", "peak_hz"], rows, meta))
        if args.plot:
            from . import plots
            plots.line_plot(_plot_path(args.out), res.offsets,
                            {"peak_hz": res.peaks}, "cavity-a offset (Hz)", logx=True)
    return 0


def cmd_linewidth_vs_n(args):
    p = _params(args)
    grid = np.linspace(args.nmin, args.nmax, args.points).round().astype(int)
    res = filtercav.linewidth_vs_atoms(p, n_grid=grid, jobs=_jobs(args))
    rows = [{"atom_count": r.atom_count, "linewidth_hz": r.linewidth,
             "flagged": int(r.flagged)} for r in res.rows]
    meta = sweep._meta_block(p, spread_hz=res.spread)
    if args.format == "json" or args.out is None:
        sweep.write_report(args.out, {"spread_hz": res.spread, "rows": rows}, p)
    else:
        _emit_table(args, _rows_result(["atom_count", "linewidth_hz", "flagged"],
                                       rows, meta))
        if args.plot:
            from . import plots
            plots.line_plot(_plot_path(args.out), [r["atom_count"] for r in rows],
                            {"linewidth_hz": [r["linewidth_hz"] for r in rows]},
                            "atom count")
    return 0


def cmd_bright_dark(args):
    p = _params(args)
    res = collective.bright_dark(p, t_end=args.t_end, n_out=args.points)
    rows = [{"t_s": float(t), "n_bright": float(b), "n_dark": float(d)}
            for t, b, d in zip(res.t, res.n_bright, res.n_dark)]
    meta = sweep._meta_block(p, t_end_s=args.t_end,
                             bright_divergent=res.bright_divergent,
                             dark_divergent=res.dark_divergent)
    _emit_table(args, _rows_result(["t_s", "n_bright", "n_dark"], rows, meta))
    if args.out and args.plot:
        from . import plots
        plots.line_plot(_plot_path(args.out), res.t,
                        {"n_bright": res.n_bright, "n_dark": res.n_dark}, "t (s)")
    return 0


def cmd_oracle_check(args):
    base = params_mod.SystemParams(
        kappa_a=100.0, kappa_b=10.0, coupling_G=22.5, coupling_g=1.0,
        atom_count=2, gamma=0.1, eta=0.1, gamma_phi=0.1)
    p = params_mod.params_from_config(args.config, args.overrides, base=base)
    config = lindblad.OracleConfig(params=p, fock_cutoff_a=args.cutoff_a,
                                   fock_cutoff_b=args.cutoff_b, t_end=args.t_end)
    exact = lindblad.steady_exact(config)
    mf = cumulant.steady_state(p, branch=args.branch)
    def rel(a, b):
        return abs(a - b) / max(abs(b), 1e-300)
    payload = {
        "exact": {"n_a": exact["n_a"], "n_b": exact["n_b"],
                  "pop": exact["pop"], "corr": exact["corr"]},
        "cumulant": {"n_a": mf.n_a, "n_b": mf.n_b, "pop": mf.pop, "corr": mf.corr},
        "relative_deviation": {
            "n_a": rel(mf.n_a, exact["n_a"]),
            "n_b": rel(mf.n_b, exact["n_b"]),
            "pop": rel(mf.pop, exact["pop"]),
        },
        "oracle_residuals": {
            "trace": exact["trace_residual"],
            "lindblad": exact["lindblad_residual"],
        },
    }
    sweep.write_report(args.out, payload, p)
    return 0


def cmd_qpn(args):
    spec = clock.ClockSpec(linewidth=args.linewidth, nu_clock=args.nu_clock,
                           atom_count=args.atoms, t_cycle=args.t_cycle,
                           tau=args.tau, chi_shape=args.chi)
    sweep.write_report(args.out, {"sigma_qpn": clock.qpn_instability(spec),
                                  "spec": spec.__dict__})
    return 0


def cmd_allan(args):
    series = np.loadtxt(args.input, dtype=float, ndmin=1)
    sigma = clock.allan_deviation(series, args.nu_clock)
    sweep.write_report(args.out, {"sigma_allan": sigma, "points": int(series.size),
                                  "nu_clock_hz": args.nu_clock})
    return 0


def cmd_power(args):
    p = _params(args)
    n_a = args.n_a
    if n_a is None:
        n_a = cumulant.steady_state(p, branch=args.branch).n_a
    watts = clock.emission_power(p, n_a, kappa=args.kappa)
    sweep.write_report(args.out, {"power_w": watts, "n_a": n_a, "kappa": args.kappa}, p)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="eplase",
        description="Two-cavity PT-symmetric superradiant laser: steady states, "
                    "spectra, linewidths, pulling, and clock metrics.")
    ap.add_argument("--version", action="version", version=f"eplase {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, handler, help_):
        sp = sub.add_parser(name, help=help_)
        _add_common(sp)
        sp.set_defaults(handler=handler)
        return sp

    sp = add("phase-diagram", cmd_phase_diagram,
             "eigenvalue branches of the cavity pair versus G")
    sp.add_argument("--gmin", type=float, default=0.0)
    sp.add_argument("--gmax", type=float, default=80e3)
    sp.add_argument("--points", type=int, default=321)

    add("steady", cmd_steady, "steady state plus derived quantities as JSON")

    sp = add("sweep-eta", cmd_sweep_eta, "log sweep of the pump rate")
    sp.add_argument("--start", type=float, default=1e-4)
    sp.add_argument("--stop", type=float, default=1e3)
    sp.add_argument("--points", type=int, default=60)
    sp.add_argument("--outputs", default="pop,corr,n_a,linewidth_analytic")

    sp = add("sweep-G", cmd_sweep_g, "sweep of the tunneling strength")
    sp.add_argument("--start", type=float, default=250.0)
    sp.add_argument("--stop", type=float, default=80e3)
    sp.add_argument("--points", type=int, default=320)
    sp.add_argument("--scale", choices=("linear", "log"), default="linear")
    sp.add_argument("--outputs", default="corr,n_a,linewidth_analytic,linewidth_pole")

    sp = add("spectrum", cmd_spectrum, "emission spectrum samples plus pole table")
    sp.add_argument("--span", type=float, default=None,
                    help="half-span of the offset grid (Hz); default 20 FWHM")
    sp.add_argument("--points", type=int, default=2001)

    add("linewidth", cmd_linewidth, "per-pole, composite, and analytic linewidth")

    sp = add("filter-scan", cmd_filter_scan, "filter-cavity spectrum scan and fit")
    sp.add_argument("--beta", type=float, default=None, help="probe coupling (Hz)")
    sp.add_argument("--kappa-f", type=float, default=None, help="probe decay (Hz)")

    sp = add("pulling", cmd_pulling, "lasing-peak pulling versus cavity detuning")
    sp.add_argument("--offsets", default="100,1000,10000,100000,1000000",
                    help="comma list of cavity-a offsets (Hz)")

    sp = add("linewidth-vs-n", cmd_linewidth_vs_n, "linewidth versus atom number")
    sp.add_argument("--nmin", type=float, default=0.8e7)
    sp.add_argument("--nmax", type=float, default=1.2e7)
    sp.add_argument("--points", type=int, default=9)

    sp = add("dicke-map", cmd_dicke_map, "(eta, M+N/2, J) ladder trajectory")
    sp.add_argument("--start", type=float, default=1e-4)
    sp.add_argument("--stop", type=float, default=1e3)
    sp.add_argument("--points", type=int, default=60)

    sp = add("bright-dark", cmd_bright_dark, "low-excitation bright/dark populations")
    sp.add_argument("--t-end", type=float, default=10.0)
    sp.add_argument("--points", type=int, default=400)

    sp = add("oracle-check", cmd_oracle_check,
             "exact Lindblad versus cumulant steady state (small system)")
    sp.add_argument("--cutoff-a", type=int, default=4)
    sp.add_argument("--cutoff-b", type=int, default=4)
    sp.add_argument("--t-end", type=float, default=40.0)

    sp = add("qpn", cmd_qpn, "projection-noise-limited instability")
    sp.add_argument("--linewidth", type=float, required=True)
    sp.add_argument("--nu-clock", type=float, default=4.3e14)
    sp.add_argument("--atoms", type=int, default=10**7)
    sp.add_argument("--t-cycle", type=float, default=1.0)
    sp.add_argument("--tau", type=float, default=1.0)
    sp.add_argument("--chi", type=float, default=1.0)

    sp = add("allan", cmd_allan, "Allan deviation of a one-column frequency file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--nu-clock", type=float, required=True)

    sp = add("power", cmd_power, "emission power from the steady photon number")
    sp.add_argument("--n-a", type=float, default=None)
    sp.add_argument("--kappa", choices=("a", "eff"), default="a")

    sp = add("map2d", cmd_map2d, "two-axis map (long-format table)")
    sp.add_argument("--x-axis", required=True)
    sp.add_argument("--x-start", type=float, required=True)
    sp.add_argument("--x-stop", type=float, required=True)
    sp.add_argument("--x-points", type=int, default=20)
    sp.add_argument("--x-scale", choices=("linear", "log"), default="linear")
    sp.add_argument("--y-axis", required=True)
    sp.add_argument("--y-start", type=float, required=True)
    sp.add_argument("--y-stop", type=float, required=True)
    sp.add_argument("--y-points", type=int, default=20)
    sp.add_argument("--y-scale", choices=("linear", "log"), default="linear")
    sp.add_argument("--lock-ep", action="store_true",
                    help="re-derive G at the exceptional point for every grid point")
    sp.add_argument("--outputs", default="linewidth_pole,power")

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
