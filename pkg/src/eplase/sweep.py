"""Parameter sweeps, observable registry, progress journaling and data emission.

A sweep evaluates a set of named observables at every point of a 1-D or 2-D
parameter grid.  Points are independent steady-state solves, dispatched to a
process pool when jobs > 1 and merged back in axis order; a failed point is
recorded with its error string instead of being dropped.  When writing to a
file, completed rows are appended to an on-disk journal so an interrupted
sweep resumes without recomputation and still produces the identical table.

CSV output is deterministic: fixed 12-significant-digit formatting and a
header block carrying the fully resolved parameter set and tool version.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .clock import emission_power
from .collective import dicke_coordinates
from .cumulant import CumulantState, steady_state
from .errors import ParameterError
from .params import SystemParams, derive
from .ptsym import classify
from .spectrum import build_qrt, decompose, linewidth_analytic, linewidth_qrt

_AXIS_FIELDS = ("eta", "coupling_G", "coupling_g", "atom_count", "kappa_a",
                "kappa_b", "gamma", "gamma_phi", "delta_a", "delta_b")

FLOAT_FMT = "%.12g"


@dataclass(frozen=True)
class SweepSpec:
    """One sweep axis: parameter name, grid, fixed parameters, outputs."""

    axis: str
    start: float
    stop: float
    points: int
    fixed: SystemParams
    outputs: tuple = ("pop", "corr", "n_a")
    scale: str = "linear"
    branch: str = "auto"
    lock_ep: bool = False   # re-derive G = g_ep at every point (EP-tracked sweeps)

    def __post_init__(self):
        if self.axis not in _AXIS_FIELDS:
            raise ParameterError(f"unknown sweep axis {self.axis!r}")
        if self.points < 2:
            raise ParameterError("points must be >= 2")
        if not self.start < self.stop:
            raise ParameterError("start must be < stop")
        if self.scale not in ("linear", "log"):
            raise ParameterError(f"scale must be linear|log, got {self.scale!r}")
        if self.scale == "log" and self.start <= 0:
            raise ParameterError("log scale requires start > 0")
        unknown = [o for o in self.outputs if o not in OBSERVABLES]
        if unknown:
            raise ParameterError(f"unknown observables: {', '.join(unknown)}")

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


class PointContext:
    """Lazy per-point computations shared by the observables."""

    def __init__(self, params: SystemParams, branch: str):
        self.params = params
        self.branch = branch
        self._steady = None
        self._qrt = None
        self._lw = None

    @property
    def steady(self) -> CumulantState:
        if self._steady is None:
            self._steady = steady_state(self.params, branch=self.branch)
        return self._steady

    @property
    def qrt(self):
        if self._qrt is None:
            self._qrt = decompose(build_qrt(self.params, self.steady))
        return self._qrt

    @property
    def lw(self):
        if self._lw is None:
            self._lw = linewidth_qrt(self.qrt)
        return self._lw


def _slow_pole_width(ctx: PointContext) -> float:
    from .spectrum import dominant_pole
    lam = ctx.qrt.eigenvalues
    return float(2.0 * abs(lam[dominant_pole(ctx.qrt)].real)) / (2.0 * math.pi)


OBSERVABLES = {
    "n_a": lambda c: c.steady.n_a,
    "n_b": lambda c: c.steady.n_b,
    "pop": lambda c: c.steady.pop,
    "pair": lambda c: c.steady.pair,
    "corr": lambda c: c.steady.corr.real,
    "corr_im": lambda c: c.steady.corr.imag,
    "ab_re": lambda c: c.steady.ab.real,
    "ab_im": lambda c: c.steady.ab.imag,
    "as_re": lambda c: c.steady.as_.real,
    "as_im": lambda c: c.steady.as_.imag,
    "bs_re": lambda c: c.steady.bs.real,
    "bs_im": lambda c: c.steady.bs.imag,
    "chi_gauge": lambda c: derive(c.params).chi_gauge,
    "g_ep": lambda c: derive(c.params).g_ep,
    "kappa_eff": lambda c: derive(c.params).kappa_eff,
    "cooperativity": lambda c: derive(c.params).cooperativity,
    "gamma_c": lambda c: derive(c.params).gamma_c,
    "gamma_total": lambda c: derive(c.params).gamma_total,
    "eta_max": lambda c: derive(c.params).eta_max,
    "jz": lambda c: dicke_coordinates(c.steady, c.params.atom_count).jz,
    "j_len": lambda c: dicke_coordinates(c.steady, c.params.atom_count).j_len,
    "j_eff": lambda c: dicke_coordinates(c.steady, c.params.atom_count).j_eff,
    "m_plus_n_half": lambda c: (dicke_coordinates(c.steady, c.params.atom_count).m
                                + 0.5 * c.params.atom_count),
    "linewidth_analytic": lambda c: linewidth_analytic(c.params, c.steady),
    "linewidth_pole": _slow_pole_width,
    "linewidth_composite": lambda c: c.lw.composite_fwhm,
    "peak_offset": lambda c: c.lw.peak_offset,
    "power": lambda c: emission_power(c.params, c.steady.n_a),
    "phase": lambda c: str(classify(c.params)),
}


def _point_params(spec: SweepSpec, value: float) -> SystemParams:
    if spec.axis == "atom_count":
        p = spec.fixed.replace(atom_count=max(1, int(round(value))))
    else:
        p = spec.fixed.replace(**{spec.axis: float(value)})
    if spec.lock_ep:
        p = p.replace(coupling_G=derive(p).g_ep)
    return p


def evaluate_point(params: SystemParams, outputs, branch: str = "auto") -> dict:
    """All requested observables at one parameter point; errors become a row field."""
    ctx = PointContext(params, branch)
    row = {}
    try:
        for name in outputs:
            row[name] = OBSERVABLES[name](ctx)
        row["error"] = ""
    except Exception as exc:   # failed points are recorded, not dropped
        for name in outputs:
            row.setdefault(name, math.nan)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sweep_worker(args):
    spec, value = args
    return evaluate_point(_point_params(spec, value), spec.outputs, spec.branch)


@dataclass
class SweepResult:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _spec_fingerprint(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


class _Journal:
    """Append-only JSONL of completed rows, keyed by a sweep fingerprint."""

    def __init__(self, path, fingerprint):
        self.path = path
        self.fingerprint = fingerprint
        self.done = {}
        if os.path.exists(path):
            self._load()
        if not self.done:
            with open(path, "w") as fh:
                fh.write(json.dumps({"fingerprint": fingerprint}) + "\n")

    def _load(self):
        try:
            with open(self.path) as fh:
                head = fh.readline()
                if json.loads(head).get("fingerprint") != self.fingerprint:
                    return      # stale journal for a different sweep
                for line in fh:
                    rec = json.loads(line)
                    self.done[rec["i"]] = rec["row"]
        except (json.JSONDecodeError, KeyError, OSError):
            self.done = {}

    def record(self, i, row):
        with open(self.path, "a") as fh:
            fh.write(json.dumps({"i": i, "row": row}) + "\n")
            fh.flush()
        self.done[i] = row

    def remove(self):
        try:
            os.remove(self.path)
        except OSError:
            pass


def run_sweep(spec: SweepSpec, out_path=None, jobs: int | None = 1,
              fmt: str = "csv") -> SweepResult:
    """Evaluate a 1-D sweep; writes the table (and journal) when out_path is set."""
    grid = spec.grid()
    columns = [spec.axis] + list(spec.outputs) + ["error"]
    meta = _meta_block(spec.fixed, axis=spec.axis, scale=spec.scale,
                       start=spec.start, stop=spec.stop, points=spec.points,
                       outputs=",".join(spec.outputs), lock_ep=spec.lock_ep,
                       branch=spec.branch)
    journal = None
    if out_path is not None:
        journal = _Journal(str(out_path) + ".journal", _spec_fingerprint(meta))

    pending = [(i, v) for i, v in enumerate(grid)
               if journal is None or i not in journal.done]
    results = dict(journal.done) if journal else {}
    if pending:
        rows = _map_points([(spec, v) for _, v in pending], jobs, _sweep_worker)
        for (i, v), row in zip(pending, rows):
            full = {spec.axis: float(v), **row}
            results[i] = full
            if journal is not None:
                journal.record(i, full)
    ordered = [results[i] for i in range(len(grid))]
    res = SweepResult(columns=columns, rows=ordered, meta=meta)
    if out_path is not None:
        write_table(out_path, res, fmt=fmt)
        journal.remove()
    return res


def _2d_worker(args):
    spec_x, xv, axis_y, yv, lock_ep = args
    p = _point_params(spec_x, xv)
    if axis_y == "atom_count":
        p = p.replace(atom_count=max(1, int(round(yv))))
    else:
        p = p.replace(**{axis_y: float(yv)})
    if lock_ep:
        p = p.replace(coupling_G=derive(p).g_ep)
    return evaluate_point(p, spec_x.outputs, spec_x.branch)


def run_2d_sweep(spec_x: SweepSpec, spec_y: SweepSpec, out_path=None,
                 jobs: int | None = 1, fmt: str = "csv") -> SweepResult:
    """Cartesian product of two axes in long format (x varies fastest)."""
    if spec_y.axis == spec_x.axis:
        raise ParameterError("the two sweep axes must differ")
    gx, gy = spec_x.grid(), spec_y.grid()
    lock = spec_x.lock_ep or spec_y.lock_ep
    columns = [spec_x.axis, spec_y.axis] + list(spec_x.outputs) + ["error"]
    meta = _meta_block(spec_x.fixed, axis_x=spec_x.axis, axis_y=spec_y.axis,
                       scale_x=spec_x.scale, scale_y=spec_y.scale,
                       start_x=spec_x.start, stop_x=spec_x.stop,
                       start_y=spec_y.start, stop_y=spec_y.stop,
                       points_x=spec_x.points, points_y=spec_y.points,
                       outputs=",".join(spec_x.outputs), lock_ep=lock,
                       branch=spec_x.branch)
    journal = None
    if out_path is not None:
        journal = _Journal(str(out_path) + ".journal", _spec_fingerprint(meta))
    points = [(i, xv, yv) for i, (yv, xv) in enumerate(
        (yv, xv) for yv in gy for xv in gx)]
    pending = [t for t in points if journal is None or t[0] not in journal.done]
    results = dict(journal.done) if journal else {}
    if pending:
        rows = _map_points([(spec_x, xv, spec_y.axis, yv, lock) for _, xv, yv in pending],
                           jobs, _2d_worker)
        for (i, xv, yv), row in zip(pending, rows):
            full = {spec_x.axis: float(xv), spec_y.axis: float(yv), **row}
            results[i] = full
            if journal is not None:
                journal.record(i, full)
    ordered = [results[i] for i in range(len(points))]
    res = SweepResult(columns=columns, rows=ordered, meta=meta)
    if out_path is not None:
        write_table(out_path, res, fmt=fmt)
        journal.remove()
    return res


def _map_points(tasks, jobs, worker):
    jobs = os.cpu_count() if jobs is None else jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, tasks))
    return [worker(t) for t in tasks]


# ---------------------------------------------------------------------------
# emission

def _meta_block(params: SystemParams, **extra) -> dict:
    meta = {"tool": "eplase", "version": __version__}
    meta.update({f"param_{k}": v for k, v in asdict(params).items()})
    meta.update(extra)
    return meta


def format_value(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return FLOAT_FMT % v
    return str(v)


def write_table(path, result: SweepResult, fmt: str = "csv"):
    if fmt == "json":
        payload = {"meta": result.meta, "columns": result.columns,
                   "rows": [[_jsonable(r.get(c)) for c in result.columns]
                            for r in result.rows]}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, default=str)
            fh.write("\n")
        return
    lines = [f"# {k} = {v}" for k, v in result.meta.items()]
    lines.append(",".join(result.columns))
    for row in result.rows:
        lines.append(",".join(format_value(row.get(c, "")) for c in result.columns))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(v):
    if isinstance(v, float):
        return None if math.isnan(v) else float(FLOAT_FMT % v)
    return v


def write_report(path, payload: dict, params: SystemParams | None = None):
    """Scalar JSON report with the resolved parameters attached."""
    doc = {"meta": _meta_block(params) if params is not None else
           {"tool": "eplase", "version": __version__}}
    doc.update(payload)
    text = json.dumps(doc, indent=1, default=_json_default) + "\n"
    if path is None:
        print(text, end="")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json_default(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return str(v)
