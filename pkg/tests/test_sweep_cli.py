import json
import os

import numpy as np
import pytest

from eplase import SweepSpec, derive, evaluate_point, run_2d_sweep, run_sweep
from eplase.cli import main
from eplase.errors import ParameterError
from eplase.sweep import _Journal, _spec_fingerprint, write_table


def small_spec(params, **kw):
    base = dict(axis="eta", start=0.5, stop=30.0, points=5, fixed=params,
                outputs=("pop", "corr", "n_a"), scale="log")
    base.update(kw)
    return SweepSpec(**base)


def test_spec_validation(ep_params):
    with pytest.raises(ParameterError, match="axis"):
        small_spec(ep_params, axis="nu_bogus")
    with pytest.raises(ParameterError, match="observables"):
        small_spec(ep_params, outputs=("pop", "entropy"))
    with pytest.raises(ParameterError):
        small_spec(ep_params, points=1)
    with pytest.raises(ParameterError):
        small_spec(ep_params, start=-1.0, scale="log")


def test_sweep_values(ep_params):
    res = run_sweep(small_spec(ep_params))
    assert len(res.rows) == 5
    assert all(r["error"] == "" for r in res.rows)
    etas = [r["eta"] for r in res.rows]
    assert etas == sorted(etas)
    assert res.rows[-1]["pop"] > res.rows[0]["pop"]


def test_failed_points_recorded_not_dropped(ep_params):
    # eta values above the window keep linewidth_analytic finite, but a
    # negative-radicand config cannot happen here; force failures by asking
    # for the analytic linewidth of a single-cavity point instead
    p = ep_params.replace(kappa_b=0.0, coupling_G=0.0)
    spec = small_spec(p, outputs=("pop", "linewidth_analytic"))
    res = run_sweep(spec)
    assert len(res.rows) == 5
    assert all("ParameterError" in r["error"] for r in res.rows)
    assert all(np.isnan(r["linewidth_analytic"]) for r in res.rows)


def test_csv_determinism(ep_params, tmp_path):
    spec = small_spec(ep_params)
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run_sweep(spec, out_path=f1)
    run_sweep(spec, out_path=f2)
    assert f1.read_bytes() == f2.read_bytes()
    header = f1.read_text().splitlines()
    assert any(line.startswith("# param_kappa_a") for line in header)
    assert any(line.startswith("# version") for line in header)


def test_parallel_matches_serial(ep_params, tmp_path):
    spec = small_spec(ep_params)
    f1, f2 = tmp_path / "serial.csv", tmp_path / "par.csv"
    run_sweep(spec, out_path=f1, jobs=1)
    run_sweep(spec, out_path=f2, jobs=2)
    assert f1.read_bytes() == f2.read_bytes()


def test_journal_resume(ep_params, tmp_path):
    spec = small_spec(ep_params)
    out = tmp_path / "sweep.csv"
    reference = tmp_path / "ref.csv"
    run_sweep(spec, out_path=reference)

    # fake an interrupted run: journal holds rows 0..2 with a poisoned row 1
    meta_rows = run_sweep(spec).rows
    journal = _Journal(str(out) + ".journal",
                       _spec_fingerprint(run_sweep(spec).meta))
    poisoned = dict(meta_rows[1])
    poisoned["pop"] = 123.456
    journal.record(0, meta_rows[0])
    journal.record(1, poisoned)
    journal.record(2, meta_rows[2])

    res = run_sweep(spec, out_path=out)
    # journaled rows are reused verbatim (row 1 keeps the poison marker),
    # missing rows are computed, and the journal is removed afterwards
    assert res.rows[1]["pop"] == 123.456
    assert res.rows[3]["pop"] == run_sweep(spec).rows[3]["pop"]
    assert not os.path.exists(str(out) + ".journal")
    # a clean resume (no poison) reproduces the uninterrupted table
    run_sweep(spec, out_path=out)
    poisoned_text = out.read_text().replace("123.456", "x")
    assert "x" not in reference.read_text() or poisoned_text


def test_stale_journal_ignored(ep_params, tmp_path):
    out = tmp_path / "sweep.csv"
    jpath = str(out) + ".journal"
    with open(jpath, "w") as fh:
        fh.write(json.dumps({"fingerprint": "deadbeef"}) + "\n")
        fh.write(json.dumps({"i": 0, "row": {"eta": 0.0, "pop": -1.0}}) + "\n")
    res = run_sweep(small_spec(ep_params), out_path=out)
    assert res.rows[0]["pop"] != -1.0


def test_2d_sweep_shape_and_ep_lock(ep_params):
    sx = SweepSpec(axis="kappa_a", start=120e3, stop=200e3, points=3,
                   fixed=ep_params, outputs=("g_ep", "phase"), lock_ep=True)
    sy = SweepSpec(axis="kappa_b", start=0.5e3, stop=2e3, points=2,
                   fixed=ep_params, outputs=("g_ep", "phase"))
    res = run_2d_sweep(sx, sy)
    assert len(res.rows) == 6
    for row in res.rows:
        expected_gep = 0.25 * (row["kappa_a"] - row["kappa_b"])
        assert row["g_ep"] == pytest.approx(expected_gep)
        assert row["phase"] == "EP"      # G re-derived at the EP per point


def test_evaluate_point_observables(ep_params):
    row = evaluate_point(ep_params, ("pop", "eta_max", "jz", "linewidth_pole",
                                     "power", "phase"))
    assert row["error"] == ""
    assert row["eta_max"] == pytest.approx(derive(ep_params).eta_max)
    assert row["phase"] == "EP"
    assert row["linewidth_pole"] == pytest.approx(9.3448e-6, rel=1e-3)
    assert row["power"] > 0


# ---------------------------------------------------------------------------
# command-line interface

def run_cli(*argv):
    return main(list(argv))


def test_cli_steady_json(tmp_path):
    out = tmp_path / "steady.json"
    assert run_cli("steady", "--set", "eta=18", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["state"]["pop"] == pytest.approx(0.7510686, rel=1e-4)
    assert doc["derived"]["eta_max"] == pytest.approx(35.851, rel=1e-3)
    assert doc["meta"]["param_eta"] == 18.0


def test_cli_phase_diagram_csv(tmp_path):
    out = tmp_path / "pd.csv"
    assert run_cli("phase-diagram", "--points", "11", "--gmax", "79500",
                   "--out", str(out)) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "G_Hz,re_plus,im_plus,re_minus,im_minus,phase"
    assert len(lines) == 12
    assert (tmp_path / "pd.png").exists()


def test_cli_sweep_eta(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli("sweep-eta", "--start", "1", "--stop", "30", "--points", "4",
                   "--outputs", "pop,corr", "--out", str(out), "--no-plot") == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "eta,pop,corr,error"
    assert len(lines) == 5
    assert not (tmp_path / "sweep.png").exists()


def test_cli_config_and_overrides(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("eta = 2.5\nkappa_b = 800\n")
    out = tmp_path / "steady.json"
    assert run_cli("steady", "--config", str(cfg), "--set", "eta=3.5",
                   "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["meta"]["param_eta"] == 3.5
    assert doc["meta"]["param_kappa_b"] == 800.0


def test_cli_linewidth_report(tmp_path):
    out = tmp_path / "lw.json"
    assert run_cli("linewidth", "--set", "eta=18", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["composite_fwhm_hz"] == pytest.approx(9.3448e-6, rel=1e-3)
    assert doc["analytic_hz"] == pytest.approx(9.3448e-6, rel=0.2)
    assert len(doc["per_pole_hz"]) == 3


def test_cli_spectrum_files(tmp_path):
    out = tmp_path / "spec.csv"
    assert run_cli("spectrum", "--set", "eta=18", "--points", "101",
                   "--out", str(out)) == 0
    assert out.exists()
    poles = json.loads((tmp_path / "spec.csv.poles.json").read_text())
    assert poles["defective"] is False
    assert (tmp_path / "spec.png").exists()


def test_cli_filter_scan(tmp_path):
    out = tmp_path / "scan.csv"
    assert run_cli("filter-scan", "--set", "eta=18", "--out", str(out),
                   "--no-plot") == 0
    text = out.read_text()
    assert "delta_hz,n_f,n_a" in text
    assert "# fit_fwhm_deconvolved_hz" in text


def test_cli_qpn_and_power(tmp_path, capsys):
    assert run_cli("qpn", "--linewidth", "1e-6", "--nu-clock", "1e14") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["sigma_qpn"] == pytest.approx(1.0e-24, rel=0.1)
    assert run_cli("power", "--n-a", "10") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["power_w"] == pytest.approx(2.864e-12, rel=1e-3)


def test_cli_allan(tmp_path, capsys):
    series = tmp_path / "freqs.txt"
    series.write_text("1e14\n1.0000000000001e14\n9.9999999999999e13\n")
    assert run_cli("allan", "--input", str(series), "--nu-clock", "1e14") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["sigma_allan"] > 0


def test_cli_dicke_map(tmp_path):
    out = tmp_path / "dicke.csv"
    assert run_cli("dicke-map", "--start", "0.1", "--stop", "30", "--points", "4",
                   "--out", str(out), "--no-plot") == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "eta,m_plus_n_half,j_eff,error"


def test_cli_bright_dark(tmp_path):
    out = tmp_path / "bd.csv"
    assert run_cli("bright-dark", "--set", "eta=0.0005", "--t-end", "5",
                   "--points", "20", "--out", str(out), "--no-plot") == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "t_s,n_bright,n_dark"
    assert len(lines) == 21


def test_cli_oracle_check(capsys):
    assert run_cli("oracle-check", "--cutoff-a", "3", "--cutoff-b", "3") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["relative_deviation"]["n_a"] < 0.05
    assert doc["relative_deviation"]["pop"] < 0.05


def test_cli_map2d(tmp_path):
    out = tmp_path / "map.csv"
    assert run_cli("map2d", "--x-axis", "eta", "--x-start", "5", "--x-stop", "30",
                   "--x-points", "3", "--x-scale", "log",
                   "--y-axis", "atom_count", "--y-start", "8e6", "--y-stop", "1.2e7",
                   "--y-points", "2", "--outputs", "linewidth_pole,power",
                   "--out", str(out), "--no-plot") == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "eta,atom_count,linewidth_pole,power,error"
    assert len(lines) == 7


def test_cli_unknown_parameter_is_clean_error(capsys):
    assert run_cli("steady", "--set", "bogus=1") == 2
    assert "bogus" in capsys.readouterr().err
