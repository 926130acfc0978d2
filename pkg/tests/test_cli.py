"""End-to-end CLI: sweeps, GMRES study, verify, plots, geometry dumps."""

import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from helmbem import cli


def run_cli(args):
    return cli.main([str(a) for a in args])


def _read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


SMALL_SWEEP = ["sweep", "--geometry", "circle", "--k-list", "2,4,8",
               "--ppw", "4", "--eta", "0.5", "--reg", "sik"]


def test_sweep_csv_columns_and_rows(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert run_cli(SMALL_SWEEP + ["--out", out]) == 0
    rows = _read_csv(out)
    assert [c for c in rows[0]] == cli.SWEEP_COLUMNS
    assert [float(r["k"]) for r in rows] == [2.0, 4.0, 8.0]
    assert all(r["status"] == "ok" for r in rows)
    for r in rows:
        assert float(r["cond"]) == pytest.approx(
            float(r["sigma_max"]) / float(r["sigma_min"]), rel=1e-12)
    slopes = json.loads((tmp_path / "sweep.csv.slopes.json").read_text())
    assert set(slopes) == {"sigma_max", "inv_sigma_min", "cond"}


def test_sweep_determinism_excluding_timing(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli(SMALL_SWEEP + ["--out", out1])
    run_cli(SMALL_SWEEP + ["--out", out2])

    def strip_timing(path):
        rows = _read_csv(path)
        for r in rows:
            r.pop("wall_seconds")
        return rows

    assert strip_timing(out1) == strip_timing(out2)


def test_sweep_skip_done_appends_missing(tmp_path):
    out = tmp_path / "resume.csv"
    run_cli(["sweep", "--geometry", "circle", "--k-list", "2,4", "--ppw", "4",
             "--out", out])
    assert len(_read_csv(out)) == 2
    run_cli(["sweep", "--geometry", "circle", "--k-list", "2,4,8", "--ppw", "4",
             "--out", out, "--skip-done"])
    rows = _read_csv(out)
    assert [float(r["k"]) for r in rows] == [2.0, 4.0, 8.0]
    # rerun with nothing missing: no duplicates
    run_cli(["sweep", "--geometry", "circle", "--k-list", "2,4,8", "--ppw", "4",
             "--out", out, "--skip-done"])
    assert len(_read_csv(out)) == 3


def test_config_file_defaults_and_overrides(tmp_path):
    cfg = tmp_path / "conf.toml"
    cfg.write_text(
        "[sweep]\ngeometry = 'ellipse'\nk_list = [2.0, 4.0, 6.0]\nppw = 4.0\n"
        "[quadrature]\norder_separated = 6\n"
    )
    out = tmp_path / "cfg.csv"
    assert run_cli(["sweep", "--config", cfg, "--out", out]) == 0
    rows = _read_csv(out)
    assert rows[0]["geometry"] == "ellipse"
    assert [float(r["k"]) for r in rows] == [2.0, 4.0, 6.0]
    # flag wins over config
    out2 = tmp_path / "cfg2.csv"
    run_cli(["sweep", "--config", cfg, "--geometry", "circle", "--out", out2])
    assert _read_csv(out2)[0]["geometry"] == "circle"


def test_gmres_study_csv(tmp_path):
    out = tmp_path / "gm.csv"
    assert run_cli(["gmres", "--geometry", "circle", "--k-list", "2,4",
                    "--ppw", "4", "--alphas", "0,0.5", "--out", out]) == 0
    rows = _read_csv(out)
    assert [c for c in rows[0]] == cli.GMRES_COLUMNS
    assert len(rows) == 4
    for r in rows:
        assert r["converged"] == "True"
        n_iters = int(r["iters"])
        assert 1 <= n_iters <= 100
        assert float(r["final_rel_residual"]) <= 1e-6


def test_verify_subcommand(tmp_path, capsys):
    code = run_cli(["verify", "--geometry", "circle", "--k-list", "5", "--ppw", "10"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["all_pass"]
    assert report["transpose_B"] <= 1e-12


def test_oracle_circle_subcommand(tmp_path):
    out = tmp_path / "spec.csv"
    assert run_cli(["oracle-circle", "--k", "5", "--n-max", "10", "--out", out]) == 0
    rows = _read_csv(out)
    assert len(rows) == 11
    s0 = complex(float(rows[0]["s_re"]), float(rows[0]["s_im"]))
    d0 = complex(float(rows[0]["d_re"]), float(rows[0]["d_im"]))
    h0 = complex(float(rows[0]["h_re"]), float(rows[0]["h_im"]))
    assert abs(s0 * h0 + 0.25 - d0 * d0) < 1e-10


def test_plot_sweep_markers(tmp_path):
    csv_path = tmp_path / "synth.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cli.SWEEP_COLUMNS)
        for k in (5.0, 10.0, 20.0):
            w.writerow(["circle", k, 50, 0.5, "sik", 0.0, 0.5, 0.5 * k**-0.34,
                        k**0.34, 10, 10, 0.1, "ok"])
    paths = cli.emit_plot(str(csv_path), str(tmp_path / "plot"))
    assert len(paths) == 3
    svg = open(paths[0]).read()
    assert svg.count('class="marker"') == 3
    # slope annotation matches the fitter's output format
    from helmbem.linalg import fit_loglog_slope
    fit = fit_loglog_slope([5.0, 10.0, 20.0], [k**0.34 for k in (5.0, 10.0, 20.0)])
    inv_svg = open([p for p in paths if "inv_sigma_min" in p][0]).read()
    assert f"slope {fit.slope:.3f}" in inv_svg


def test_plot_deterministic(tmp_path):
    csv_path = tmp_path / "synth.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cli.SWEEP_COLUMNS)
        for k in (5.0, 10.0, 20.0):
            w.writerow(["circle", k, 50, 0.5, "sik", 0.0, 0.5, 0.2, 2.5,
                        10, 10, 0.1, "ok"])
    p1 = cli.emit_plot(str(csv_path), str(tmp_path / "p1"))
    p2 = cli.emit_plot(str(csv_path), str(tmp_path / "p2"))
    assert open(p1[0]).read() == open(p2[0]).read()


def test_plot_empty_errors(tmp_path):
    csv_path = tmp_path / "empty.csv"
    with open(csv_path, "w", newline="") as f:
        csv.writer(f).writerow(cli.SWEEP_COLUMNS)
    with pytest.raises(ValueError):
        cli.emit_plot(str(csv_path), str(tmp_path / "nope"))
    assert not os.path.exists(tmp_path / "nope_sigma_max.svg")


def test_plot_gmres_csv(tmp_path):
    csv_path = tmp_path / "gm.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cli.GMRES_COLUMNS)
        for k in (5.0, 10.0):
            for alpha in (0.0, 0.5):
                w.writerow(["kite", k, alpha, 0.5, 0.5 * k**-alpha, 17, True, 1e-7])
    paths = cli.emit_plot(str(csv_path), str(tmp_path / "gm"))
    assert len(paths) == 1
    assert "gmres_iters" in paths[0]


def test_dump_geometry(tmp_path):
    out = tmp_path / "kite.csv"
    assert run_cli(["dump-geometry", "--geometry", "kite", "--samples", "64",
                    "--out", out]) == 0
    rows = _read_csv(out)
    assert len(rows) == 64
    assert set(rows[0]) == {"t", "x", "y", "nx", "ny"}
    nx, ny = float(rows[0]["nx"]), float(rows[0]["ny"])
    assert np.hypot(nx, ny) == pytest.approx(1.0, abs=1e-12)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "helmbem.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep" in proc.stdout


def test_parallel_workers_match_serial(tmp_path):
    spec = cli.OperatorSpec(geometry="circle", k_list=(2.0, 4.0, 8.0), ppw=4.0)
    serial = cli.run_sweep(spec, workers=1)
    parallel = cli.run_sweep(spec, workers=2)
    for a, b in zip(serial.rows, parallel.rows):
        for col in cli.SWEEP_COLUMNS:
            if col != "wall_seconds":
                assert a[col] == b[col], col


def test_eta_schedule_validation():
    with pytest.raises(ValueError):
        cli.OperatorSpec(k_list=(5.0, 5.0))
    with pytest.raises(ValueError):
        cli.OperatorSpec(eta=cli.EtaSchedule(c=0.0))
    sched = cli.EtaSchedule(c=0.5, alpha=1 / 3)
    assert sched(8.0) == pytest.approx(0.25)
