import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mpdg import runio
from mpdg.cases import CASE_IDS, CaseSpec, case_defaults, linear_exchange_exact
from mpdg.cli import main
from mpdg.errors import ConfigurationError
from mpdg.studies import convergence_study, sigma_accuracy_slope, sigma_sweep


def test_case_defaults_pin_the_published_parameters():
    p = case_defaults("ode-linear")
    assert p["c0"] == [4.5, 3.2] and p["a"] == 2.7 and p["t_final"] == 1.0
    p = case_defaults("ode-nonlinear")
    assert p["c0"] == [9.98, 0.01, 0.01] and p["a"] == 1.0
    p = case_defaults("euler1d-3species")
    assert p["p_left"] == 1000.0 and p["p_right"] == 1.0
    assert p["rho_left"][0] == 5.251896311257204e-5
    p = case_defaults("euler2d-convergence")
    assert p["radius_sq"] == 0.36 and p["p_inside"] == 80.0 and p["p_outside"] == 1e-9
    p = case_defaults("euler2d-diffraction")
    assert p["state_left"] == [11.0, 6.18, 0.0, 970.0, 1.0]
    assert p["rate_constant"] == 2566.4 and p["gamma"] == 1.2


def test_unknown_case_and_param_rejected():
    with pytest.raises(ConfigurationError):
        CaseSpec("no-such-case")
    with pytest.raises(ConfigurationError):
        CaseSpec("ode-linear", {"not_a_knob": 1})


def test_config_round_trip(tmp_path):
    spec = CaseSpec("euler2d-diffraction", {"energy_right": 5.5, "nx": 48})
    path = tmp_path / "config.json"
    runio.write_config(path, spec.case_id, spec.params)
    case_id, params = runio.read_config(path)
    respec = CaseSpec(case_id, params)
    assert respec.case_id == spec.case_id
    assert respec.params == spec.params


def test_every_case_default_config_round_trips(tmp_path):
    for case_id in CASE_IDS:
        spec = CaseSpec(case_id)
        path = tmp_path / f"{case_id}.json"
        runio.write_config(path, spec.case_id, spec.params)
        re_id, re_params = runio.read_config(path)
        assert CaseSpec(re_id, re_params).params == spec.params


def test_exact_solution_self_test():
    # error of the exact solution against itself is zero
    c = linear_exchange_exact(2.7, [4.5, 3.2], 1.0)
    assert np.abs(c - linear_exchange_exact(2.7, [4.5, 3.2], 1.0)).max() == 0.0
    assert c.sum() == pytest.approx(7.7, rel=1e-14)


def test_convergence_study_is_deterministic():
    spec = CaseSpec("ode-linear")
    t1 = convergence_study(spec, "mpms2", [1 / 20, 1 / 40, 1 / 80])
    t2 = convergence_study(spec, "mpms2", [1 / 20, 1 / 40, 1 / 80])
    assert [r.error for r in t1.rows] == [r.error for r in t2.rows]
    assert t1.monotone


def test_sigma_sweep_rows():
    spec = CaseSpec("ode-linear")
    rows = sigma_sweep(spec, "mpms2")
    assert len(rows) == 7  # s in {-1..5}
    assert all(np.isfinite(r["error"]) and r["positive"] and r["conserved"] for r in rows)
    single = sigma_sweep(spec, "mpms2", s_values=[1.5])
    assert len(single) == 1


def test_sigma_slope_check():
    spec = CaseSpec("ode-linear")
    assert sigma_accuracy_slope(spec, "mpms2") >= 1.8
    assert sigma_accuracy_slope(spec, "mpms3") >= 2.7


def test_checkpoint_round_trip(tmp_path):
    from mpdg.cases import build_pde_case
    from mpdg.driver import march, new_run

    spec = CaseSpec("euler1d-3species", {"nx": 16, "t_final": 2e-6})
    case = build_pde_case(spec)
    run = new_run(case.model, case.mesh, case.bc, case.config, case.u0)
    march(run, case.t_final)
    path = tmp_path / "state.ckpt"
    runio.write_checkpoint(path, run)
    header, u = runio.read_checkpoint(path)
    assert header["nx"] == 16 and header["degree"] == 1
    assert np.array_equal(u, run.u)


def test_snapshot_schema(tmp_path):
    from mpdg.cases import build_pde_case
    from mpdg.driver import new_run
    from mpdg.runio import snapshot_columns

    spec = CaseSpec("euler1d-3species", {"nx": 8})
    case = build_pde_case(spec)
    run = new_run(case.model, case.mesh, case.bc, case.config, case.u0)
    path = tmp_path / "snap.csv"
    runio.write_snapshot(path, case.model, case.mesh, run.qs, run.u)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == snapshot_columns(3) == ["x", "y", "rho", "u", "v", "p", "T", "z_1", "z_2", "z_3"]
    assert len(rows) - 1 == 8 * 2  # nx cells x 2 Gauss nodes
    data = np.array(rows[1:], dtype=float)
    z = data[:, 7:]
    assert np.abs(z.sum(axis=1) - 1.0).max() < 1e-9
    assert data[:, 2].min() > 0 and data[:, 5].min() > 0


def test_cli_run_ode_and_study(tmp_path):
    rc = main(["run", "ode-linear", "--override", "dt=0.05", "--out", str(tmp_path)])
    assert rc == 0
    run_dirs = list((tmp_path / "ode-linear").iterdir())
    assert len(run_dirs) == 1
    assert (run_dirs[0] / "config.json").exists()
    assert (run_dirs[0] / "trajectory.csv").exists()

    rc = main(["study", "ode-linear", "--scheme", "mpms2", "--ladder", "20,40,80", "--out", str(tmp_path)])
    assert rc == 0
    table = sorted((tmp_path / "ode-linear").iterdir())[-1] / "table.csv"
    with open(table) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert float(rows[1]["order"]) == pytest.approx(2.0, abs=0.1)


def test_cli_run_small_pde_case(tmp_path):
    rc = main([
        "run", "euler1d-3species", "--override", "nx=24", "--override", "t_final=5e-6",
        "--out", str(tmp_path), "--snapshot-every", "50",
    ])
    assert rc == 0
    run_dir = sorted((tmp_path / "euler1d-3species").iterdir())[-1]
    assert (run_dir / "snapshots" / "t0.csv").exists()
    assert (run_dir / "snapshots" / "final.csv").exists()
    assert (run_dir / "final.ckpt").exists()
    with open(run_dir / "log.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and float(rows[-1]["min_rho"]) > 0.0


def test_cli_entry_point_subprocess(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "mpdg.cli", "run", "ode-linear", "--override", "dt=0.1", "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert "final-time error" in proc.stdout


def test_cli_config_file_flow(tmp_path):
    cfg = tmp_path / "case.json"
    cfg.write_text(json.dumps({"case": "ode-linear", "params": {"dt": 0.05}}))
    rc = main(["run", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
