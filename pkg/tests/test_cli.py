from __future__ import annotations

import csv
import io
import json

import pytest

from qamp.cli import main

from conftest import ROW1


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "row1.json"
    path.write_text(json.dumps(ROW1))
    return path


def test_rate_reports_reference_row(capsys, config):
    code, out, _ = run(capsys, "rate", "--config", str(config))
    assert code == 0
    report = json.loads(out)
    assert report["T_tot_s"] == pytest.approx(7.4, rel=0.1)
    for key in ("F", "P0s", "P_k", "breakeven_gamma_rep_hz", "regime_flags"):
        assert key in report


def test_invalid_reflectivity_names_the_field(capsys, config):
    code, out, err = run(capsys, "rate", "--config", str(config), "--R", "0")
    assert code == 1 and out == ""
    assert "R" in err.split(":")[1]


def test_missing_field_and_bad_json(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({k: v for k, v in ROW1.items() if k != "q"}))
    code, _, err = run(capsys, "rate", "--config", str(path))
    assert code == 1 and "q" in err
    path.write_text("{not json")
    code, _, err = run(capsys, "rate", "--config", str(path))
    assert code == 1 and "JSON" in err


def test_env_config_and_flag_override(capsys, config, monkeypatch):
    monkeypatch.setenv("QAMP_CONFIG", str(config))
    _, out, _ = run(capsys, "rate", "--p", "3.6e-3", "--R", "0.23")
    report = json.loads(out)
    assert report["p"] == 3.6e-3
    assert report["T_tot_s"] == pytest.approx(7.8, rel=0.1)


def test_prep_time_plumbing(capsys, config):
    _, out, _ = run(capsys, "rate", "--config", str(config), "--gamma-rep", "1e7", "--include-prep-time")
    report = json.loads(out)
    assert report["prep_time_included"]
    assert report["tau_s"] == pytest.approx(report["prep_time_s"] + report["communication_time_s"])


@pytest.mark.parametrize("extra", [[], ["--gamma-rep", "5e7", "--include-prep-time"], ["--printed-link-coefficient"]])
def test_report_round_trips_as_config(capsys, config, tmp_path, extra):
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    assert main(["rate", "--config", str(config), "--out", str(first), *extra]) == 0
    assert main(["rate", "--config", str(first), "--out", str(second)]) == 0
    assert json.loads(first.read_text()) == json.loads(second.read_text())


def test_ideal(capsys, config):
    code, out, _ = run(capsys, "ideal", "--config", str(config))
    assert code == 0
    assert json.loads(out)["T_ideal_s"] == pytest.approx(6.0, rel=0.1)


def test_sweep_csv(capsys, config):
    code, out, _ = run(capsys, "sweep", "--config", str(config), "--variable", "R", "--values", "0.12,0,0.2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    assert "T_tot_s" in rows[0]
    assert rows[0]["T_tot_s"] == f"{float(rows[0]['T_tot_s']):.6g}"
    assert len(rows[0]["T_tot_s"].replace(".", "").lstrip("0")) <= 6
    assert rows[1]["T_tot_s"] == "" and "R" in rows[1]["error"]


def test_sweep_needs_a_variable(capsys, config):
    code, _, err = run(capsys, "sweep", "--config", str(config), "--values", "0.1")
    assert code == 1 and "variable" in err


def test_optimize_small_grid(capsys, tmp_path):
    path = tmp_path / "hw.json"
    hw = {k: v for k, v in ROW1.items() if k not in ("p", "R", "nesting_levels")}
    path.write_text(json.dumps({**hw, "p_points": 8, "R_points": 10, "n_max": 4}))
    code, out, _ = run(capsys, "optimize", "--config", str(path))
    assert code == 0
    report = json.loads(out)
    assert report["feasible"] and report["F"] >= 0.9


def test_optimize_infeasible_is_not_an_error(capsys, config):
    code, out, _ = run(capsys, "optimize", "--config", str(config), "--f-min", "1.0", "--n-max", "1")
    assert code == 0
    assert json.loads(out)["feasible"] is False


def test_verify_exit_codes(capsys):
    base = ["verify", "--p", "1e-5", "--q", "0.999", "--R", "0.2"]
    code, out, _ = run(capsys, *base, "--eta-d", "1.0", "--tolerance", "0.5")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, *base, "--eta-d", "0.9", "--tolerance", "1e-12")
    assert code == 2 and not json.loads(out)["passed"]
    code, _, err = run(capsys, *base, "--eta-d", "0.9", "--kind", "link")
    assert code == 1 and "eta_m" in err


def test_table1_text(capsys):
    code, out, _ = run(capsys, "table1")
    assert code == 0
    lines = out.strip().splitlines()
    assert sum("PASS" in line for line in lines) == 3


def test_table1_csv(capsys):
    _, out, _ = run(capsys, "table1", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["T_tot_ref_s"] for r in rows] == ["7.4", "7.8", "19.2"]
