import csv
import io
import json
import math
import subprocess
import sys

import pytest

from ste_entangle import __version__
from ste_entangle.cli import EXIT_CONFIG, EXIT_TOLERANCE, main
from ste_entangle.reporting import format_float, manifest_path


def run(capsysbinary, *argv):
    code = main(list(argv))
    out = capsysbinary.readouterr()
    return code, out.out.decode(), out.err.decode()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_evolve_equal_coupling_single_time(capsysbinary):
    t = repr(math.pi / (4 * math.sqrt(2)))
    code, out, _ = run(capsysbinary, "evolve", "--case", "ee", "--n", "0", "--g-stm", "1", "--t-min", t, "--t-max", t)
    assert code == 0
    (row,) = rows(out)
    assert float(row["concurrence"]) == pytest.approx(1.0, abs=1e-12)
    assert float(row["B"]) == pytest.approx(0.5, abs=1e-12)
    assert list(row) == ["t", "A", "B", "C", "D", "E", "concurrence", "negativity"]


def test_evolve_engines_match(capsysbinary):
    base = ["evolve", "--case", "eg", "--n", "2", "--gamma", "0.3", "--t-steps", "21"]
    _, closed, _ = run(capsysbinary, *base)
    _, oracle, _ = run(capsysbinary, *base, "--engine", "oracle")
    for a, b in zip(rows(closed), rows(oracle)):
        assert float(a["concurrence"]) == pytest.approx(float(b["concurrence"]), abs=1e-10)


def test_evolve_general_state(capsysbinary):
    code, out, _ = run(capsysbinary, "evolve", "--state", "0.6,0,0,0.8", "--n", "1", "--engine", "block", "--t-steps", "5")
    assert code == 0 and len(rows(out)) == 5


def test_evolve_json_format(capsysbinary):
    code, out, _ = run(capsysbinary, "evolve", "--format", "json", "--t-steps", "3")
    doc = json.loads(out)
    assert code == 0 and doc["columns"][0] == "t" and len(doc["rows"]) == 3


def test_csv_line_endings_and_float_format(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["evolve", "--t-steps", "4", "-o", str(out)]) == 0
    data = out.read_bytes()
    assert b"\r" not in data and data.endswith(b"\n")
    assert format_float(-0.0) == "0" and float(format_float(0.1)) == 0.1


def test_critical(capsysbinary):
    code, out, _ = run(capsysbinary, "critical", "--case", "ee", "--n", "0")
    doc = json.loads(out)
    assert code == 0
    assert doc["gamma_crit"] == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert doc["g_stm_crit"] == pytest.approx(0.1716, abs=1e-4)


def test_period_reports_reference(capsysbinary):
    code, out, _ = run(capsysbinary, "period", "--case", "ee", "--n", "0", "--g-stm", "1")
    doc = json.loads(out)
    assert code == 0 and doc["engine"] == "oracle"
    assert doc["period"] == pytest.approx(math.pi / (2 * math.sqrt(2)), abs=1e-6)
    assert doc["reference_period"] == pytest.approx(math.pi / 2)


def test_period_no_entanglement(capsysbinary):
    code, out, _ = run(capsysbinary, "period", "--case", "ee", "--n", "1", "--gamma", "1")
    doc = json.loads(out)
    assert code == 0 and doc["period"] is None and doc["reason"] == "no entanglement"


def test_sweep_grid_size(capsysbinary):
    code, out, _ = run(capsysbinary, "sweep", "--case", "eg", "--n", "1", "--gamma-steps", "3", "--t-steps", "4")
    assert code == 0 and len(rows(out)) == 12


@pytest.mark.parametrize(
    "argv",
    [
        ["evolve", "--g-stm", "0.5", "--gamma", "0.2"],
        ["evolve", "--g-drv", "0"],
        ["evolve", "--g-stm", "-1"],
        ["evolve", "--n", "-2"],
        ["evolve", "--case", "xx"],
        ["evolve", "--state", "1,1,0,0"],
        ["evolve", "--engine", "oracle", "--n", "3", "--cutoff", "5"],
        ["evolve", "--t-min", "2", "--t-max", "1"],
        ["evolve", "--t-steps", "0"],
        ["sweep", "--gamma-min", "-1"],
        ["period", "--case", "gg", "--n", "2", "--method", "analytic-xi"],
        ["period", "--state", "0.6,0,0,0.8"],
        ["critical", "--n", "-1"],
    ],
)
def test_config_errors_exit_2(capsysbinary, tmp_path, argv):
    out = tmp_path / "x.csv"
    code, _, err = run(capsysbinary, *argv, "-o", str(out))
    assert code == EXIT_CONFIG and "config error" in err
    assert not out.exists() and not manifest_path(out).exists()
    assert list(tmp_path.iterdir()) == []


def test_argparse_errors_exit_2(capsysbinary):
    with pytest.raises(SystemExit) as exc:
        main(["evolve", "--engine", "magic"])
    assert exc.value.code == 2


def test_bad_config_file(capsysbinary, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"no_such_flag": 1}')
    code, _, err = run(capsysbinary, "evolve", "--config", str(cfg))
    assert code == EXIT_CONFIG and "no_such_flag" in err
    cfg.write_text("[1, 2")
    assert run(capsysbinary, "evolve", "--config", str(cfg))[0] == EXIT_CONFIG


def test_config_overrides_flags(capsysbinary, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"t_steps": 3, "case": "eg"}))
    code, out, _ = run(capsysbinary, "evolve", "--case", "ee", "--t-steps", "50", "--config", str(cfg))
    table = rows(out)
    assert code == 0 and len(table) == 3 and float(table[0]["B"]) == 1.0


def test_manifest_contents_and_replay(tmp_path):
    out = tmp_path / "run.csv"
    argv = ["evolve", "--case", "eg", "--n", "1", "--gamma", "0.4", "--t-steps", "9", "-o", str(out)]
    assert main(argv) == 0
    manifest = json.loads(manifest_path(out).read_text())
    assert manifest["tool"] == "ste-entangle" and manifest["version"] == __version__
    assert manifest["command"] == "evolve" and manifest["engine"] == "closed-form"
    assert "wall_time_s" not in manifest and "trace-over-fock-n" in manifest["notes"]
    assert manifest["config"]["gamma"] == 0.4 and manifest["data_file"] == "run.csv"

    replay = tmp_path / "replay.csv"
    assert main(["evolve", "--config", str(manifest_path(out)), "-o", str(replay)]) == 0
    assert replay.read_bytes() == out.read_bytes()
    assert json.loads(manifest_path(replay).read_text())["data_sha256"] == manifest["data_sha256"]


def test_record_timing(tmp_path):
    out = tmp_path / "t.json"
    assert main(["critical", "-o", str(out), "--record-timing"]) == 0
    assert json.loads(manifest_path(out).read_text())["wall_time_s"] >= 0


def test_validate_pass_and_fail(tmp_path, capsysbinary):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"cases": ["eg"], "n": [1], "gamma": [0.3], "t_min": 0, "t_max": 5, "t_points": 11}))
    code, out, _ = run(capsysbinary, "validate", "--grid", str(grid))
    assert code == 0 and json.loads(out)["passed"] is True
    code, out, err = run(capsysbinary, "validate", "--grid", str(grid), "--tolerance", "1e-30")
    assert code == EXIT_TOLERANCE and json.loads(out)["passed"] is False and "exceed" in err
    grid.write_text("{}")
    assert run(capsysbinary, "validate", "--grid", str(grid))[0] == EXIT_CONFIG


def test_threads_env_does_not_change_output(monkeypatch, capsysbinary):
    argv = ["sweep", "--case", "ee", "--n", "1", "--gamma-steps", "6", "--t-steps", "30", "--engine", "block"]
    monkeypatch.setenv("STE_ENTANGLE_THREADS", "1")
    one = run(capsysbinary, *argv)[1]
    monkeypatch.setenv("STE_ENTANGLE_THREADS", "4")
    assert run(capsysbinary, *argv)[1] == one


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ste_entangle", "critical", "--case", "eg", "--n", "3"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert json.loads(proc.stdout)["gamma_crit"] == pytest.approx(math.sqrt(0.75))
