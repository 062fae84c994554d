"""The command-line contract: subcommands, file outputs, exit codes.

Everything here drives ``cli.main`` in-process (cheap, same code path as the
console script); one subprocess smoke test proves the installed entry point
resolves. Determinism is asserted at the byte level on solution.json and
trajectory.csv — manifests carry timestamps by design and are exempt.
"""

import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from csctraj.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    EXIT_SOLVER,
    main,
)

REPO = Path(__file__).resolve().parents[1]
MINI = str(REPO / "configs" / "mini.json")
CASE1 = str(REPO / "configs" / "case1.json")
MIXED = str(REPO / "configs" / "e1.json")


def _read_csv(path: Path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


@pytest.fixture(scope="module")
def solve_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("mini_solve")
    assert main(["solve", "--config", MINI, "--seed", "0",
                 "--out-dir", str(out)]) == EXIT_OK
    return out


# --- modes ----------------------------------------------------------------------------

def test_modes_same_type(tmp_path, capsys):
    assert main(["modes", "--config", CASE1,
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    header, rows = _read_csv(tmp_path / "modes.csv")
    assert header == ["mode_index", "p_used_w", "n_at_pmax", "n_at_pmin",
                      "mdot_full_mg_s"]
    assert len(rows) == 14
    assert rows[0][0] == "1" and float(rows[0][1]) == 19356.0
    assert rows[0][2] == "4" and rows[0][3] == "0"
    assert float(rows[-1][1]) == 302.0
    assert "14 operation modes" in capsys.readouterr().out
    assert not (tmp_path / "modes_raw.csv").exists()

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "modes"
    assert manifest["outputs"] == {"modes": "modes.csv"}
    assert manifest["config"]["name"] == "case1-67p-4xE3"
    assert manifest["seed"] is None


def test_modes_mixed_with_raw(tmp_path, capsys):
    assert main(["modes", "--config", MIXED, "--raw",
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    header, rows = _read_csv(tmp_path / "modes.csv")
    assert header == ["mode_index", "p_used_w", "setting_e0", "setting_e1",
                      "mdot_full_mg_s"]
    assert len(rows) == 5

    raw_header, raw_rows = _read_csv(tmp_path / "modes_raw.csv")
    assert raw_header == header
    assert len(raw_rows) == 8
    assert "raw (pre-filter) modes: 8" in capsys.readouterr().out
    # the filtered table is a subset of the raw power levels
    raw_powers = {row[1] for row in raw_rows}
    assert {row[1] for row in rows} <= raw_powers


# --- solve ------------------------------------------------------------------------------

def test_solution_schema(solve_dir):
    doc = json.loads((solve_dir / "solution.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["name"] == "mini-1au-spiral"
    assert doc["seed"] == 0
    assert doc["n_rev"] == 0
    assert doc["rho_final"] == 0.01
    assert doc["schedule_steps"] == 6
    assert doc["sweep"] is None
    assert len(doc["eta0"]) == 7
    assert all(isinstance(v, float) for v in doc["eta0"])
    assert len(doc["residual"]) == 7
    assert max(abs(v) for v in doc["residual"]) < 1e-9
    assert doc["residual_inf"] < 1e-9
    assert doc["rho_reached"] == doc["rho_final"]
    assert 420.0 < doc["m_final_kg"] < 600.0
    assert doc["mass_fraction"] == pytest.approx(doc["m_final_kg"] / 600.0)
    assert isinstance(doc["trace"], list) and doc["trace"]
    assert doc["trace"][-1]["success"] is True


def test_solution_has_no_timestamps(solve_dir):
    doc = json.loads((solve_dir / "solution.json").read_text())
    assert "started_utc" not in doc and "finished_utc" not in doc
    traj = (solve_dir / "trajectory.csv").read_text().splitlines()[0]
    assert "utc" not in traj


def test_trajectory_contents(solve_dir):
    header, rows = _read_csv(solve_dir / "trajectory.csv")
    # 1 engine -> 2 channels -> 10 state/control columns + 2*2 + 2
    assert header[:10] == ["t_days", "p_au", "f", "g", "h", "k", "l_rad",
                           "r_au", "m_kg", "thrust_mN"]
    assert header[10:] == ["S_max", "S_min", "zeta_max", "zeta_min",
                           "engaged_mode", "w_max"]
    assert float(rows[0][0]) == 0.0
    assert float(rows[0][8]) == 600.0
    assert float(rows[-1][0]) == pytest.approx(300.0, abs=1e-9)
    t_days = np.array([float(r[0]) for r in rows])
    m_kg = np.array([float(r[8]) for r in rows])
    r_au = np.array([float(r[7]) for r in rows])
    assert np.all(np.diff(t_days) > 0)
    assert np.all(np.diff(m_kg) <= 0)
    assert m_kg[-1] < 600.0
    assert 0.5 < r_au.min() and r_au.max() < 2.5


def test_solve_manifest(solve_dir):
    manifest = json.loads((solve_dir / "manifest.json").read_text())
    assert manifest["command"] == "solve"
    assert manifest["seed"] == 0
    assert manifest["outputs"] == {"solution": "solution.json",
                                   "trajectory": "trajectory.csv"}
    assert manifest["config"] == json.loads(Path(MINI).read_text())
    assert manifest["tool"] == "csctraj"
    assert "started_utc" in manifest and "finished_utc" in manifest
    assert manifest["finished_utc"] >= manifest["started_utc"]


def test_solve_is_deterministic(solve_dir, tmp_path):
    assert main(["solve", "--config", MINI, "--seed", "0",
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    assert ((tmp_path / "solution.json").read_bytes()
            == (solve_dir / "solution.json").read_bytes())
    assert ((tmp_path / "trajectory.csv").read_bytes()
            == (solve_dir / "trajectory.csv").read_bytes())


def test_solver_flag_overrides(tmp_path):
    assert main(["solve", "--config", MINI, "--seed", "0",
                 "--rho-final", "0.05", "--schedule-steps", "4",
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "solution.json").read_text())
    assert doc["rho_final"] == 0.05
    assert doc["schedule_steps"] == 4
    assert doc["rho_reached"] == 0.05


def test_sweep_nrev(tmp_path):
    assert main(["solve", "--config", MINI, "--seed", "0",
                 "--sweep-nrev", "0,0,1", "--out-dir", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "solution.json").read_text())
    sweep = doc["sweep"]
    assert [item["n_rev"] for item in sweep["items"]] == [0, 1]  # dedup
    assert sweep["best_n_rev"] is not None
    assert doc["n_rev"] == sweep["best_n_rev"]
    best = next(item for item in sweep["items"]
                if item["n_rev"] == sweep["best_n_rev"])
    assert best["success"] is True
    assert doc["eta0"] == best["eta0"]
    converged = [item["m_final_kg"] for item in sweep["items"]
                 if item["success"]]
    assert best["m_final_kg"] == max(converged)


# --- propagate --------------------------------------------------------------------------

def test_propagate_round_trip_all_input_forms(solve_dir, tmp_path):
    reference = (solve_dir / "trajectory.csv").read_bytes()
    doc = json.loads((solve_dir / "solution.json").read_text())

    fmt_dirs = {}
    # 1. object with an eta0 field: solution.json itself
    # 2. bare JSON array
    # 3. whitespace-separated text
    (tmp_path / "eta_arr.json").write_text(json.dumps(doc["eta0"]))
    (tmp_path / "eta.txt").write_text(
        "\n".join(repr(v) for v in doc["eta0"]) + "\n")
    sources = {"object": solve_dir / "solution.json",
               "array": tmp_path / "eta_arr.json",
               "text": tmp_path / "eta.txt"}
    for label, src in sources.items():
        out = tmp_path / label
        assert main(["propagate", "--config", MINI, "--out-dir", str(out),
                     str(src)]) == EXIT_OK
        fmt_dirs[label] = out
        assert (out / "trajectory.csv").read_bytes() == reference

    manifest = json.loads((fmt_dirs["object"] / "manifest.json").read_text())
    assert manifest["command"] == "propagate"
    assert manifest["outputs"] == {"trajectory": "trajectory.csv"}


# --- failure modes ------------------------------------------------------------------------

def test_exit_config_missing_file(tmp_path, capsys):
    code = main(["solve", "--config", str(tmp_path / "nope.json"),
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_exit_config_invalid_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["modes", "--config", str(bad),
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert "invalid JSON" in capsys.readouterr().err


def test_exit_config_unknown_solver_field(tmp_path, capsys):
    doc = json.loads(Path(MINI).read_text())
    doc["solver"]["warp_factor"] = 9
    cfg = tmp_path / "warp.json"
    cfg.write_text(json.dumps(doc))
    assert main(["solve", "--config", str(cfg),
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert "unknown fields" in capsys.readouterr().err


def test_exit_config_bad_sweep_expression(tmp_path, capsys):
    assert main(["solve", "--config", MINI, "--sweep-nrev", "3..1",
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert "--sweep-nrev" in capsys.readouterr().err


def test_exit_config_bad_costate_file(tmp_path, capsys):
    eta = tmp_path / "eta.txt"
    eta.write_text("0.1 0.2 0.3\n")  # wrong length
    assert main(["propagate", "--config", MINI, "--out-dir", str(tmp_path),
                 str(eta)]) == EXIT_CONFIG
    assert "7 finite values" in capsys.readouterr().err


def test_exit_solver_nonconvergence(tmp_path, capsys):
    doc = json.loads(Path(MINI).read_text())
    doc["solver"] = {"rho_final": 0.01, "schedule_steps": 0,
                     "rho_start": 0.01, "max_trials": 2, "maxfev": 6}
    cfg = tmp_path / "starved.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "run"
    assert main(["solve", "--config", str(cfg),
                 "--out-dir", str(out)]) == EXIT_SOLVER
    assert "solver failed" in capsys.readouterr().err
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["message"] == "no trial converged in 2 attempts"
    assert diag["seed"] == 0
    assert diag["rho_reached"] is None  # nan became null
    assert diag["m_final_kg"] is None
    assert diag["eta_partial"] is None
    assert len(diag["trace"]) == 2
    assert not (out / "solution.json").exists()


def test_exit_runtime_propagation_failure(solve_dir, tmp_path, capsys):
    doc = json.loads(Path(MINI).read_text())
    doc["solver"]["max_steps"] = 5
    cfg = tmp_path / "steps.json"
    cfg.write_text(json.dumps(doc))
    code = main(["propagate", "--config", str(cfg),
                 "--out-dir", str(tmp_path), str(solve_dir / "solution.json")])
    assert code == EXIT_RUNTIME
    assert "propagation failed" in capsys.readouterr().err


# --- installed entry point ------------------------------------------------------------------

def test_console_script_smoke(tmp_path):
    exe = shutil.which("csctraj")
    assert exe, "console script not installed"
    proc = subprocess.run([exe, "modes", "--config", MINI,
                           "--out-dir", str(tmp_path)],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "modes.csv").exists()
    assert "operation modes" in proc.stdout
