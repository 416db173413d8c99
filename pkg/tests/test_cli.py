import csv
import json
import subprocess
import sys

import pytest

from homoglab.cli import CSV_COLUMNS, main

EPS = [0.5, 0.25, 0.125, 0.0625]


def write_config(tmp_path, **over):
    cfg = {"problem": "dirichlet", "domain": {"kind": "ball", "dim": 2},
           "data": {"file": "ex_y2.json"}, "p": [1, 2], "eps": EPS}
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_sweep_outputs(tmp_path):
    out = tmp_path / "out"
    code = main(["sweep", "--config", write_config(tmp_path), "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert list(rows[0]) == CSV_COLUMNS and len(rows) == 8
    assert all(r["wallclock_ms"] == "" for r in rows)
    assert rows[0]["slope_so_far"] == "" and rows[1]["slope_so_far"] != ""
    # 17 significant digits round-trip exactly
    assert float(rows[0]["eps"]) == 0.5
    man = json.load(open(out / "manifest.json"))
    assert {f["model"] for f in man["fits"]} == {"power", "log"}
    assert man["config"]["data"]["inline"]["dim"] == 2
    assert "numpy" in man["versions"]


def test_timing_fills_wallclock(tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", "--config", write_config(tmp_path), "--out", str(out), "--timing"]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert all(float(r["wallclock_ms"]) > 0 for r in rows)


@pytest.mark.parametrize("over", [{"eps": [0.1, 0.05, 0.02, 0.01]}, {"p": [0.5]},
                                  {"problem": "heat"}, {"eps": [0.5, 0.25]},
                                  {"data": {"file": "missing.json"}},
                                  {"problem": "theorem13"}])
def test_config_errors_exit_2(tmp_path, over, capsys):
    code = main(["sweep", "--config", write_config(tmp_path, **over), "--out", str(tmp_path)])
    assert code == 2
    assert "[cli:config]" in capsys.readouterr().err


def test_assertion_failure_exit_4(tmp_path, capsys):
    cfg = write_config(tmp_path, assertions=[{"p": 1, "min_slope": 5.0}])
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 4
    assert "[cli:assertion]" in capsys.readouterr().err


def test_resolution_failure_exit_3(tmp_path, capsys):
    # a mode of this size needs more boundary nodes than the spectral cap allows
    cfg = write_config(tmp_path, p=[1],
                       data={"inline": {"dim": 2, "coeffs": [{"m": [0, 400000], "re": 1.0}]}})
    out = tmp_path / "o"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 3
    assert "quadrature-doubling" in capsys.readouterr().err
    man = json.load(open(out / "manifest.json"))
    assert len(man["errors"]) == 4


def test_theorem13_config_runs(tmp_path):
    cfg = write_config(tmp_path, problem="theorem13", domain={"kind": "ball", "dim": 3},
                       data={"file": "ex_y3.json"}, tensor={"file": "curl_layered_d3.json"},
                       p=[1])
    out = tmp_path / "o"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    man = json.load(open(out / "manifest.json"))
    assert man["cell"]["residual"] <= 1e-8


def test_certify_cell_constant(tmp_path):
    assert main(["certify", "cell", "--dim", "3", "--out", str(tmp_path)]) == 0
    rep = json.load(open(tmp_path / "certify_cell.json"))
    assert rep["Ahat_equals_A"]


def test_certify_kernel_and_stationary(tmp_path):
    assert main(["certify", "kernel", "--out", str(tmp_path)]) == 0
    assert main(["certify", "stationary-phase", "--out", str(tmp_path)]) == 0
    rep = json.load(open(tmp_path / "certify_stationary-phase.json"))
    assert rep["slope"] >= 1.4


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "homoglab", "sweep", "--config",
                           write_config(tmp_path, eps=[0.1, 0.05, 0.02, 0.01]),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 2 and "geometric" in proc.stderr
