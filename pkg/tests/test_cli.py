import json
import subprocess
import sys

import numpy as np
import pytest

from gcmport.cli import main
from gcmport.estimators import ReturnPanel
from gcmport.io import read_matrix, read_panel, write_panel


def run(argv):
    return main([str(a) for a in argv])


def tree(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


@pytest.fixture
def sim(tmp_path):
    out = tmp_path / "sim"
    assert run(["simulate", "--n", 10, "--t", 100, "--nu", "inf", "--seed", 1, "--out", out]) == 0
    return out


def test_simulate_shape_and_rerun(sim, tmp_path):
    panel = read_panel(sim / "panel.csv")
    assert panel.values.shape == (10, 100)
    again = tmp_path / "again"
    run(["simulate", "--n", 10, "--t", 100, "--nu", "inf", "--seed", 1, "--out", again])
    assert tree(sim) == tree(again)
    meta = json.loads((sim / "panel.json").read_text())
    assert meta["schema"] == "gcmport.simulate/v1" and meta["nu"] is None  # inf is not valid JSON


def test_simulate_records_nu(tmp_path):
    assert run(["simulate", "--n", 5, "--t", 20, "--nu", 3, "--out", tmp_path]) == 0
    assert json.loads((tmp_path / "panel.json").read_text())["nu"] == 3


def test_invalid_nu(tmp_path, capsys):
    assert run(["simulate", "--nu", 1, "--out", tmp_path]) == 2
    assert "nu must be > 2" in capsys.readouterr().err


def test_simulate_duplicate(tmp_path):
    run(["simulate", "--n", 6, "--t", 30, "--duplicate-rho", 0.99, "--out", tmp_path])
    c, ids = read_matrix(tmp_path / "truth.csv")
    assert c.shape == (7, 7) and c[0, 6] == 0.99


def test_estimate_toy(tmp_path):
    panel = tmp_path / "toy.csv"
    panel.write_text("asset,d0,d1,d2,d3,d4\nx,1,2,0,3,1\ny,0,1,1,2,0\nz,2,0,1,1,3\n")
    out = tmp_path / "est"
    assert run(["estimate", "--panel", panel, "--methods", "pearson,kendall,gcc:sign", "--out", out]) == 0
    m, ids = read_matrix(out / "corr_pearson.csv")
    assert ids == ["x", "y", "z"]
    np.testing.assert_allclose(m, m.T, atol=1e-12)
    np.testing.assert_allclose(np.diag(m), 1.0, atol=1e-12)
    assert (out / "corr_kendall.csv").read_bytes() == (out / "corr_gcc_sign.csv").read_bytes()


def test_estimate_rie_warning(sim, tmp_path):
    panel = read_panel(sim / "panel.csv")
    short = tmp_path / "short.csv"
    write_panel(short, ReturnPanel(panel.values[:, :8], panel.asset_ids, panel.timestamps[:8]))
    out = tmp_path / "rie"
    assert run(["estimate", "--panel", short, "--methods", "rie", "--out", out]) == 0
    index = json.loads((out / "index.json").read_text())
    assert "zero modes persist" in index["outputs"][0]["warnings"][0]


def test_estimate_failure_exit_code(tmp_path):
    panel = tmp_path / "flat.csv"
    panel.write_text("asset,d0,d1,d2,d3\nx,1,2,3,5\ny,4,4,4,4\nz,2,0,1,1\n")
    assert run(["estimate", "--panel", panel, "--methods", "kendall", "--out", tmp_path / "o"]) == 3


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("simulate:\n  n: 4\n  t: 12\n  nu: 5\n")
    out = tmp_path / "c"
    assert run(["simulate", "--config", cfg, "--t", 15, "--out", out]) == 0
    meta = json.loads((out / "panel.json").read_text())
    assert (meta["n_assets"], meta["n_obs"], meta["nu"]) == (4, 15, 5)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 4, "colour": "red"}))
    assert run(["simulate", "--config", bad, "--out", out]) == 2


@pytest.mark.parametrize("argv", [
    ["eigs", "--n", 20, "--q", "0.5,2", "--methods", "pearson,kendall,rie_id"],
    ["duplicate", "--n", 20, "--q", "1,2", "--seeds", 3],
    ["fcm", "--n", 20, "--q", 1, "--nu", "3,inf", "--seeds", 2, "--n-max", 5, "--random-draws", 5],
    ["backtest", "--n", 20, "--q", "0.5", "--n-windows", 2, "--t-out", 5, "--seeds", 2,
     "--methods", "kendall_icvc,rie_id,clipped"],
])
def test_experiment_commands_deterministic(argv, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--seed", 3, "--out", a]) == 0
    assert run(argv + ["--seed", 3, "--out", b, "--workers", 2]) == 0
    files = tree(a)
    assert files == tree(b)
    index = json.loads(files["index.json"])
    assert index["schema"].startswith("gcmport.") and index["params"]["seed"] == 3


def test_backtest_failures_exit_3(tmp_path):
    assert run(["backtest", "--n", 20, "--q", 2, "--n-windows", 1, "--t-out", 5, "--seeds", 1,
                "--methods", "pearson", "--strategies", "min_variance", "--out", tmp_path]) == 3
    report = json.loads((tmp_path / "backtest_q2_rep0.json").read_text())
    assert report["failures"][0]["method"] == "pearson"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gcmport", "simulate", "--n", "3", "--t", "5",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "panel.csv").exists()
