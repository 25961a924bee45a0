import json

import numpy as np
import pytest

from thlasso.cli import main
from thlasso.io import load_matrix, load_signal


@pytest.fixture
def data(tmp_path):
    assert main(["gen", "--n", "40", "--p", "30", "--s", "3", "--seed", "1", "--out", str(tmp_path)]) == 0
    return tmp_path


def test_gen_writes_files(data):
    X = load_matrix(data / "X.csv").data
    assert X.shape == (40, 30)
    assert np.count_nonzero(load_signal(data / "beta.csv").coef) == 3


def test_gen_binary_and_tiger(tmp_path):
    rc = main(["gen", "--ensemble", "toeplitz", "--gamma", "0.5", "--n", "30", "--p", "40", "--beta", "tiger",
               "--a0", "2", "--s0", "4", "--s", "8", "--C-m", "0.7", "--format", "bin", "--out", str(tmp_path)])
    assert rc == 0
    assert load_matrix(tmp_path / "X.thlx").data.shape == (30, 40)
    assert main(["gen", "--n", "10", "--p", "5", "--beta", "tiger", "--out", str(tmp_path)]) == 1


@pytest.mark.filterwarnings("ignore:t0 = .* outside:RuntimeWarning")
@pytest.mark.parametrize("est", ["lasso", "tlasso", "dantzig", "gauss_dantzig"])
def test_fit(data, est, capsys):
    out = data / f"b_{est}.csv"
    rc = main(["fit", "--matrix", str(data / "X.csv"), "--response", str(data / "Y.csv"),
               "--estimator", est, "--t0-factor", "1.0", "--save-beta", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    if est in ("lasso", "dantzig"):
        assert text.startswith("lambda,nnz,objective,kkt_residual")
    else:
        assert "selection" in json.loads(text)
    assert load_signal(out).coef.size == 30


def test_diagnose(data, capsys):
    rc = main(["diagnose", "--matrix", str(data / "X.csv"), "--m", "1", "--m", "2", "--theta", "1,1", "--json"])
    assert rc == 0
    d = json.loads(capsys.readouterr().out)
    assert d["exact"]["eigs:2"] and "1,1" in d["theta"]
    assert main(["diagnose", "--matrix", str(data / "X.csv"), "--m", "3", "--mode", "exhaustive"]) == 0
    assert "Lambda_min(3)" in capsys.readouterr().out


def test_experiment_config(tmp_path, capsys):
    cfg = {"kind": "type12_curves", "design": {"kind": "iid_gaussian", "n": 30, "p": 40},
           "beta": {"type": "spiked", "s": 3}, "threshold_factors": [0.5, 1.0], "reps": 2}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    rc = main(["experiment", "--config", str(path), "--out", str(tmp_path / "run"), "--workers", "1"])
    assert rc == 0
    assert (tmp_path / "run" / "summary.csv").exists()
    path.write_text("{not json")
    assert main(["experiment", "--config", str(path)]) == 1
    path.write_text(json.dumps({**cfg, "extra": 1}))
    assert main(["experiment", "--config", str(path)]) == 2


def test_experiment_preset_overrides(tmp_path):
    rc = main(["experiment", "--preset", "diagnose", "--reps", "2", "--seed", "5", "--out", str(tmp_path)])
    assert rc == 0
    assert json.loads((tmp_path / "config.json").read_text())["master_seed"] == 5


def test_usage_and_runtime_errors(tmp_path, capsys):
    assert main(["bogus"]) == 1
    assert main(["fit", "--unknown-flag"]) == 1
    assert main(["diagnose", "--matrix", str(tmp_path / "missing.csv")]) == 2
    assert main(["version"]) == 0
    assert capsys.readouterr().out.startswith("thlasso ")
