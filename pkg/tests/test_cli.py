import json

import pytest

from pdzdpg import cli, harness
from pdzdpg.learner import DivergenceError

from test_harness import _SabotagedLearner, tiny_config


@pytest.fixture
def config_path(tmp_path):
    cfg = tiny_config(seeds=[1, 2], n_iters=120, benchmark={"n_mc": 200, "seed": 11})
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(cfg.as_dict()))
    return path


def run_cli(*argv):
    with pytest.raises(SystemExit) as exc:
        cli.entrypoint(list(argv))
    return exc.value.code


def test_train_writes_an_experiment(config_path, tmp_path, capsys):
    out_root = tmp_path / "out"
    assert run_cli("train", "--config", str(config_path), "--out", str(out_root)) == 0
    captured = capsys.readouterr().out
    assert "wrote" in captured and "seed 1: ok" in captured
    out = out_root / "tiny"
    assert (out / "seed_1.csv").exists() and (out / "seed_2.csv").exists()
    assert (out / "benchmark.json").exists() and (out / "manifest.json").exists()


def test_train_algo_override_gets_its_own_directory(config_path, tmp_path):
    out_root = tmp_path / "out"
    assert run_cli(
        "train", "--config", str(config_path), "--out", str(out_root),
        "--algo", "pdzdpg", "--seeds", "1",
    ) == 0
    out = out_root / "tiny_pdzdpg"
    assert (out / "seed_1.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["algo"] == "pdzdpg"
    assert [e["seed"] for e in manifest["runs"]] == [1]


def test_train_reports_divergence_with_exit_3(config_path, tmp_path, monkeypatch, capsys):
    real_build = harness.build_learner
    monkeypatch.setattr(
        harness,
        "build_learner",
        lambda config, problem: _SabotagedLearner(real_build(config, problem), fail_at=60),
    )
    code = run_cli(
        "train", "--config", str(config_path), "--out", str(tmp_path / "out"), "--seeds", "1"
    )
    assert code == 3
    assert "diverged at iteration 60" in capsys.readouterr().out


def test_train_bad_inputs_exit_2(config_path, tmp_path):
    assert run_cli("train", "--config", str(tmp_path / "nope.json")) == 2
    assert run_cli(
        "train", "--config", str(config_path), "--out", str(tmp_path), "--seeds", "1,x"
    ) == 2


def test_baseline_writes_sidecar(config_path, tmp_path, capsys):
    out = tmp_path / "bench"
    code = run_cli(
        "baseline", "--config", str(config_path), "--which", "waterfilling", "--out", str(out)
    )
    assert code == 0
    sidecar = json.loads((out / "benchmark.json").read_text())
    assert set(sidecar) == {"value", "stderr", "n_mc", "seed"}
    assert "value=" in capsys.readouterr().out


def test_baseline_which_must_match_problem(config_path, tmp_path):
    code = run_cli(
        "baseline", "--config", str(config_path), "--which", "wmmse", "--out", str(tmp_path)
    )
    assert code == 2


def test_aggregate_roundtrip(config_path, tmp_path):
    out_root = tmp_path / "out"
    assert run_cli("train", "--config", str(config_path), "--out", str(out_root)) == 0
    agg = tmp_path / "bands.csv"
    code = run_cli(
        "aggregate", "--in", str(out_root / "tiny"), "--out", str(agg), "--boot", "100"
    )
    assert code == 0 and agg.exists()


def test_aggregate_rejects_thin_input(config_path, tmp_path, capsys):
    out_root = tmp_path / "out"
    assert run_cli(
        "train", "--config", str(config_path), "--out", str(out_root), "--seeds", "1"
    ) == 0
    code = run_cli("aggregate", "--in", str(out_root / "tiny"), "--out", str(tmp_path / "a.csv"))
    assert code == 2
    assert "at least two" in capsys.readouterr().err
