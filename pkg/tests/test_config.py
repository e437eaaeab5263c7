"""Config schema: shipped files, defaults, validation messages, hashing."""

import dataclasses
import json
from pathlib import Path

import pytest

from pdzdpg.config import (
    ConfigError,
    ThetaInit,
    config_from_dict,
    load_config,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def minimal_raw(**overrides):
    raw = {
        "name": "unit",
        "problem": {"kind": "awgn", "n_users": 2, "p_max": 20.0},
        "policy": {"kind": "per_user", "hidden": [4]},
        "schedule": {
            "alpha_x": 0.001,
            "alpha_theta": 0.02,
            "alpha_lambda_rate": 0.008,
            "alpha_lambda_power": 0.0001,
        },
        "n_iters": 100,
        "seeds": [1, 2],
    }
    raw.update(overrides)
    return raw


def test_shipped_awgn_config():
    cfg = load_config(f"{CONFIG_DIR}/awgn10.json")
    assert cfg.problem.kind == "awgn"
    assert cfg.problem.n_users == 10
    assert cfg.problem.p_max == 20.0
    assert cfg.policy.kind == "per_user" and cfg.policy.hidden == (8, 4)
    assert cfg.algo == "pdzdpg+"
    sched = cfg.schedule
    assert (sched.alpha_x, sched.alpha_theta) == (0.001, 0.02)
    assert (sched.alpha_lambda_rate, sched.alpha_lambda_power) == (0.008, 0.0001)
    assert cfg.init.x == 1.0 and cfg.init.theta == 0.0 and cfg.init.lam == 1.0
    assert cfg.n_iters == 100_000 and len(cfg.seeds) == 5
    assert cfg.benchmark.which == "waterfilling" and cfg.benchmark.n_mc == 1_000_000


def test_shipped_mai_config():
    cfg = load_config(f"{CONFIG_DIR}/mai10.json")
    assert cfg.problem.kind == "mai" and cfg.problem.n_users == 10
    assert cfg.policy.kind == "global" and cfg.policy.hidden == (64, 32)
    sched = cfg.schedule
    assert (sched.alpha_x, sched.alpha_theta) == (0.001, 0.04)
    assert (sched.alpha_lambda_rate, sched.alpha_lambda_power) == (0.008, 0.0001)
    assert cfg.init.x == 0.0
    assert cfg.benchmark.which == "wmmse" and cfg.benchmark.n_mc == 10_000


def test_shipped_timing_config():
    cfg = load_config(f"{CONFIG_DIR}/mai5_timing.json")
    assert cfg.problem.n_users == 5
    assert cfg.policy.hidden == (512, 256)
    assert cfg.n_iters == 10_000
    assert cfg.record_wall_time is True
    assert cfg.log_every == 1


def test_defaults_are_applied():
    cfg = config_from_dict(minimal_raw())
    assert cfg.problem.noise == (1.0, 1.0)
    assert cfg.problem.channel_mean == (2.0, 2.0)
    assert cfg.algo == "pdzdpg+"
    assert cfg.smoothing.mu_s == 0.1 and cfg.smoothing.mu_r == 0.1
    assert cfg.slack.mode == "zero"
    assert cfg.init.x == 1.0 and cfg.init.theta == 0.0 and cfg.init.lam == 1.0
    assert cfg.ma_window == 1000 and cfg.log_every == 100
    assert cfg.record_wall_time is False
    assert cfg.benchmark.which == "waterfilling" and cfg.benchmark.n_mc == 1_000_000


def test_mai_gets_wmmse_benchmark_default():
    raw = minimal_raw(problem={"kind": "mai", "n_users": 3, "p_max": 20.0})
    cfg = config_from_dict(raw)
    assert cfg.benchmark.which == "wmmse" and cfg.benchmark.n_mc == 10_000


def test_as_dict_round_trips():
    for path in ("awgn10.json", "mai10.json", "mai5_timing.json"):
        cfg = load_config(f"{CONFIG_DIR}/{path}")
        echo = cfg.as_dict()
        again = config_from_dict(json.loads(json.dumps(echo)))
        assert again == cfg
        assert again.config_hash() == cfg.config_hash()


def test_hash_ignores_seeds_but_not_setup():
    cfg = config_from_dict(minimal_raw())
    assert cfg.with_seeds([7, 8, 9]).config_hash() == cfg.config_hash()
    other = config_from_dict(minimal_raw(n_iters=101))
    assert other.config_hash() != cfg.config_hash()
    renamed = dataclasses.replace(cfg, name="other")
    assert renamed.config_hash() != cfg.config_hash()


def test_algo_aliases():
    cfg = config_from_dict(minimal_raw(algo="pdzdpg_plus"))
    assert cfg.algo == "pdzdpg+"
    assert cfg.with_algo("pdzdpg").algo == "pdzdpg"
    with pytest.raises(ConfigError):
        cfg.with_algo("sgd")
    with pytest.raises(ConfigError):
        config_from_dict(minimal_raw(algo="adam"))
    with pytest.raises(ConfigError):
        cfg.with_seeds([])


def test_theta_init_object_form():
    raw = minimal_raw(init={"x": 1.0, "theta": {"scheme": "he", "seed": 5}, "lambda": 1.0})
    cfg = config_from_dict(raw)
    assert cfg.init.theta == ThetaInit(scheme="he", seed=5)
    echo = cfg.as_dict()
    assert echo["init"]["theta"] == {"scheme": "he", "seed": 5}
    assert config_from_dict(echo) == cfg

    with pytest.raises(ConfigError):
        config_from_dict(minimal_raw(init={"theta": {"scheme": "xavier", "seed": 5}}))
    with pytest.raises(ConfigError):
        config_from_dict(minimal_raw(init={"theta": {"scheme": "he"}}))
    with pytest.raises(ConfigError):
        config_from_dict(minimal_raw(init={"theta": {"scheme": "he", "seed": 5, "gain": 2}}))


@pytest.mark.parametrize(
    "mutation",
    [
        {"unknown_top": 1},
        {"name": ""},
        {"problem": {"kind": "ofdm", "n_users": 2, "p_max": 20.0}},
        {"problem": {"kind": "awgn", "n_users": 0, "p_max": 20.0}},
        {"problem": {"kind": "awgn", "n_users": 2, "p_max": -1.0}},
        {"problem": {"kind": "awgn", "n_users": 2, "p_max": 20.0, "noise": [1.0]}},
        {"problem": {"kind": "awgn", "n_users": 2, "p_max": 20.0, "weights": [0.9, 0.3]}},
        {"problem": {"kind": "awgn", "n_users": 2, "p_max": 20.0, "extra": 1}},
        {"policy": {"kind": "transformer", "hidden": [4]}},
        {"policy": {"kind": "global", "hidden": []}},
        {"schedule": {"alpha_x": 0.001, "alpha_theta": 0.02, "alpha_lambda_rate": 0.008}},
        {
            "schedule": {
                "alpha_x": -0.001,
                "alpha_theta": 0.02,
                "alpha_lambda_rate": 0.008,
                "alpha_lambda_power": 0.0001,
            }
        },
        {"smoothing": {"mu_r": 0.0}},
        {"smoothing": {"mu_q": 0.1}},
        {"init": {"x": -1.0}},
        {"init": {"lambda": -0.5}},
        {"seeds": []},
        {"seeds": [1, 1]},
        {"seeds": [1.5]},
        {"n_iters": None},
        {"benchmark": {"which": "wmmse"}},
        {"benchmark": {"n_mc": 1}},
        {"slack": {"mode": "linear"}},
        {"slack": {"mode": "zero", "c_r": [1.0, 1.0, 1.0]}},
        {"slack": {"mode": "linear", "c_r": [1.0, -1.0, 1.0]}},
    ],
)
def test_invalid_configs_are_rejected(mutation):
    raw = minimal_raw(**mutation)
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_linear_slack_accepted():
    cfg = config_from_dict(minimal_raw(slack={"mode": "linear", "c_r": [1.0, 1.0, 2.0]}))
    assert cfg.slack.mode == "linear" and cfg.slack.c_r == (1.0, 1.0, 2.0)


def test_explicit_weights_accepted():
    raw = minimal_raw(
        problem={"kind": "awgn", "n_users": 2, "p_max": 20.0, "weights": [0.25, 0.75]}
    )
    cfg = config_from_dict(raw)
    assert cfg.problem.weights == (0.25, 0.75)


def test_load_config_error_paths(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    assert issubclass(ConfigError, ValueError)
