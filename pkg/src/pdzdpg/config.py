"""Experiment configuration: JSON schema, validation, defaults, and hashing.

Configs are strict: unknown keys are rejected so typos cannot silently fall
back to defaults.  Loaded configs are fully materialized (every default
filled in) and hashed over their canonical JSON form, minus the seed list;
the hash travels with every output file so post-hoc tooling can refuse to
mix runs from different setups.  Config values stay plain Python scalars and
tuples; arrays appear only when a problem is actually built.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .learner import StepSchedule
from .smoothing import SmoothingParams

__all__ = [
    "ConfigError",
    "ProblemSpec",
    "PolicySpec",
    "SlackConfig",
    "ThetaInit",
    "InitSpec",
    "BenchmarkSpec",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
]

ALGO_NAMES = ("pdzdpg+", "pdzdpg")
_ALGO_ALIASES = {"pdzdpg+": "pdzdpg+", "pdzdpg_plus": "pdzdpg+", "pdzdpg": "pdzdpg"}


class ConfigError(ValueError):
    """Schema violation; carries a message naming the offending field."""


def _reject_unknown(section: str, given: dict, allowed: tuple[str, ...]) -> None:
    unknown = set(given) - set(allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}; allowed: {list(allowed)}")


def _positive(section: str, name: str, value) -> float:
    value = _number(section, name, value)
    if not value > 0.0:
        raise ConfigError(f"{section}.{name} must be positive, got {value}")
    return value


def _number(section: str, name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{name} must be a number, got {value!r}")
    return float(value)


def _int_at_least(section: str, name: str, value, floor: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{name} must be an integer, got {value!r}")
    if value < floor:
        raise ConfigError(f"{section}.{name} must be >= {floor}, got {value}")
    return value


def _vector(section: str, name: str, value, n: int, positive: bool) -> tuple[float, ...]:
    """Accept a scalar (broadcast) or a length-n list; return a tuple."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        out = (float(value),) * n
    elif isinstance(value, list):
        if len(value) != n:
            raise ConfigError(f"{section}.{name} must have length {n}, got {len(value)}")
        out = tuple(_number(section, name, item) for item in value)
    else:
        raise ConfigError(f"{section}.{name} must be a number or list, got {value!r}")
    if positive and any(item <= 0.0 for item in out):
        raise ConfigError(f"{section}.{name} entries must be positive")
    return out


@dataclass(frozen=True)
class ProblemSpec:
    kind: str  # "awgn" (orthogonal links) or "mai" (shared medium)
    n_users: int
    p_max: float
    noise: tuple[float, ...]
    channel_mean: tuple[float, ...]
    weight_seed: int
    weights: tuple[float, ...] | None = None


@dataclass(frozen=True)
class PolicySpec:
    kind: str  # "per_user" (one subnet per user) or "global" (one shared net)
    hidden: tuple[int, ...]


@dataclass(frozen=True)
class SlackConfig:
    mode: str = "zero"
    c_r: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ThetaInit:
    """Seeded fan-in-scaled random draw for the policy parameters."""

    scheme: str
    seed: int


@dataclass(frozen=True)
class InitSpec:
    x: float
    theta: float | ThetaInit  # a number fills every parameter with that value
    lam: float


@dataclass(frozen=True)
class BenchmarkSpec:
    which: str  # "waterfilling" or "wmmse"
    n_mc: int
    seed: int


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    problem: ProblemSpec
    policy: PolicySpec
    algo: str
    smoothing: SmoothingParams
    slack: SlackConfig
    schedule: StepSchedule
    init: InitSpec
    n_iters: int
    seeds: tuple[int, ...]
    benchmark: BenchmarkSpec
    ma_window: int = 1000
    log_every: int = 100
    record_wall_time: bool = False

    def as_dict(self) -> dict:
        """Fully defaulted echo, JSON-ready."""
        return {
            "name": self.name,
            "problem": {
                "kind": self.problem.kind,
                "n_users": self.problem.n_users,
                "p_max": self.problem.p_max,
                "noise": list(self.problem.noise),
                "channel_mean": list(self.problem.channel_mean),
                "weight_seed": self.problem.weight_seed,
                "weights": None if self.problem.weights is None else list(self.problem.weights),
            },
            "policy": {"kind": self.policy.kind, "hidden": list(self.policy.hidden)},
            "algo": self.algo,
            "smoothing": {"mu_s": self.smoothing.mu_s, "mu_r": self.smoothing.mu_r},
            "slack": {
                "mode": self.slack.mode,
                "c_r": None if self.slack.c_r is None else list(self.slack.c_r),
            },
            "schedule": {
                "alpha_x": self.schedule.alpha_x,
                "alpha_theta": self.schedule.alpha_theta,
                "alpha_lambda_rate": self.schedule.alpha_lambda_rate,
                "alpha_lambda_power": self.schedule.alpha_lambda_power,
                "alpha_lambda_s": self.schedule.alpha_lambda_s,
            },
            "init": {
                "x": self.init.x,
                "theta": (
                    self.init.theta
                    if not isinstance(self.init.theta, ThetaInit)
                    else {"scheme": self.init.theta.scheme, "seed": self.init.theta.seed}
                ),
                "lambda": self.init.lam,
            },
            "n_iters": self.n_iters,
            "seeds": list(self.seeds),
            "ma_window": self.ma_window,
            "log_every": self.log_every,
            "record_wall_time": self.record_wall_time,
            "benchmark": {
                "which": self.benchmark.which,
                "n_mc": self.benchmark.n_mc,
                "seed": self.benchmark.seed,
            },
        }

    def config_hash(self) -> str:
        """Hash of the canonical setup; the seed list deliberately stays out,
        so runs of different seeds under one setup share a hash."""
        echo = self.as_dict()
        del echo["seeds"]
        canon = json.dumps(echo, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def with_algo(self, algo: str) -> "ExperimentConfig":
        algo = _ALGO_ALIASES.get(algo)
        if algo is None:
            raise ConfigError(f"algo must be one of {list(_ALGO_ALIASES)}")
        return dataclasses.replace(self, algo=algo)

    def with_seeds(self, seeds: list[int]) -> "ExperimentConfig":
        if not seeds:
            raise ConfigError("seed list must be nonempty")
        return dataclasses.replace(self, seeds=tuple(int(s) for s in seeds))


def _parse_problem(raw: dict) -> ProblemSpec:
    _reject_unknown(
        "problem",
        raw,
        ("kind", "n_users", "p_max", "noise", "channel_mean", "weight_seed", "weights"),
    )
    kind = raw.get("kind")
    if kind not in ("awgn", "mai"):
        raise ConfigError(f"problem.kind must be 'awgn' or 'mai', got {kind!r}")
    n_users = _int_at_least("problem", "n_users", raw.get("n_users"), 1)
    weights = raw.get("weights")
    if weights is not None:
        weights = _vector("problem", "weights", weights, n_users, positive=True)
        total = sum(weights)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"problem.weights must sum to 1, got {total}")
    return ProblemSpec(
        kind=kind,
        n_users=n_users,
        p_max=_positive("problem", "p_max", raw.get("p_max")),
        noise=_vector("problem", "noise", raw.get("noise", 1.0), n_users, positive=True),
        channel_mean=_vector(
            "problem", "channel_mean", raw.get("channel_mean", 2.0), n_users, positive=True
        ),
        weight_seed=_int_at_least("problem", "weight_seed", raw.get("weight_seed", 0), 0),
        weights=weights,
    )


def _parse_policy(raw: dict, problem: ProblemSpec) -> PolicySpec:
    _reject_unknown("policy", raw, ("kind", "hidden"))
    kind = raw.get("kind")
    if kind not in ("per_user", "global"):
        raise ConfigError(f"policy.kind must be 'per_user' or 'global', got {kind!r}")
    hidden = raw.get("hidden")
    if not isinstance(hidden, list) or not hidden:
        raise ConfigError("policy.hidden must be a nonempty list of widths")
    return PolicySpec(
        kind=kind,
        hidden=tuple(_int_at_least("policy", "hidden", w, 1) for w in hidden),
    )


def _parse_schedule(raw: dict) -> StepSchedule:
    _reject_unknown(
        "schedule",
        raw,
        ("alpha_x", "alpha_theta", "alpha_lambda_rate", "alpha_lambda_power", "alpha_lambda_s"),
    )
    for key in ("alpha_x", "alpha_theta", "alpha_lambda_rate", "alpha_lambda_power"):
        if key not in raw:
            raise ConfigError(f"schedule.{key} is required")
    alpha_s = raw.get("alpha_lambda_s")
    try:
        return StepSchedule(
            alpha_x=_positive("schedule", "alpha_x", raw["alpha_x"]),
            alpha_theta=_positive("schedule", "alpha_theta", raw["alpha_theta"]),
            alpha_lambda_rate=_positive("schedule", "alpha_lambda_rate", raw["alpha_lambda_rate"]),
            alpha_lambda_power=_positive(
                "schedule", "alpha_lambda_power", raw["alpha_lambda_power"]
            ),
            alpha_lambda_s=None if alpha_s is None else _positive("schedule", "alpha_lambda_s", alpha_s),
        )
    except ValueError as err:
        raise ConfigError(f"schedule: {err}") from err


def _parse_slack(raw: dict, n_outputs: int) -> SlackConfig:
    _reject_unknown("slack", raw, ("mode", "c_r"))
    mode = raw.get("mode", "zero")
    if mode not in ("zero", "linear"):
        raise ConfigError(f"slack.mode must be 'zero' or 'linear', got {mode!r}")
    c_r = raw.get("c_r")
    if mode == "linear":
        if c_r is None:
            raise ConfigError("slack.c_r is required in linear mode")
        c_r = _vector("slack", "c_r", c_r, n_outputs, positive=False)
        if any(item < 0.0 for item in c_r):
            raise ConfigError("slack.c_r entries must be nonnegative")
    elif c_r is not None:
        raise ConfigError("slack.c_r is only meaningful in linear mode")
    return SlackConfig(mode=mode, c_r=c_r)


def _parse_benchmark(raw: dict, problem: ProblemSpec) -> BenchmarkSpec:
    _reject_unknown("benchmark", raw, ("which", "n_mc", "seed"))
    matching = {"awgn": "waterfilling", "mai": "wmmse"}[problem.kind]
    which = raw.get("which", matching)
    if which not in ("waterfilling", "wmmse"):
        raise ConfigError(f"benchmark.which must be 'waterfilling' or 'wmmse', got {which!r}")
    if which != matching:
        raise ConfigError(
            f"benchmark.which={which!r} does not fit problem.kind={problem.kind!r}"
        )
    default_n_mc = 1_000_000 if which == "waterfilling" else 10_000
    return BenchmarkSpec(
        which=which,
        n_mc=_int_at_least("benchmark", "n_mc", raw.get("n_mc", default_n_mc), 2),
        seed=_int_at_least("benchmark", "seed", raw.get("seed", 0), 0),
    )


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    _reject_unknown(
        "config",
        raw,
        (
            "name",
            "problem",
            "policy",
            "algo",
            "smoothing",
            "slack",
            "schedule",
            "init",
            "n_iters",
            "seeds",
            "ma_window",
            "log_every",
            "record_wall_time",
            "benchmark",
        ),
    )
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("name must be a nonempty string")
    for section in ("problem", "policy", "schedule"):
        if not isinstance(raw.get(section), dict):
            raise ConfigError(f"{section} section is required")
    problem = _parse_problem(raw["problem"])
    policy = _parse_policy(raw["policy"], problem)

    algo = _ALGO_ALIASES.get(raw.get("algo", "pdzdpg+"))
    if algo is None:
        raise ConfigError(f"algo must be one of {list(_ALGO_ALIASES)}")

    smoothing_raw = raw.get("smoothing", {})
    _reject_unknown("smoothing", smoothing_raw, ("mu_s", "mu_r"))
    try:
        smoothing = SmoothingParams(
            mu_s=_number("smoothing", "mu_s", smoothing_raw.get("mu_s", 0.1)),
            mu_r=_positive("smoothing", "mu_r", smoothing_raw.get("mu_r", 0.1)),
        )
    except ValueError as err:
        raise ConfigError(f"smoothing: {err}") from err

    init_raw = raw.get("init", {})
    _reject_unknown("init", init_raw, ("x", "theta", "lambda"))
    theta_raw = init_raw.get("theta", 0.0)
    if isinstance(theta_raw, dict):
        _reject_unknown("init.theta", theta_raw, ("scheme", "seed"))
        if theta_raw.get("scheme") != "he":
            raise ConfigError(f"init.theta.scheme must be 'he', got {theta_raw.get('scheme')!r}")
        theta = ThetaInit(scheme="he", seed=_int_at_least("init.theta", "seed", theta_raw.get("seed"), 0))
    else:
        theta = _number("init", "theta", theta_raw)
    init = InitSpec(
        x=_number("init", "x", init_raw.get("x", 1.0)),
        theta=theta,
        lam=_number("init", "lambda", init_raw.get("lambda", 1.0)),
    )
    if init.x < 0.0:
        raise ConfigError("init.x must be nonnegative (the metric set is the orthant)")
    if init.lam < 0.0:
        raise ConfigError("init.lambda must be nonnegative")

    seeds_raw = raw.get("seeds")
    if not isinstance(seeds_raw, list) or not seeds_raw:
        raise ConfigError("seeds must be a nonempty list of integers")
    seeds = tuple(_int_at_least("config", "seeds", s, 0) for s in seeds_raw)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")

    return ExperimentConfig(
        name=name,
        problem=problem,
        policy=policy,
        algo=algo,
        smoothing=smoothing,
        slack=_parse_slack(raw.get("slack", {}), problem.n_users + 1),
        schedule=_parse_schedule(raw["schedule"]),
        init=init,
        n_iters=_int_at_least("config", "n_iters", raw.get("n_iters"), 0),
        seeds=seeds,
        ma_window=_int_at_least("config", "ma_window", raw.get("ma_window", 1000), 1),
        log_every=_int_at_least("config", "log_every", raw.get("log_every", 100), 1),
        record_wall_time=bool(raw.get("record_wall_time", False)),
        benchmark=_parse_benchmark(raw.get("benchmark", {}), problem),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from None
    return config_from_dict(raw)
