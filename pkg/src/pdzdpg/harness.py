"""Experiment orchestration: build problems from configs, run seeds, aggregate.

An experiment writes one directory containing

* ``seed_<s>.csv`` per seed (format in :mod:`pdzdpg.records`),
* ``benchmark.json`` with the model-based reference value,
* ``timing.csv`` when wall-time recording is on,
* ``manifest.json`` echoing the full config, hash, versions, and per-seed
  outcomes (including divergence, which truncates that seed's CSV but never
  the experiment).

Seeds run in parallel when the machine has spare cores, serially otherwise;
timed runs are always serial so iterations do not compete for the clock.
Every path through here is deterministic given the config: per-seed
generators are seeded directly with the seed value, the benchmark has its
own seed, and manifests carry no timestamps.
"""

from __future__ import annotations

import json
import os
import platform
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, baselines, records
from .config import ExperimentConfig, ThetaInit
from .learner import (
    ActionSpaceLearner,
    DivergenceError,
    LearnerState,
    LinearObjective,
    ParamSpaceLearner,
    Problem,
    SlackSpec,
    run as run_learner,
)
from .policy import MlpPolicy, PerUserPolicy
from .smoothing import BoxSet
from .systems import AwgnService, ExponentialChannels, MaiService

__all__ = [
    "experiment_weights",
    "metric_cap",
    "build_problem",
    "build_learner",
    "initial_state",
    "compute_benchmark",
    "run_experiment",
    "ExperimentResult",
    "aggregate_runs",
    "AGGREGATE_METRICS",
]

AGGREGATE_METRICS = (
    "inst_sumrate",
    "ma_sumrate",
    "power_used",
    "power_violation",
    "max_rate_residual",
    "lambda_power",
    "objective",
)


def experiment_weights(config: ExperimentConfig) -> np.ndarray:
    """Positive user weights summing to one, either pinned or drawn once."""
    spec = config.problem
    if spec.weights is not None:
        return np.asarray(spec.weights, dtype=np.float64)
    rng = np.random.Generator(np.random.PCG64(spec.weight_seed))
    w = rng.uniform(size=spec.n_users)
    return w / w.sum()


def metric_cap(config: ExperimentConfig) -> np.ndarray:
    """Upper safety rail for the ergodic metric.

    The metric set is unbounded above; the rail sits at ten times the rate a
    user would get from spending the whole budget on the average channel, far
    beyond any attainable operating point, and exists purely to keep a
    diverging iterate finite.  Hits are counted and reported.
    """
    spec = config.problem
    mean = np.asarray(spec.channel_mean)
    noise = np.asarray(spec.noise)
    return 10.0 * np.log1p(spec.p_max * mean / noise)


def build_problem(config: ExperimentConfig) -> Problem:
    spec = config.problem
    noise = np.asarray(spec.noise, dtype=np.float64)
    if spec.kind == "awgn":
        service = AwgnService(noise=noise, p_max=spec.p_max)
    else:
        service = MaiService(noise=noise, p_max=spec.p_max)
    channel = ExponentialChannels(means=np.asarray(spec.channel_mean, dtype=np.float64))
    if config.policy.kind == "per_user":
        policy = PerUserPolicy(
            n_users=spec.n_users, hidden=config.policy.hidden, p_max=spec.p_max
        )
    else:
        policy = MlpPolicy(
            n_in=spec.n_users,
            hidden=config.policy.hidden,
            n_out=spec.n_users,
            p_max=spec.p_max,
        )
    weights = experiment_weights(config)
    metric_box = BoxSet(np.zeros(spec.n_users), metric_cap(config))
    action_box = BoxSet.interval(spec.n_users, 0.0, spec.p_max)
    return Problem(
        policy=policy,
        channel=channel,
        service=service,
        weights=weights,
        metric_box=metric_box,
        action_box=action_box,
        objective=LinearObjective(weights),
    )


def build_learner(config: ExperimentConfig, problem: Problem):
    slack = SlackSpec(
        mode=config.slack.mode,
        c_r=None if config.slack.c_r is None else np.asarray(config.slack.c_r),
    )
    cls = ActionSpaceLearner if config.algo == "pdzdpg+" else ParamSpaceLearner
    return cls(problem, config.schedule, config.smoothing, slack)


def initial_state(config: ExperimentConfig, problem: Problem, learner) -> LearnerState:
    n = problem.n_users
    x0 = np.full(n, config.init.x)
    x0 = np.minimum(x0, problem.metric_box.upper)
    theta_init = config.init.theta
    if isinstance(theta_init, ThetaInit):
        theta0 = problem.policy.init_params(np.random.Generator(np.random.PCG64(theta_init.seed)))
    else:
        theta0 = np.full(problem.policy.n_params, theta_init)
    lambda_r0 = np.full(problem.n_outputs, config.init.lam)
    return learner.init_state(x0, theta0, lambda_r0)


def compute_benchmark(config: ExperimentConfig, problem: Problem) -> dict:
    bench = config.benchmark
    rng = np.random.Generator(np.random.PCG64(bench.seed))
    if bench.which == "waterfilling":
        sol = baselines.waterfill_clairvoyant(
            problem.service, problem.channel, problem.weights, bench.n_mc, rng
        )
        value, stderr = sol.achieved_sumrate, sol.sumrate_stderr
    else:
        est = baselines.wmmse_ergodic(
            problem.service, problem.channel, problem.weights, bench.n_mc, rng
        )
        value, stderr = est.value, est.stderr
    return {"value": value, "stderr": stderr, "n_mc": bench.n_mc, "seed": bench.seed}


def _run_one_seed(config: ExperimentConfig, seed: int, out_dir: str) -> dict:
    """Worker: train one seed and write its CSV; returns a manifest entry."""
    problem = build_problem(config)
    learner = build_learner(config, problem)
    state = initial_state(config, problem, learner)
    rng = np.random.Generator(np.random.PCG64(seed))
    csv_name = f"seed_{seed}.csv"
    path = os.path.join(out_dir, csv_name)
    entry: dict = {"seed": seed, "file": csv_name}
    with records.RunWriter(path, config.config_hash(), seed) as writer:
        tracker = records.MetricsTracker(
            weights=problem.weights,
            p_max=config.problem.p_max,
            ma_window=config.ma_window,
            log_every=config.log_every,
            objective_of=problem.objective.value,
            writer=writer,
        )
        try:
            run_learner(
                learner,
                state,
                config.n_iters,
                rng,
                sink=tracker,
                measure_time=config.record_wall_time,
            )
            entry["completed_iters"] = config.n_iters
            entry["diverged"] = False
        except DivergenceError as err:
            entry["completed_iters"] = err.iteration
            entry["diverged"] = True
            entry["divergence"] = {"iteration": err.iteration, "field": err.which}
    entry["rail_hits"] = tracker.rail_hits
    if config.record_wall_time:
        _, cols = records.read_run_csv(path)
        walls = cols["wall_ns"]
        entry["median_wall_ns"] = int(statistics.median(walls.tolist())) if walls.size else 0
    return entry


@dataclass(eq=False)
class ExperimentResult:
    out_dir: Path
    manifest: dict

    @property
    def any_diverged(self) -> bool:
        return any(entry["diverged"] for entry in self.manifest["runs"])


def run_experiment(
    config: ExperimentConfig,
    out_root,
    dir_suffix: str = "",
) -> ExperimentResult:
    """Train every seed of ``config`` and persist the full experiment directory."""
    out_dir = Path(out_root) / (config.name + dir_suffix)
    out_dir.mkdir(parents=True, exist_ok=True)

    problem = build_problem(config)
    benchmark = compute_benchmark(config, problem)
    with open(out_dir / "benchmark.json", "w") as fh:
        json.dump(benchmark, fh, indent=2)
        fh.write("\n")

    seeds = list(config.seeds)
    workers = min(len(seeds), os.cpu_count() or 1)
    if workers > 1 and not config.record_wall_time:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(
                pool.map(_run_one_seed, [config] * len(seeds), seeds, [str(out_dir)] * len(seeds))
            )
    else:
        entries = [_run_one_seed(config, seed, str(out_dir)) for seed in seeds]

    if config.record_wall_time:
        with open(out_dir / "timing.csv", "w", newline="\n") as fh:
            fh.write("algo,label,seed,median_wall_ns\n")
            for entry in entries:
                fh.write(
                    f"{config.algo},{config.name},{entry['seed']},{entry['median_wall_ns']}\n"
                )

    manifest = {
        "config": config.as_dict(),
        "config_hash": config.config_hash(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pdzdpg": __version__,
        },
        "weights": experiment_weights(config).tolist(),
        "metric_cap": metric_cap(config).tolist(),
        "benchmark_file": "benchmark.json",
        "runs": entries,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return ExperimentResult(out_dir=out_dir, manifest=manifest)


def aggregate_runs(
    in_dir,
    out_file,
    n_boot: int = 1000,
    level: float = 0.95,
    boot_seed: int = 0,
) -> None:
    """Seed-level percentile bootstrap over the per-seed CSVs of one directory.

    One resampling matrix drives every metric and iteration, so the bands are
    consistent across panels.  Refuses to mix config hashes or iteration
    grids, and needs at least two seeds to resample.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if n_boot < 1:
        raise ValueError(f"n_boot must be >= 1, got {n_boot}")
    in_dir = Path(in_dir)
    paths = sorted(in_dir.glob("seed_*.csv"))
    if len(paths) < 2:
        raise ValueError(f"{in_dir}: need at least two seed CSVs, found {len(paths)}")
    hashes = []
    runs = []
    for path in paths:
        config_hash, cols = records.read_run_csv(path)
        hashes.append(config_hash)
        runs.append(cols)
    if len(set(hashes)) != 1:
        raise ValueError(f"{in_dir}: refusing to aggregate mixed config hashes {sorted(set(hashes))}")
    grid = runs[0]["iter"]
    for path, cols in zip(paths[1:], runs[1:]):
        if not np.array_equal(cols["iter"], grid):
            raise ValueError(f"{path}: iteration grid differs from {paths[0]}")

    n_seeds = len(runs)
    rng = np.random.Generator(np.random.PCG64(boot_seed))
    resample = rng.integers(0, n_seeds, size=(n_boot, n_seeds))
    q_lo, q_hi = (1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0

    bands: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for metric in AGGREGATE_METRICS:
        stacked = np.stack([cols[metric] for cols in runs])  # (n_seeds, n_iters)
        means = stacked.mean(axis=0)
        boot_means = stacked[resample].mean(axis=1)  # (n_boot, n_iters)
        # The band widens to include the point estimate in the rare case a
        # short bootstrap puts a percentile on its far side.
        lo = np.minimum(np.quantile(boot_means, q_lo, axis=0), means)
        hi = np.maximum(np.quantile(boot_means, q_hi, axis=0), means)
        bands[metric] = (means, lo, hi)

    with open(out_file, "w", newline="\n") as fh:
        fh.write(f"# config_hash={hashes[0]}\n")
        fh.write("iter,metric,mean,lo,hi\n")
        for j, it in enumerate(grid):
            for metric in AGGREGATE_METRICS:
                mean, lo, hi = bands[metric]
                fh.write(
                    f"{int(it)},{metric},"
                    f"{float(mean[j])!r},{float(lo[j])!r},{float(hi[j])!r}\n"
                )
