"""Command-line interface.

Subcommands: ``train`` (run an experiment config), ``baseline`` (write the
model-based benchmark sidecar on its own), ``aggregate`` (bootstrap bands
across seed CSVs), and ``verify`` (self-checks).  Exit codes: 0 success,
2 bad config or inputs, 3 a run diverged, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .config import ConfigError, load_config
from .verification import run_verification


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"--seeds must be comma-separated integers, got {text!r}") from None


def _cmd_train(args) -> int:
    config = load_config(args.config)
    suffix = ""
    if args.algo is not None:
        override = config.with_algo(args.algo)
        if override.algo != config.algo:
            suffix = f"_{override.algo}"
        config = override
    if args.seeds is not None:
        config = config.with_seeds(_parse_seeds(args.seeds))
    result = harness.run_experiment(config, args.out, dir_suffix=suffix)
    print(f"wrote {result.out_dir}")
    for entry in result.manifest["runs"]:
        status = "diverged at iteration {}".format(
            entry["divergence"]["iteration"]
        ) if entry["diverged"] else "ok"
        print(f"  seed {entry['seed']}: {status}")
    return 3 if result.any_diverged else 0


def _cmd_baseline(args) -> int:
    config = load_config(args.config)
    if args.which != config.benchmark.which:
        raise ConfigError(
            f"--which {args.which} does not fit this config "
            f"(problem.kind={config.problem.kind!r} wants {config.benchmark.which!r})"
        )
    problem = harness.build_problem(config)
    benchmark = harness.compute_benchmark(config, problem)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "benchmark.json"
    with open(path, "w") as fh:
        json.dump(benchmark, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}: value={benchmark['value']:.6f} stderr={benchmark['stderr']:.2e}")
    return 0


def _cmd_aggregate(args) -> int:
    try:
        harness.aggregate_runs(
            args.in_dir, args.out, n_boot=args.boot, level=args.level, boot_seed=args.boot_seed
        )
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


def _cmd_verify(args) -> int:
    results = run_verification(full=args.full)
    failed = 0
    for result in results:
        tag = "PASS" if result.passed else "FAIL"
        print(f"{tag} {result.name}: {result.detail}")
        failed += 0 if result.passed else 1
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdzdpg",
        description="Model-free primal-dual training for constrained power allocation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run every seed of an experiment config")
    train.add_argument("--config", required=True, help="path to a JSON experiment config")
    train.add_argument("--algo", choices=["pdzdpg+", "pdzdpg"], help="override the config's algorithm")
    train.add_argument("--out", default="out", help="output root directory (default: out)")
    train.add_argument("--seeds", help="comma-separated seed override, e.g. 1,2,3")
    train.set_defaults(fn=_cmd_train)

    baseline = sub.add_parser("baseline", help="compute the model-based benchmark sidecar")
    baseline.add_argument("--config", required=True)
    baseline.add_argument("--which", required=True, choices=["waterfilling", "wmmse"])
    baseline.add_argument("--out", required=True, help="directory for benchmark.json")
    baseline.set_defaults(fn=_cmd_baseline)

    aggregate = sub.add_parser("aggregate", help="bootstrap confidence bands across seed CSVs")
    aggregate.add_argument("--in", dest="in_dir", required=True, help="experiment directory")
    aggregate.add_argument("--out", required=True, help="output CSV path")
    aggregate.add_argument("--boot", type=int, default=1000, help="bootstrap resamples")
    aggregate.add_argument("--level", type=float, default=0.95, help="band coverage level")
    aggregate.add_argument("--boot-seed", type=int, default=0, help="bootstrap RNG seed")
    aggregate.set_defaults(fn=_cmd_aggregate)

    verify = sub.add_parser("verify", help="run the self-check suite")
    verify.add_argument("--full", action="store_true", help="include the statistical checks")
    verify.set_defaults(fn=_cmd_verify)
    return parser


def entrypoint(argv: list[str] | None = None) -> None:
    args = _build_parser().parse_args(argv)
    try:
        code = args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        code = 2
    except Exception as err:  # noqa: BLE001 - the CLI boundary maps everything to exit 1
        print(f"error: {err}", file=sys.stderr)
        code = 1
    sys.exit(code)


if __name__ == "__main__":
    entrypoint()
