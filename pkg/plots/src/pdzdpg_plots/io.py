"""Readers for the artifacts the figures are drawn from.

Three file formats, all produced by the training harness: the cross-seed
aggregate CSV (a ``# config_hash=`` comment line, then ``iter,metric,mean,
lo,hi`` rows grouped by iteration), the benchmark JSON sidecar, and the
per-seed timing table.  Everything is validated on read so the figure code
never has to second-guess its inputs, and every error names the file it
came from.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

AGGREGATE_HEADER = ("iter", "metric", "mean", "lo", "hi")
TIMING_HEADER = ("algo", "label", "seed", "median_wall_ns")


@dataclass(frozen=True)
class MetricBand:
    """Mean curve for one metric plus its confidence-band edges."""

    iters: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def after(self, burn_in: int, source: Path | str = "") -> "MetricBand":
        """Drop iterations at or below ``burn_in``; error if nothing is left."""
        keep = self.iters > burn_in
        if not keep.any():
            raise ValueError(
                f"no rows left after burn-in {burn_in} "
                f"(last logged iteration is {self.iters[-1]}, {source})"
            )
        return MetricBand(self.iters[keep], self.mean[keep], self.lo[keep], self.hi[keep])


@dataclass(frozen=True)
class AggregateTable:
    source: Path
    config_hash: str
    bands: dict[str, MetricBand]

    @property
    def metrics(self) -> tuple[str, ...]:
        return tuple(self.bands)

    def band(self, metric: str) -> MetricBand:
        if metric not in self.bands:
            raise ValueError(
                f"metric {metric!r} not in {self.source}; "
                f"available: {', '.join(self.bands)}"
            )
        return self.bands[metric]


def _require_exists(path: Path) -> Path:
    if not path.is_file():
        raise ValueError(f"no such file: {path}")
    return path


def read_aggregate(path: Path | str) -> AggregateTable:
    """Parse one aggregate CSV into per-metric bands on a shared grid."""
    path = _require_exists(Path(path))
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# config_hash="):
            raise ValueError(f"{path} does not start with a config_hash comment")
        config_hash = first.split("=", 1)[1]
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != AGGREGATE_HEADER:
            raise ValueError(
                f"{path} has header {header}, expected {AGGREGATE_HEADER}"
            )
        columns: dict[str, list[tuple[int, float, float, float]]] = {}
        for row in reader:
            it, metric, mean, lo, hi = row
            columns.setdefault(metric, []).append(
                (int(it), float(mean), float(lo), float(hi))
            )
    if not columns:
        raise ValueError(f"{path} contains no data rows")

    bands = {}
    grid = None
    for metric, rows in columns.items():
        arr = np.array(rows, dtype=float)
        iters = arr[:, 0].astype(np.int64)
        if grid is None:
            grid = iters
            if not (np.diff(grid) > 0).all():
                raise ValueError(f"{path}: iteration grid is not increasing")
        elif not np.array_equal(iters, grid):
            raise ValueError(f"{path}: metric {metric!r} is on a different grid")
        bands[metric] = MetricBand(iters, arr[:, 1], arr[:, 2], arr[:, 3])
    return AggregateTable(source=path, config_hash=config_hash, bands=bands)


def read_benchmark(path: Path | str) -> dict:
    """Load a benchmark sidecar; the ``value`` field must be a finite number."""
    path = _require_exists(Path(path))
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as err:
        raise ValueError(f"{path} is not valid JSON: {err}") from None
    if not isinstance(payload, dict) or "value" not in payload:
        raise ValueError(f"{path} has no 'value' field")
    if not math.isfinite(payload["value"]):
        raise ValueError(f"{path} has a non-finite benchmark value")
    return payload


@dataclass(frozen=True)
class TimingRow:
    algo: str
    label: str
    seed: int
    median_wall_ns: int


def read_timing(path: Path | str) -> list[TimingRow]:
    path = _require_exists(Path(path))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != TIMING_HEADER:
            missing = [name for name in TIMING_HEADER if name not in header]
            what = f"missing column(s) {missing}" if missing else f"header {header}"
            raise ValueError(f"{path}: {what}, expected {TIMING_HEADER}")
        rows = [
            TimingRow(algo, label, int(seed), int(wall))
            for algo, label, seed, wall in reader
        ]
    if not rows:
        raise ValueError(f"{path} contains no timing rows")
    return rows


def best_times(rows: list[TimingRow]) -> dict[tuple[str, str], int]:
    """Best (smallest) median step time per (algo, label) across seeds."""
    best: dict[tuple[str, str], int] = {}
    for row in rows:
        key = (row.algo, row.label)
        if key not in best or row.median_wall_ns < best[key]:
            best[key] = row.median_wall_ns
    return best
