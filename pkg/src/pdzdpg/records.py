"""Per-run metric tracking and the CSV format trained runs are stored in.

Each run produces one CSV: a leading comment line carrying the config hash, a
fixed header, then one row every ``log_every`` iterations.  Floats are written
with ``repr``, which round-trips 64-bit values exactly and keeps reruns
bitwise comparable.

Column semantics:

* ``inst_sumrate``: weighted sumrate of the unperturbed action at this
  iteration's channel draw.
* ``ma_sumrate``: mean of ``inst_sumrate`` over the trailing ``ma_window``
  iterations (shorter prefix straight after start).
* ``power_violation``: ``max(0, ma_power - p_max)`` with ``ma_power`` the
  trailing-average transmit power.
* ``max_rate_residual``: largest per-user gap ``x_i - ma_rate_i`` between the
  claimed ergodic metric and the observed trailing-average rate; positive
  means some rate constraint is currently violated.
* ``objective``: the objective evaluated at the current metric iterate.
* ``wall_ns``: wall time of this iteration, zero when timing is off.
"""

from __future__ import annotations

import csv
from typing import Callable

import numpy as np

from .learner import LearnerState, StepInfo

__all__ = ["CSV_COLUMNS", "CSV_HEADER", "RunWriter", "MetricsTracker", "read_run_csv"]

CSV_COLUMNS = (
    "iter",
    "seed",
    "inst_sumrate",
    "ma_sumrate",
    "power_used",
    "power_violation",
    "max_rate_residual",
    "lambda_power",
    "objective",
    "wall_ns",
)
CSV_HEADER = ",".join(CSV_COLUMNS)

_INT_COLUMNS = frozenset({"iter", "seed", "wall_ns"})


class RunWriter:
    """Owns one per-seed CSV file; rows go through :meth:`write_row`."""

    def __init__(self, path, config_hash: str, seed: int):
        self.path = path
        self.seed = int(seed)
        self._fh = open(path, "w", newline="\n")
        self._fh.write(f"# config_hash={config_hash}\n")
        self._fh.write(CSV_HEADER + "\n")

    def write_row(
        self,
        it: int,
        inst_sumrate: float,
        ma_sumrate: float,
        power_used: float,
        power_violation: float,
        max_rate_residual: float,
        lambda_power: float,
        objective: float,
        wall_ns: int,
    ) -> None:
        fields = (
            str(int(it)),
            str(self.seed),
            repr(float(inst_sumrate)),
            repr(float(ma_sumrate)),
            repr(float(power_used)),
            repr(float(power_violation)),
            repr(float(max_rate_residual)),
            repr(float(lambda_power)),
            repr(float(objective)),
            str(int(wall_ns)),
        )
        self._fh.write(",".join(fields) + "\n")

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "RunWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class MetricsTracker:
    """Turns raw per-iteration measurements into logged CSV rows.

    Acts as the learner's sink: call it with ``(it, info, state, wall_ns)``.
    Keeps ring buffers of the last ``ma_window`` sumrates, powers, and
    per-user rates; trailing means are recomputed from the buffers at logging
    time, so there is no running-sum drift.
    """

    def __init__(
        self,
        weights: np.ndarray,
        p_max: float,
        ma_window: int,
        log_every: int,
        objective_of: Callable[[np.ndarray], float],
        writer: RunWriter | None = None,
    ):
        if ma_window < 1:
            raise ValueError(f"ma_window must be >= 1, got {ma_window}")
        if log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {log_every}")
        self.weights = np.asarray(weights, dtype=np.float64)
        self.p_max = float(p_max)
        self.ma_window = int(ma_window)
        self.log_every = int(log_every)
        self.objective_of = objective_of
        self.writer = writer
        n = self.weights.shape[0]
        self._sumrate_buf = np.zeros(ma_window)
        self._power_buf = np.zeros(ma_window)
        self._rates_buf = np.zeros((ma_window, n))
        self._count = 0
        self.rail_hits = 0
        self.last_row: dict[str, float] | None = None

    def __call__(self, it: int, info: StepInfo, state: LearnerState, wall_ns: int) -> None:
        inst = float(self.weights @ info.rates)
        slot = self._count % self.ma_window
        self._sumrate_buf[slot] = inst
        self._power_buf[slot] = info.power_used
        self._rates_buf[slot] = info.rates
        self._count += 1
        if info.x_rail_hit:
            self.rail_hits += 1
        if it % self.log_every != 0:
            return

        filled = min(self._count, self.ma_window)
        ma_sumrate = float(self._sumrate_buf[:filled].mean())
        ma_power = float(self._power_buf[:filled].mean())
        ma_rates = self._rates_buf[:filled].mean(axis=0)
        row = {
            "iter": it,
            "inst_sumrate": inst,
            "ma_sumrate": ma_sumrate,
            "power_used": info.power_used,
            "power_violation": max(0.0, ma_power - self.p_max),
            "max_rate_residual": float((state.x - ma_rates).max()),
            "lambda_power": float(state.lambda_r[-1]),
            "objective": self.objective_of(state.x),
            "wall_ns": int(wall_ns),
        }
        self.last_row = row
        if self.writer is not None:
            self.writer.write_row(
                it=it,
                inst_sumrate=row["inst_sumrate"],
                ma_sumrate=row["ma_sumrate"],
                power_used=row["power_used"],
                power_violation=row["power_violation"],
                max_rate_residual=row["max_rate_residual"],
                lambda_power=row["lambda_power"],
                objective=row["objective"],
                wall_ns=row["wall_ns"],
            )


def read_run_csv(path) -> tuple[str, dict[str, np.ndarray]]:
    """Load one run CSV; returns its config hash and a column dictionary."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# config_hash="):
            raise ValueError(f"{path}: missing config-hash comment line")
        config_hash = first.split("=", 1)[1]
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [line for line in reader if line]
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(CSV_COLUMNS):
        dtype = np.int64 if name in _INT_COLUMNS else np.float64
        columns[name] = np.array([row[j] for row in rows], dtype=dtype)
    return config_hash, columns
