"""The three figure kinds.

``plot_convergence`` draws mean metric curves with shaded confidence bands
and horizontal benchmark reference lines.  ``plot_violations`` stacks the
power-violation and rate-residual traces with a zero line.  ``plot_timing``
draws grouped bars of the best median step time per algorithm and problem
label.  All three write a PNG and return its path.

Figures are built on explicit ``matplotlib.figure.Figure`` objects, never
through pyplot, so rendering carries no global state and the same spec
always produces the same bytes (PNG metadata that would vary per run is
stripped on save).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from matplotlib.figure import Figure

from .io import MetricBand, best_times, read_aggregate, read_benchmark, read_timing

VIOLATION_METRICS = ("power_violation", "max_rate_residual")

_FIGSIZE = (6.4, 4.0)
_BAND_ALPHA = 0.25


@dataclass(frozen=True)
class FigureSpec:
    """What to draw and where to put it.

    ``inputs`` are aggregate CSVs for the curve kinds and timing CSVs for
    the bar kind.  ``labels`` override the legend names (defaulting to the
    parent directory of each input).  ``burn_in`` drops the iterations at
    or below it before drawing; the label fields default per kind when
    left ``None``.
    """

    inputs: tuple[Path, ...]
    out: Path
    benchmarks: tuple[Path, ...] = ()
    metric: str = "ma_sumrate"
    labels: tuple[str, ...] = ()
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None
    burn_in: int = 0
    dpi: int = 150

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "benchmarks", tuple(Path(p) for p in self.benchmarks))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "out", Path(self.out))
        if not self.inputs:
            raise ValueError("need at least one input file")
        for path in (*self.inputs, *self.benchmarks):
            if not path.is_file():
                raise ValueError(f"no such file: {path}")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError(
                f"{len(self.labels)} labels for {len(self.inputs)} inputs"
            )
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.dpi <= 0:
            raise ValueError("dpi must be positive")

    def input_labels(self) -> tuple[str, ...]:
        if self.labels:
            return self.labels
        return tuple(p.resolve().parent.name or p.stem for p in self.inputs)


def _new_figure(height: float = _FIGSIZE[1]) -> Figure:
    return Figure(figsize=(_FIGSIZE[0], height), layout="constrained")


def _save(fig: Figure, spec: FigureSpec) -> Path:
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out, format="png", dpi=spec.dpi, metadata={"Software": None})
    return spec.out


def _draw_band(ax, band: MetricBand, label: str) -> None:
    (line,) = ax.plot(band.iters, band.mean, linewidth=1.4, label=label)
    ax.fill_between(
        band.iters, band.lo, band.hi,
        color=line.get_color(), alpha=_BAND_ALPHA, linewidth=0,
    )


def build_convergence(spec: FigureSpec) -> Figure:
    fig = _new_figure()
    ax = fig.subplots()
    for path, label in zip(spec.inputs, spec.input_labels()):
        table = read_aggregate(path)
        _draw_band(ax, table.band(spec.metric).after(spec.burn_in, path), label)
    for path in spec.benchmarks:
        bench = read_benchmark(path)
        ax.axhline(
            bench["value"], color="black", linestyle="--", linewidth=1.0,
            label=f"benchmark {bench['value']:.3f}",
        )
    ax.set_xlabel(spec.xlabel or "iteration")
    ax.set_ylabel(spec.ylabel or spec.metric)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    return fig


def plot_convergence(spec: FigureSpec) -> Path:
    """Mean curves with confidence bands and benchmark reference lines."""
    return _save(build_convergence(spec), spec)


def build_violations(spec: FigureSpec) -> Figure:
    fig = _new_figure(height=5.2)
    axes = fig.subplots(len(VIOLATION_METRICS), 1, sharex=True)
    tables = [read_aggregate(path) for path in spec.inputs]
    for ax, metric in zip(axes, VIOLATION_METRICS):
        for table, label in zip(tables, spec.input_labels()):
            _draw_band(ax, table.band(metric).after(spec.burn_in, table.source), label)
        ax.axhline(0.0, color="0.4", linewidth=0.8)
        ax.set_ylabel(metric.replace("_", " "))
        ax.grid(True, alpha=0.3)
    axes[0].legend(loc="upper right")
    axes[-1].set_xlabel(spec.xlabel or "iteration")
    if spec.title:
        axes[0].set_title(spec.title)
    return fig


def plot_violations(spec: FigureSpec) -> Path:
    """Stacked power-violation and rate-residual traces with a zero line."""
    return _save(build_violations(spec), spec)


def build_timing(spec: FigureSpec) -> Figure:
    rows = [row for path in spec.inputs for row in read_timing(path)]
    best = best_times(rows)
    algos = list(dict.fromkeys(row.algo for row in rows))
    labels = list(dict.fromkeys(row.label for row in rows))

    fig = _new_figure()
    ax = fig.subplots()
    width = 0.8 / len(algos)
    for i, algo in enumerate(algos):
        offsets, values = [], []
        for j, label in enumerate(labels):
            if (algo, label) in best:
                offsets.append(j + (i - (len(algos) - 1) / 2) * width)
                values.append(best[(algo, label)] / 1e3)
        ax.bar(offsets, values, width=width, label=algo)
    ax.set_xticks(range(len(labels)), labels)
    ax.set_xlabel(spec.xlabel or "")
    ax.set_ylabel(spec.ylabel or "best median time per iteration (µs)")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    return fig


def plot_timing(spec: FigureSpec) -> Path:
    """Grouped bars of the best median step time per algorithm and label."""
    return _save(build_timing(spec), spec)


PLOTTERS = {
    "convergence": plot_convergence,
    "violations": plot_violations,
    "timing": plot_timing,
}
