"""Gaussian perturbations, box projections, and two-point finite differences.

The training loop only ever needs single perturbation draws plus
:func:`finite_diff`; the Monte-Carlo oracles at the bottom estimate smoothed
function values/gradients directly and exist so tests can check the
finite-difference machinery against them.

All vectors are 1-D float64 ndarrays.  Reproducibility contract: every
stochastic operation takes an explicit ``numpy.random.Generator`` and consumes
draws sequentially, so a fixed seed plus a fixed draw order fixes the output.
A generator must never be shared across threads; parallel callers seed their
own streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "SmoothingParams",
    "BoxSet",
    "McEstimate",
    "McVecEstimate",
    "sample_gaussian",
    "project_box",
    "finite_diff",
    "smoothed_value_mc",
    "smoothed_grad_mc",
]


@dataclass(frozen=True)
class SmoothingParams:
    """Exploration radii: ``mu_s`` for the ergodic-metric space, ``mu_r`` for actions."""

    mu_s: float
    mu_r: float

    def __post_init__(self) -> None:
        if self.mu_s < 0.0 or self.mu_r < 0.0:
            raise ValueError(
                f"smoothing radii must be nonnegative, got mu_s={self.mu_s}, mu_r={self.mu_r}"
            )


@dataclass(frozen=True, eq=False)
class BoxSet:
    """Axis-aligned box, coordinatewise ``lower <= upper``; bounds may be +-inf."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("box bounds must be 1-D vectors of equal length")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper coordinatewise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, v: np.ndarray) -> bool:
        v = np.asarray(v, dtype=np.float64)
        return bool(np.all(v >= self.lower) and np.all(v <= self.upper))

    @staticmethod
    def nonneg(dim: int) -> "BoxSet":
        """The nonnegative orthant (ergodic-metric set)."""
        return BoxSet(np.zeros(dim), np.full(dim, np.inf))

    @staticmethod
    def interval(dim: int, lo: float, hi: float) -> "BoxSet":
        """``[lo, hi]^dim`` (the action set is ``[0, p_max]^n``)."""
        return BoxSet(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @staticmethod
    def unbounded(dim: int) -> "BoxSet":
        return BoxSet(np.full(dim, -np.inf), np.full(dim, np.inf))


def sample_gaussian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """``dim`` i.i.d. standard-normal draws consumed sequentially from ``rng``."""
    if dim < 1:
        raise ValueError(f"perturbation dimension must be >= 1, got {dim}")
    return rng.standard_normal(dim)


def project_box(v: np.ndarray, box: BoxSet) -> np.ndarray:
    """Euclidean projection onto ``box`` (coordinatewise clamp)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != box.lower.shape:
        raise ValueError(f"dimension mismatch: vector {v.shape} vs box {box.lower.shape}")
    return np.clip(v, box.lower, box.upper)


def finite_diff(base_value: np.ndarray, perturbed_value: np.ndarray, mu: float) -> np.ndarray:
    """Two-point difference ``(perturbed - base) / mu``, coordinatewise.

    Serves both the utility-side differences (base at the unperturbed metric
    iterate) and the service-side differences (base at the unperturbed action),
    given the corresponding evaluations.
    """
    if mu <= 0.0:
        raise ValueError(f"finite differences require mu > 0, got {mu}")
    base = np.atleast_1d(np.asarray(base_value, dtype=np.float64))
    pert = np.atleast_1d(np.asarray(perturbed_value, dtype=np.float64))
    if base.shape != pert.shape:
        raise ValueError(f"dimension mismatch: {base.shape} vs {pert.shape}")
    delta = (pert - base) / mu
    if not np.all(np.isfinite(delta)):
        raise ValueError("finite differences produced non-finite entries")
    return delta


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo scalar estimate with its standard error."""

    value: float
    stderr: float
    n_samples: int


@dataclass(frozen=True, eq=False)
class McVecEstimate:
    """Monte-Carlo vector estimate with per-coordinate standard errors."""

    value: np.ndarray
    stderr: np.ndarray
    n_samples: int


def smoothed_value_mc(
    fn: Callable[[np.ndarray], float],
    x: np.ndarray,
    box: BoxSet,
    mu: float,
    n_samples: int,
    rng: np.random.Generator,
) -> McEstimate:
    """Monte-Carlo estimate of the Gaussian-smoothed value E{fn(proj(x + mu*U))}.

    Test-support oracle; not used by the training loop.
    """
    if mu <= 0.0:
        raise ValueError(f"smoothing oracle requires mu > 0, got {mu}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    vals = np.empty(n_samples)
    for i in range(n_samples):
        u = sample_gaussian(x.shape[0], rng)
        vals[i] = fn(project_box(x + mu * u, box))
    stderr = float(vals.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else float("inf")
    return McEstimate(value=float(vals.mean()), stderr=stderr, n_samples=n_samples)


def smoothed_grad_mc(
    fn: Callable[[np.ndarray], float],
    x: np.ndarray,
    box: BoxSet,
    mu: float,
    n_samples: int,
    rng: np.random.Generator,
) -> McVecEstimate:
    """Monte-Carlo average of the one-point products ``delta * U``.

    Converges to the gradient of the smoothed function; the base evaluation
    sits at the unprojected ``x`` (assumed feasible).
    """
    if mu <= 0.0:
        raise ValueError(f"smoothing oracle requires mu > 0, got {mu}")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2 to report standard errors")
    x = np.asarray(x, dtype=np.float64)
    base = float(fn(x))
    samples = np.empty((n_samples, x.shape[0]))
    for i in range(n_samples):
        u = sample_gaussian(x.shape[0], rng)
        delta = (fn(project_box(x + mu * u, box)) - base) / mu
        samples[i] = delta * u
    value = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(n_samples)
    return McVecEstimate(value=value, stderr=stderr, n_samples=n_samples)
