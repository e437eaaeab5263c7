"""Model-based reference policies: clairvoyant waterfilling and WMMSE.

These need full knowledge of the channel law and the rate model, which the
learners never see; they exist to pin benchmark values that trained policies
are measured against.  Both report Monte-Carlo standard errors so comparisons
can respect estimation noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .smoothing import McEstimate

__all__ = [
    "WaterfillSolution",
    "WmmseIterate",
    "waterfill_clairvoyant",
    "wmmse_instant",
    "wmmse_ergodic",
]

_BISECT_STEPS = 60  # halves the bracket to ~1e-18 of its width, past float64 resolution


@dataclass(frozen=True, eq=False)
class WaterfillSolution:
    """Closed-form orthogonal-channel rule ``p_i(h) = max(0, w_i/nu - v_i/h_i)``.

    ``dual_level`` is the multiplier ``nu`` on the expected-power budget,
    chosen so the rule's average total power meets the budget.
    """

    dual_level: float
    achieved_budget: float
    achieved_sumrate: float
    sumrate_stderr: float
    n_mc: int
    weights: np.ndarray
    noise: np.ndarray

    def rule(self, h: np.ndarray) -> np.ndarray:
        """Per-state optimal powers; accepts a single state or a batch."""
        h = np.asarray(h, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.maximum(0.0, self.weights / self.dual_level - self.noise / h)


def waterfill_clairvoyant(
    service,
    channel,
    weights: np.ndarray,
    n_mc: int,
    rng: np.random.Generator,
    tol: float = 1e-4,
) -> WaterfillSolution:
    """Fit the waterfilling dual level by bisection on a fixed Monte-Carlo batch.

    The same ``n_mc`` channel draws are reused for every budget evaluation, so
    the estimated average power is exactly nonincreasing in the dual level and
    bisection cannot stall.  ``tol`` is relative: the loop stops once the
    budget matches ``p_max`` within ``tol * p_max``.
    """
    if n_mc < 2:
        raise ValueError("n_mc must be >= 2 to report a standard error")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    weights = np.asarray(weights, dtype=np.float64)
    noise = service.noise
    p_max = service.p_max
    h = channel.sample_batch(n_mc, rng)
    with np.errstate(divide="ignore"):
        noise_over_h = noise / h

    def budget(nu: float) -> float:
        p = np.maximum(0.0, weights / nu - noise_over_h)
        return float(p.sum(axis=1).mean())

    lo = 1e-8
    if budget(lo) <= p_max:
        # The budget is enormous at a vanishing dual level for any channel
        # with mass away from zero; hitting this means a degenerate setup.
        raise RuntimeError("waterfilling bracket failure: budget already met at nu=1e-8")
    hi = 1.0
    while budget(hi) >= p_max:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("waterfilling bracket failure: no dual level meets the budget")

    nu = 0.5 * (lo + hi)
    for _ in range(_BISECT_STEPS):
        used = budget(nu)
        if abs(used - p_max) <= tol * p_max:
            break
        if used > p_max:
            lo = nu
        else:
            hi = nu
        nu = 0.5 * (lo + hi)

    achieved = budget(nu)
    if abs(achieved - p_max) > tol * p_max:
        raise RuntimeError(
            f"waterfilling bisection did not meet the budget: {achieved} vs {p_max}"
        )
    p = np.maximum(0.0, weights / nu - noise_over_h)
    per_draw = np.log1p(h * p / noise) @ weights
    stderr = float(per_draw.std(ddof=1) / np.sqrt(n_mc))
    return WaterfillSolution(
        dual_level=float(nu),
        achieved_budget=achieved,
        achieved_sumrate=float(per_draw.mean()),
        sumrate_stderr=stderr,
        n_mc=n_mc,
        weights=weights,
        noise=noise,
    )


@dataclass(frozen=True, eq=False)
class WmmseIterate:
    """Final WMMSE block-coordinate iterate; ``power = amplitudes**2``."""

    amplitudes: np.ndarray
    receivers: np.ndarray
    mse_weights: np.ndarray
    objective: float
    objective_trace: np.ndarray  # weighted sumrate after every outer iteration

    @property
    def powers(self) -> np.ndarray:
        return self.amplitudes**2


def _weighted_sumrate(h, v, w, b):
    received = h * b**2
    total = received.sum(axis=-1, keepdims=True)
    rates = np.log1p(received / (v + total - received))
    return rates @ w


def wmmse_instant(
    service,
    weights: np.ndarray,
    h: np.ndarray,
    max_iters: int = 500,
    tol: float = 1e-9,
) -> WmmseIterate:
    """Run WMMSE to saturation on one channel realization.

    Block-coordinate updates of receivers, MSE weights, and amplitudes for the
    scalar interference model; the sum-power budget is enforced inside every
    amplitude update by bisection on its multiplier.  Stops when the weighted
    sumrate improves by less than ``tol`` over an outer iteration.
    """
    h = np.asarray(h, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    v = service.noise
    p_max = service.p_max
    n = service.n_users
    if h.shape != (n,) or np.any(h <= 0.0):
        raise ValueError(f"need a positive channel vector of length {n}")

    sqrt_h = np.sqrt(h)
    b = np.full(n, np.sqrt(p_max / n))
    obj = float(_weighted_sumrate(h, v, w, b))
    trace = [obj]
    u = np.zeros(n)
    omega = np.ones(n)
    for _ in range(max_iters):
        total = float((h * b**2).sum())
        u = sqrt_h * b / (total + v)
        mse = 1.0 - u * sqrt_h * b  # in (0, 1] at the optimal receiver
        omega = 1.0 / mse

        quad = float((w * omega * u**2).sum())
        num = w * omega * u * sqrt_h
        b = num / (h * quad)
        if float((b**2).sum()) > p_max:
            # Positive multiplier: shrink until the budget is exactly tight.
            lo, hi = 0.0, 1.0
            while ((num / (h * quad + hi)) ** 2).sum() >= p_max:
                hi *= 2.0
            for _ in range(_BISECT_STEPS):
                mid = 0.5 * (lo + hi)
                if ((num / (h * quad + mid)) ** 2).sum() > p_max:
                    lo = mid
                else:
                    hi = mid
            b = num / (h * quad + hi)

        new_obj = float(_weighted_sumrate(h, v, w, b))
        if not np.isfinite(new_obj):
            raise RuntimeError("WMMSE produced a non-finite objective")
        trace.append(new_obj)
        done = new_obj - obj < tol
        obj = new_obj
        if done:
            break
    return WmmseIterate(
        amplitudes=b,
        receivers=u,
        mse_weights=omega,
        objective=obj,
        objective_trace=np.asarray(trace),
    )


def _wmmse_batch(h, v, w, p_max, max_iters, tol):
    """Vectorized WMMSE over a batch of realizations; returns per-draw objectives.

    Rows retire as soon as their objective stops improving, so late iterations
    only touch the stragglers.  Mirrors :func:`wmmse_instant` update for
    update; a property test holds the two implementations together.
    """
    m, n = h.shape
    sqrt_h = np.sqrt(h)
    b = np.full((m, n), np.sqrt(p_max / n))
    obj = _weighted_sumrate(h, v, w, b)

    obj_out = obj.copy()
    active = np.arange(m)
    h_a, sqrt_h_a, b_a, obj_a = h, sqrt_h, b, obj
    for _ in range(max_iters):
        total = (h_a * b_a**2).sum(axis=1, keepdims=True)
        u = sqrt_h_a * b_a / (total + v)
        omega = 1.0 / (1.0 - u * sqrt_h_a * b_a)

        quad = (w * omega * u**2).sum(axis=1, keepdims=True)
        num = w * omega * u * sqrt_h_a
        b_a = num / (h_a * quad)
        over = (b_a**2).sum(axis=1) > p_max
        if over.any():
            num_o = num[over]
            denom_o = (h_a * quad)[over]
            lo = np.zeros(int(over.sum()))
            hi = np.ones_like(lo)
            while True:
                power = ((num_o / (denom_o + hi[:, None])) ** 2).sum(axis=1)
                grow = power >= p_max
                if not grow.any():
                    break
                hi[grow] *= 2.0
            for _ in range(_BISECT_STEPS):
                mid = 0.5 * (lo + hi)
                power = ((num_o / (denom_o + mid[:, None])) ** 2).sum(axis=1)
                too_high = power > p_max
                lo = np.where(too_high, mid, lo)
                hi = np.where(too_high, hi, mid)
            b_a[over] = num_o / (denom_o + hi[:, None])

        new_obj = _weighted_sumrate(h_a, v, w, b_a)
        if not np.isfinite(new_obj).all():
            raise RuntimeError("WMMSE produced a non-finite objective")
        done = new_obj - obj_a < tol
        obj_a = new_obj
        if done.any():
            retired = active[done]
            obj_out[retired] = obj_a[done]
            keep = ~done
            active = active[keep]
            if active.size == 0:
                break
            h_a, sqrt_h_a, b_a, obj_a = h_a[keep], sqrt_h_a[keep], b_a[keep], obj_a[keep]
    else:
        obj_out[active] = obj_a
    return obj_out


def wmmse_ergodic(
    service,
    channel,
    weights: np.ndarray,
    n_mc: int,
    rng: np.random.Generator,
    max_iters: int = 500,
    tol: float = 1e-9,
) -> McEstimate:
    """Average WMMSE weighted sumrate over ``n_mc`` independent realizations.

    A single draw is allowed and reduces to one :func:`wmmse_instant`
    evaluation; its standard error is reported as infinite.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    w = np.asarray(weights, dtype=np.float64)
    h = channel.sample_batch(n_mc, rng)
    obj = _wmmse_batch(h, service.noise, w, service.p_max, max_iters, tol)
    stderr = float(obj.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else float("inf")
    return McEstimate(value=float(obj.mean()), stderr=stderr, n_samples=n_mc)
