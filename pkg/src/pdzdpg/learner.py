"""Primal-dual zeroth-order training of deterministic allocation policies.

One iteration of either learner runs the same skeleton:

1. draw the perturbations and a fresh channel state;
2. probe the system at the policy's action and at a perturbed action (two
   probes sharing one channel state);
3. ascend the ergodic metric ``x`` along the objective gradient minus the
   rate multipliers, and ascend the policy parameters along a zeroth-order
   estimate of the multiplier-weighted service gradient;
4. re-probe the perturbed action under the updated parameters (third probe,
   same channel state and perturbation) and descend the multipliers on the
   resulting constraint residuals, with a positive-part projection.

The learners differ only in where the service perturbation lives.
:class:`ActionSpaceLearner` perturbs the action itself, so the perturbation
dimension equals the number of users and the parameter update needs one
vector-Jacobian product through the policy.  :class:`ParamSpaceLearner`
perturbs the parameter vector directly: no VJP, but the perturbation
dimension equals the full parameter count, which is what makes it slow for
large networks.

Multipliers: ``lambda_r`` has one entry per user rate plus a final entry for
the transmit-power budget.  The power entry gets its own step size and does
not enter the ``x`` update, since the budget has no free metric attached to
it.  ``lambda_s`` handles optional explicit concave constraints on ``x`` and
is empty in the shipped setups.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .smoothing import BoxSet, SmoothingParams, finite_diff, project_box, sample_gaussian

__all__ = [
    "StepSchedule",
    "SlackSpec",
    "LinearObjective",
    "SmoothedObjective",
    "ExplicitConstraints",
    "Problem",
    "LearnerState",
    "StepInfo",
    "DivergenceError",
    "ActionSpaceLearner",
    "ParamSpaceLearner",
    "run",
]


@dataclass(frozen=True)
class StepSchedule:
    """Constant step sizes; the power multiplier moves on its own rate."""

    alpha_x: float
    alpha_theta: float
    alpha_lambda_rate: float
    alpha_lambda_power: float
    alpha_lambda_s: float | None = None

    def __post_init__(self) -> None:
        for name in ("alpha_x", "alpha_theta", "alpha_lambda_rate", "alpha_lambda_power"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.alpha_lambda_s is not None and not self.alpha_lambda_s > 0.0:
            raise ValueError(f"alpha_lambda_s must be positive, got {self.alpha_lambda_s}")

    @property
    def lambda_s_rate(self) -> float:
        return self.alpha_lambda_s if self.alpha_lambda_s is not None else self.alpha_lambda_rate


@dataclass(frozen=True, eq=False)
class SlackSpec:
    """Feasibility margin subtracted from the service residuals.

    ``zero`` keeps the raw residuals.  ``linear`` tightens each constraint by
    ``mu_r * sqrt(n_perturb) * c_r_i``, the worst-case smoothing error under a
    per-constraint Lipschitz estimate ``c_r_i``; it vanishes as the
    exploration radius does.
    """

    mode: str = "zero"
    c_r: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("zero", "linear"):
            raise ValueError(f"slack mode must be 'zero' or 'linear', got {self.mode!r}")
        if self.mode == "linear":
            if self.c_r is None:
                raise ValueError("linear slack needs the c_r vector")
            c_r = np.asarray(self.c_r, dtype=np.float64)
            if c_r.ndim != 1 or np.any(c_r < 0.0):
                raise ValueError("c_r must be a 1-D nonnegative vector")
            object.__setattr__(self, "c_r", c_r)

    def vector(self, mu_r: float, n_perturb: int, n_outputs: int) -> np.ndarray:
        if self.mode == "zero":
            return np.zeros(n_outputs)
        if self.c_r.shape[0] != n_outputs:  # type: ignore[union-attr]
            raise ValueError(
                f"c_r has length {self.c_r.shape[0]}, expected {n_outputs}"  # type: ignore[union-attr]
            )
        return mu_r * np.sqrt(n_perturb) * self.c_r


class LinearObjective:
    """Known objective ``w . x``; its gradient needs no smoothing."""

    needs_smoothing = False

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 1 or np.any(weights <= 0.0):
            raise ValueError("objective weights must be a 1-D positive vector")
        self.weights = weights

    def value(self, x: np.ndarray) -> float:
        return float(self.weights @ x)

    def grad_estimate(
        self, x: np.ndarray, u_s: np.ndarray | None, mu_s: float, box: BoxSet
    ) -> np.ndarray:
        return self.weights


class SmoothedObjective:
    """Black-box concave objective, ascended through a two-point estimate."""

    needs_smoothing = True

    def __init__(self, fn: Callable[[np.ndarray], float]):
        self.fn = fn

    def value(self, x: np.ndarray) -> float:
        return float(self.fn(x))

    def grad_estimate(
        self, x: np.ndarray, u_s: np.ndarray | None, mu_s: float, box: BoxSet
    ) -> np.ndarray:
        if u_s is None:
            raise ValueError("smoothed objective requires a metric-space perturbation")
        perturbed = project_box(x + mu_s * u_s, box)
        delta = finite_diff(self.fn(x), self.fn(perturbed), mu_s)
        return delta[0] * u_s


@dataclass(frozen=True, eq=False)
class ExplicitConstraints:
    """Optional concave constraints ``g(x) >= 0`` handled by ``lambda_s``."""

    fn: Callable[[np.ndarray], np.ndarray]
    n_g: int

    def __post_init__(self) -> None:
        if self.n_g < 1:
            raise ValueError("use constraints=None instead of n_g=0")


@dataclass(eq=False)
class Problem:
    """Everything a learner touches: policy, system access, and the objective."""

    policy: object
    channel: object
    service: object
    weights: np.ndarray
    metric_box: BoxSet
    action_box: BoxSet
    objective: LinearObjective | SmoothedObjective
    constraints: ExplicitConstraints | None = None

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        n = self.n_users
        if self.weights.shape != (n,):
            raise ValueError(f"expected {n} weights, got shape {self.weights.shape}")
        if self.metric_box.dim != n:
            raise ValueError("metric box dimension must match the user count")
        if self.action_box.dim != n:
            raise ValueError("action box dimension must match the user count")

    @property
    def n_users(self) -> int:
        return self.service.n_users

    @property
    def n_outputs(self) -> int:
        return self.service.n_outputs

    @property
    def n_g(self) -> int:
        return self.constraints.n_g if self.constraints is not None else 0


@dataclass(eq=False)
class LearnerState:
    """Mutable iterate ``(x, theta, lambda_s, lambda_r)``."""

    x: np.ndarray
    theta: np.ndarray
    lambda_s: np.ndarray
    lambda_r: np.ndarray
    it: int = 0

    def copy(self) -> "LearnerState":
        return LearnerState(
            x=self.x.copy(),
            theta=self.theta.copy(),
            lambda_s=self.lambda_s.copy(),
            lambda_r=self.lambda_r.copy(),
            it=self.it,
        )


@dataclass(eq=False)
class StepInfo:
    """Measurements from the base (unperturbed) probe of one iteration."""

    rates: np.ndarray
    power_used: float
    x_rail_hit: bool = False


class DivergenceError(RuntimeError):
    """A non-finite value appeared; the run must stop and report, not crash."""

    def __init__(self, iteration: int, which: str):
        super().__init__(f"non-finite {which} at iteration {iteration}")
        self.iteration = iteration
        self.which = which


def _require_finite(arr: np.ndarray, iteration: int, which: str) -> None:
    if not np.isfinite(arr).all():
        raise DivergenceError(iteration, which)


class _LearnerBase:
    """Shared primal-dual skeleton; subclasses supply the theta estimator."""

    def __init__(
        self,
        problem: Problem,
        schedule: StepSchedule,
        smoothing: SmoothingParams,
        slack: SlackSpec | None = None,
    ):
        self.problem = problem
        self.schedule = schedule
        self.smoothing = smoothing
        self._needs_us = problem.objective.needs_smoothing or problem.n_g > 0
        if self._needs_us and smoothing.mu_s <= 0.0:
            raise ValueError("mu_s must be positive when the metric space is smoothed")
        if smoothing.mu_r <= 0.0:
            raise ValueError("mu_r must be positive")
        n = problem.n_users
        self._alpha_lambda_r = np.concatenate(
            [np.full(n, schedule.alpha_lambda_rate), [schedule.alpha_lambda_power]]
        )
        slack = slack if slack is not None else SlackSpec()
        self._slack = slack.vector(smoothing.mu_r, self.n_perturb, problem.n_outputs)

    @property
    def n_perturb(self) -> int:
        raise NotImplementedError

    def init_state(
        self,
        x0: np.ndarray,
        theta0: np.ndarray,
        lambda_r0: np.ndarray,
        lambda_s0: np.ndarray | None = None,
    ) -> LearnerState:
        prob = self.problem
        x0 = np.asarray(x0, dtype=np.float64)
        theta0 = np.asarray(theta0, dtype=np.float64)
        lambda_r0 = np.asarray(lambda_r0, dtype=np.float64)
        if lambda_s0 is None:
            lambda_s0 = np.zeros(prob.n_g)
        lambda_s0 = np.asarray(lambda_s0, dtype=np.float64)
        if x0.shape != (prob.n_users,):
            raise ValueError(f"x0 must have length {prob.n_users}")
        if theta0.shape != (prob.policy.n_params,):
            raise ValueError(f"theta0 must have length {prob.policy.n_params}")
        if lambda_r0.shape != (prob.n_outputs,):
            raise ValueError(f"lambda_r0 must have length {prob.n_outputs}")
        if lambda_s0.shape != (prob.n_g,):
            raise ValueError(f"lambda_s0 must have length {prob.n_g}")
        if not prob.metric_box.contains(x0):
            raise ValueError("x0 must lie in the metric box")
        if np.any(lambda_r0 < 0.0) or np.any(lambda_s0 < 0.0):
            raise ValueError("multipliers must start nonnegative")
        return LearnerState(
            x=x0.copy(), theta=theta0.copy(), lambda_s=lambda_s0.copy(), lambda_r=lambda_r0.copy()
        )

    # -- theta-side estimator hooks -------------------------------------------------

    def _base_action(self, theta: np.ndarray, h: np.ndarray):
        """Return (action, context) where context feeds `_theta_direction`."""
        raise NotImplementedError

    def _perturb_from_base(
        self, p_base: np.ndarray, theta: np.ndarray, h: np.ndarray, u: np.ndarray
    ) -> np.ndarray:
        """Perturbed action at the same parameters the base action came from."""
        raise NotImplementedError

    def _reprobe_action(self, theta: np.ndarray, h: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Perturbed action under freshly updated parameters."""
        raise NotImplementedError

    def _theta_direction(self, context, u: np.ndarray, scale: float) -> np.ndarray:
        raise NotImplementedError

    # -------------------------------------------------------------------------------

    def step(self, state: LearnerState, rng: np.random.Generator) -> StepInfo:
        """One full primal-dual iteration; mutates ``state`` and advances ``it``."""
        prob = self.problem
        sched = self.schedule
        mu_s, mu_r = self.smoothing.mu_s, self.smoothing.mu_r
        n = prob.n_users
        k = state.it

        # Draw order is part of the reproducibility contract:
        # metric perturbation (when used), service perturbation, channel state.
        u_s = sample_gaussian(n, rng) if self._needs_us else None
        u_r = sample_gaussian(self.n_perturb, rng)
        h = prob.channel.sample(rng)

        grad_obj = prob.objective.grad_estimate(state.x, u_s, mu_s, prob.metric_box)
        if prob.n_g > 0:
            x_pert = project_box(state.x + mu_s * u_s, prob.metric_box)
            delta_g = finite_diff(
                prob.constraints.fn(state.x), prob.constraints.fn(x_pert), mu_s
            )
            coupling = (delta_g @ state.lambda_s) * u_s
        else:
            coupling = 0.0

        # Two probes at the current parameters, sharing one channel state.
        p_base, context = self._base_action(state.theta, h)
        p_pert = self._perturb_from_base(p_base, state.theta, h, u_r)
        f_base = prob.service.f_vector(h, p_base)
        f_pert = prob.service.f_vector(h, p_pert)
        _require_finite(f_base, k, "service probe")
        _require_finite(f_pert, k, "service probe")

        # Metric ascent: objective gradient plus the constraint coupling, minus
        # the rate multipliers; the power multiplier has no metric to push.
        x_candidate = state.x + sched.alpha_x * (grad_obj + coupling - state.lambda_r[:n])
        x_new = project_box(x_candidate, prob.metric_box)
        rail_hit = bool(np.any(x_candidate > prob.metric_box.upper))

        # Parameter ascent along the zeroth-order estimate; the scale is the
        # multiplier-weighted finite difference across all service rows.
        delta_f = finite_diff(f_base, f_pert, mu_r)
        scale = float(delta_f @ state.lambda_r)
        theta_new = state.theta + sched.alpha_theta * self._theta_direction(context, u_r, scale)
        _require_finite(theta_new, k, "policy parameters")
        _require_finite(x_new, k, "ergodic metric")

        # Third probe: same channel state and perturbation, updated parameters.
        p_repr = self._reprobe_action(theta_new, h, u_r)
        f_repr = prob.service.f_vector(h, p_repr)
        _require_finite(f_repr, k, "service probe")

        if prob.n_g > 0:
            x_new_pert = project_box(x_new + mu_s * u_s, prob.metric_box)
            g_val = prob.constraints.fn(x_new_pert)
            lambda_s_new = np.maximum(state.lambda_s - sched.lambda_s_rate * g_val, 0.0)
        else:
            lambda_s_new = state.lambda_s

        residuals = f_repr - self._slack
        residuals[:n] -= x_new
        lambda_r_new = np.maximum(state.lambda_r - self._alpha_lambda_r * residuals, 0.0)
        _require_finite(lambda_r_new, k, "service multipliers")

        state.x = x_new
        state.theta = theta_new
        state.lambda_s = lambda_s_new
        state.lambda_r = lambda_r_new
        state.it = k + 1
        return StepInfo(rates=f_base[:n], power_used=float(p_base.sum()), x_rail_hit=rail_hit)


class ActionSpaceLearner(_LearnerBase):
    """Perturbs the action; needs one VJP per iteration but only ``n_users`` draws."""

    @property
    def n_perturb(self) -> int:
        return self.problem.n_users

    def _base_action(self, theta, h):
        return self.problem.policy.forward_cached(theta, h)

    def _perturb_from_base(self, p_base, theta, h, u):
        return project_box(p_base + self.smoothing.mu_r * u, self.problem.action_box)

    def _reprobe_action(self, theta, h, u):
        base = self.problem.policy.forward(theta, h)
        return project_box(base + self.smoothing.mu_r * u, self.problem.action_box)

    def _theta_direction(self, context, u, scale):
        return self.problem.policy.vjp_from_cache(context, scale * u)


class ParamSpaceLearner(_LearnerBase):
    """Perturbs the parameters; no VJP, but draws and moves ``n_params`` numbers."""

    @property
    def n_perturb(self) -> int:
        return self.problem.policy.n_params

    def _base_action(self, theta, h):
        return self.problem.policy.forward(theta, h), None

    def _perturb_from_base(self, p_base, theta, h, u):
        return self.problem.policy.forward(theta + self.smoothing.mu_r * u, h)

    def _reprobe_action(self, theta, h, u):
        return self.problem.policy.forward(theta + self.smoothing.mu_r * u, h)

    def _theta_direction(self, context, u, scale):
        return scale * u


def run(
    learner: _LearnerBase,
    state: LearnerState,
    n_iters: int,
    rng: np.random.Generator,
    sink: Callable[[int, StepInfo, LearnerState, int], None] | None = None,
    measure_time: bool = False,
) -> LearnerState:
    """Drive ``n_iters`` steps, pushing each iteration's measurements to ``sink``.

    The sink receives ``(iteration, info, state, wall_ns)`` after every step,
    with the one-based iteration index and the post-update state.  ``wall_ns``
    is zero unless ``measure_time`` is set, which keeps untimed runs bitwise
    reproducible across machines.  Divergence propagates as
    :class:`DivergenceError` after the sink has seen every completed step.
    """
    if n_iters < 0:
        raise ValueError(f"n_iters must be >= 0, got {n_iters}")
    if measure_time:
        from time import perf_counter_ns

        for _ in range(n_iters):
            t0 = perf_counter_ns()
            info = learner.step(state, rng)
            elapsed = perf_counter_ns() - t0
            if sink is not None:
                sink(state.it, info, state, elapsed)
    else:
        for _ in range(n_iters):
            info = learner.step(state, rng)
            if sink is not None:
                sink(state.it, info, state, 0)
    return state
