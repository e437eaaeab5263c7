"""Named self-checks behind the ``verify`` command.

The fast suite covers deterministic invariants and cheap Monte-Carlo
spot-checks; the full suite adds the two statistical estimator checks
(gradient-estimator consistency and the smoothing bias/second-moment
bounds), which take tens of seconds.  Every check is self-seeded, so a
passing suite stays passing on the same platform.

The test suite calls these functions directly; keeping them here means the
command line and pytest agree about what "verified" means.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import baselines, records
from .learner import (
    ActionSpaceLearner,
    LearnerState,
    LinearObjective,
    ParamSpaceLearner,
    Problem,
    SmoothingParams,
    StepSchedule,
)
from .policy import MlpPolicy, PerUserPolicy
from .smoothing import BoxSet, project_box, smoothed_grad_mc, smoothed_value_mc
from .systems import AwgnService, ExponentialChannels, MaiService

__all__ = ["CheckResult", "run_verification", "FAST_CHECKS", "FULL_CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# small shared fixtures


class _ConstantChannel:
    """Degenerate channel pinned at a fixed vector; for closed-form checks."""

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_users(self) -> int:
        return self.value.shape[0]

    def sample(self, rng):
        return self.value.copy()

    def sample_batch(self, n, rng):
        return np.tile(self.value, (n, 1))


class _ConstantService:
    """Service independent of both channel and action; rates pinned at ``c``.

    With the metric sitting at ``c`` and the rate multipliers at the
    objective weights, every update direction vanishes identically, which
    makes saddle-point stationarity checkable to the bit.
    """

    def __init__(self, c: np.ndarray):
        self.c = np.asarray(c, dtype=np.float64)
        self.noise = np.ones_like(self.c)
        self.p_max = 20.0

    @property
    def n_users(self) -> int:
        return self.c.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0] + 1

    def f_vector(self, h, p):
        return np.concatenate([self.c, [0.0]])


class _CountingService:
    def __init__(self, inner):
        self.inner = inner
        self.probed_powers: list[np.ndarray] = []

    @property
    def n_users(self):
        return self.inner.n_users

    @property
    def n_outputs(self):
        return self.inner.n_outputs

    @property
    def noise(self):
        return self.inner.noise

    @property
    def p_max(self):
        return self.inner.p_max

    def f_vector(self, h, p):
        self.probed_powers.append(np.array(p))
        return self.inner.f_vector(h, p)


class _CountingPolicy:
    def __init__(self, inner):
        self.inner = inner
        self.forward_thetas: list[np.ndarray] = []
        self.vjp_calls = 0

    @property
    def n_params(self):
        return self.inner.n_params

    @property
    def n_action(self):
        return self.inner.n_action

    @property
    def p_max(self):
        return self.inner.p_max

    def forward(self, theta, h):
        self.forward_thetas.append(np.array(theta))
        return self.inner.forward(theta, h)

    def forward_cached(self, theta, h):
        self.forward_thetas.append(np.array(theta))
        return self.inner.forward_cached(theta, h)

    def vjp_from_cache(self, cache, cot):
        self.vjp_calls += 1
        return self.inner.vjp_from_cache(cache, cot)

    def init_params(self):
        return self.inner.init_params()


def _awgn_problem(n_users: int, hidden=(4,), p_max: float = 20.0, policy=None) -> Problem:
    service = AwgnService(noise=np.ones(n_users), p_max=p_max)
    channel = ExponentialChannels(means=np.full(n_users, 2.0))
    if policy is None:
        policy = PerUserPolicy(n_users=n_users, hidden=hidden, p_max=p_max)
    w = np.full(n_users, 1.0 / n_users)
    return Problem(
        policy=policy,
        channel=channel,
        service=service,
        weights=w,
        metric_box=BoxSet(np.zeros(n_users), np.full(n_users, 60.0)),
        action_box=BoxSet.interval(n_users, 0.0, p_max),
        objective=LinearObjective(w),
    )


_SCHEDULE = StepSchedule(
    alpha_x=0.001, alpha_theta=0.02, alpha_lambda_rate=0.008, alpha_lambda_power=0.0001
)


# ---------------------------------------------------------------------------
# fast checks


def check_box_projection() -> CheckResult:
    rng = _rng(11)
    for _ in range(200):
        dim = int(rng.integers(1, 8))
        lo = rng.normal(size=dim)
        hi = lo + rng.uniform(0.0, 3.0, size=dim)
        box = BoxSet(lo, hi)
        v = rng.normal(scale=4.0, size=dim)
        proj = project_box(v, box)
        if not box.contains(proj):
            return CheckResult("box_projection", False, "projection left the box")
        if not np.array_equal(project_box(proj, box), proj):
            return CheckResult("box_projection", False, "projection not idempotent")
        inside = rng.uniform(lo, hi)
        if np.linalg.norm(proj - inside) > np.linalg.norm(v - inside) + 1e-12:
            return CheckResult("box_projection", False, "projection expanded a distance")
    return CheckResult("box_projection", True, "200 random boxes: inside, idempotent, nonexpansive")


def check_policy_vjp(n_nets: int = 20, tol: float = 1e-5) -> CheckResult:
    """Reverse-mode gradients against central differences on random networks."""
    rng = _rng(12)
    eps = 1e-6
    worst = 0.0
    for trial in range(n_nets):
        if trial % 2 == 0:
            n_in = int(rng.integers(1, 4))
            n_out = int(rng.integers(1, 4))
            hidden = tuple(int(w) for w in rng.integers(2, 6, size=int(rng.integers(1, 3))))
            policy = MlpPolicy(n_in=n_in, hidden=hidden, n_out=n_out, p_max=20.0)
            h = rng.exponential(2.0, size=n_in)
        else:
            n_users = int(rng.integers(1, 4))
            hidden = tuple(int(w) for w in rng.integers(2, 6, size=int(rng.integers(1, 3))))
            policy = PerUserPolicy(n_users=n_users, hidden=hidden, p_max=20.0)
            h = rng.exponential(2.0, size=n_users)
        theta = 0.5 * rng.standard_normal(policy.n_params)
        cot = rng.standard_normal(policy.n_action)

        grad = policy.vjp(theta, h, cot)
        fd = np.empty_like(grad)
        for i in range(policy.n_params):
            bump = np.zeros_like(theta)
            bump[i] = eps
            up = float(cot @ policy.forward(theta + bump, h))
            down = float(cot @ policy.forward(theta - bump, h))
            fd[i] = (up - down) / (2.0 * eps)
        rel = float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12))
        worst = max(worst, rel)
        if rel > tol:
            return CheckResult(
                "policy_vjp", False, f"net {trial}: relative error {rel:.2e} > {tol:.0e}"
            )
    return CheckResult("policy_vjp", True, f"{n_nets} nets, worst relative error {worst:.2e}")


def check_smoothing_linear_grad() -> CheckResult:
    """On a linear function the smoothed gradient estimator is unbiased for w."""
    rng = _rng(13)
    w = np.array([0.5, -0.2, 0.9, 0.1, -0.6])
    est = smoothed_grad_mc(
        lambda x: float(w @ x),
        x=np.zeros(5),
        box=BoxSet.unbounded(5),
        mu=0.2,
        n_samples=40_000,
        rng=rng,
    )
    err = np.abs(est.value - w)
    limit = 4.0 * est.stderr + 1e-3
    if np.any(err > limit):
        return CheckResult(
            "smoothing_linear_grad", False, f"max deviation {err.max():.3e} beyond {limit.max():.3e}"
        )
    return CheckResult(
        "smoothing_linear_grad", True, f"max deviation {err.max():.3e} within 4 standard errors"
    )


def check_learner_stationarity(n_steps: int = 10_000) -> CheckResult:
    """At a constructed saddle point every update direction is exactly zero."""
    n = 3
    c = np.array([0.7, 1.1, 0.4])
    w = np.array([0.5, 0.3, 0.2])
    service = _ConstantService(c)
    channel = ExponentialChannels(means=np.full(n, 2.0))
    policy = PerUserPolicy(n_users=n, hidden=(4,), p_max=service.p_max)
    problem = Problem(
        policy=policy,
        channel=channel,
        service=service,
        weights=w,
        metric_box=BoxSet.nonneg(n),
        action_box=BoxSet.interval(n, 0.0, service.p_max),
        objective=LinearObjective(w),
    )
    learner = ActionSpaceLearner(problem, _SCHEDULE, SmoothingParams(mu_s=0.1, mu_r=0.25))
    rng = _rng(14)
    theta0 = 0.3 * rng.standard_normal(policy.n_params)
    lambda_r0 = np.concatenate([w, [0.8]])
    state = learner.init_state(c, theta0, lambda_r0)

    increments = np.empty(n_steps)
    for i in range(n_steps):
        before = state.copy()
        learner.step(state, rng)
        if not (
            np.array_equal(state.x, before.x)
            and np.array_equal(state.lambda_r, before.lambda_r)
        ):
            return CheckResult(
                "learner_stationarity", False, f"(x, lambda) moved at step {i}"
            )
        increments[i] = np.linalg.norm(state.theta - before.theta)
    mean_inc = float(increments.mean())
    stderr = float(increments.std(ddof=1) / np.sqrt(n_steps))
    if mean_inc > 3.0 * stderr + 1e-12:
        return CheckResult(
            "learner_stationarity", False, f"mean theta increment {mean_inc:.3e}"
        )
    return CheckResult(
        "learner_stationarity",
        True,
        f"(x, lambda) fixed over {n_steps} steps, mean theta increment {mean_inc:.1e}",
    )


def check_probe_economy() -> CheckResult:
    """3 probes and 1 VJP per iteration action-side; 3 probes, 0 VJPs parameter-side."""
    n = 4
    base = _awgn_problem(n, hidden=(5, 3))
    service = _CountingService(base.service)
    policy = _CountingPolicy(base.policy)
    problem = Problem(
        policy=policy,
        channel=base.channel,
        service=service,
        weights=base.weights,
        metric_box=base.metric_box,
        action_box=base.action_box,
        objective=base.objective,
    )
    smoothing = SmoothingParams(mu_s=0.1, mu_r=0.1)
    for cls, vjps_expected in ((ActionSpaceLearner, 1), (ParamSpaceLearner, 0)):
        learner = cls(problem, _SCHEDULE, smoothing)
        expected_dim = n if cls is ActionSpaceLearner else policy.n_params
        if learner.n_perturb != expected_dim:
            return CheckResult(
                "probe_economy",
                False,
                f"{cls.__name__}: perturbation dimension {learner.n_perturb} != {expected_dim}",
            )
        state = learner.init_state(
            np.ones(n), policy.init_params(), np.ones(n + 1)
        )
        rng = _rng(15)
        for it in range(5):
            service.probed_powers.clear()
            policy.vjp_calls = 0
            learner.step(state, rng)
            if len(service.probed_powers) != 3:
                return CheckResult(
                    "probe_economy",
                    False,
                    f"{cls.__name__}: {len(service.probed_powers)} probes at iteration {it}",
                )
            if policy.vjp_calls != vjps_expected:
                return CheckResult(
                    "probe_economy",
                    False,
                    f"{cls.__name__}: {policy.vjp_calls} VJPs at iteration {it}",
                )
    return CheckResult(
        "probe_economy", True, "3 probes/iteration both learners; 1 vs 0 VJPs; dims N_S vs N_phi"
    )


def check_order_fidelity() -> CheckResult:
    """The dual re-probe must use the updated parameters of the same iteration."""
    n = 3
    seed = 16
    base = _awgn_problem(n, hidden=(4,))
    service = _CountingService(base.service)
    policy = _CountingPolicy(base.policy)
    problem = Problem(
        policy=policy,
        channel=base.channel,
        service=service,
        weights=base.weights,
        metric_box=base.metric_box,
        action_box=base.action_box,
        objective=base.objective,
    )
    mu_r = 0.1
    learner = ActionSpaceLearner(problem, _SCHEDULE, SmoothingParams(mu_s=0.1, mu_r=mu_r))
    rng = _rng(seed)
    state = learner.init_state(np.ones(n), 0.1 * _rng(99).standard_normal(policy.n_params), np.ones(n + 1))
    theta_before = state.theta.copy()
    policy.forward_thetas.clear()
    service.probed_powers.clear()
    learner.step(state, rng)

    # Reconstruct this iteration's draws from the same stream.
    replay = _rng(seed)
    u_r = replay.standard_normal(n)
    h = problem.channel.sample(replay)

    if len(policy.forward_thetas) != 2:
        return CheckResult("order_fidelity", False, f"{len(policy.forward_thetas)} forward passes")
    if not np.array_equal(policy.forward_thetas[0], theta_before):
        return CheckResult("order_fidelity", False, "base probe did not use current parameters")
    if not np.array_equal(policy.forward_thetas[1], state.theta):
        return CheckResult("order_fidelity", False, "re-probe did not use updated parameters")
    if np.array_equal(state.theta, theta_before):
        return CheckResult("order_fidelity", False, "parameters did not move, probe inconclusive")
    expected_reprobe = project_box(
        base.policy.forward(state.theta, h) + mu_r * u_r, problem.action_box
    )
    if not np.array_equal(service.probed_powers[2], expected_reprobe):
        return CheckResult("order_fidelity", False, "third probe action mismatch")
    return CheckResult("order_fidelity", True, "re-probe verified at updated parameters")


def check_learner_nonnegativity() -> CheckResult:
    problem = _awgn_problem(3, hidden=(4,))
    learner = ActionSpaceLearner(problem, _SCHEDULE, SmoothingParams(mu_s=0.1, mu_r=0.1))
    state = learner.init_state(
        np.ones(3), problem.policy.init_params(), np.ones(4)
    )
    rng = _rng(17)
    for it in range(300):
        learner.step(state, rng)
        for name, arr in (("x", state.x), ("lambda_r", state.lambda_r)):
            if np.any(arr < 0.0) or not np.isfinite(arr).all():
                return CheckResult(
                    "learner_nonnegativity", False, f"{name} invalid at iteration {it}"
                )
        if not np.isfinite(state.theta).all():
            return CheckResult("learner_nonnegativity", False, f"theta invalid at iteration {it}")
    return CheckResult("learner_nonnegativity", True, "x, lambda >= 0 and finite over 300 steps")


def check_learner_determinism() -> CheckResult:
    problem = _awgn_problem(3, hidden=(4,))
    finals = []
    for _ in range(2):
        learner = ActionSpaceLearner(problem, _SCHEDULE, SmoothingParams(mu_s=0.1, mu_r=0.1))
        state = learner.init_state(np.ones(3), problem.policy.init_params(), np.ones(4))
        rng = _rng(18)
        for _ in range(200):
            learner.step(state, rng)
        finals.append(state)
    a, b = finals
    same = (
        np.array_equal(a.x, b.x)
        and np.array_equal(a.theta, b.theta)
        and np.array_equal(a.lambda_r, b.lambda_r)
    )
    if not same:
        return CheckResult("learner_determinism", False, "same seed, different trajectory")
    return CheckResult("learner_determinism", True, "200-step trajectories bitwise identical")


def check_waterfilling_closed_form() -> CheckResult:
    """Degenerate single-user channel where the dual level is known exactly."""
    service = AwgnService(noise=np.ones(1), p_max=3.0)
    channel = _ConstantChannel(np.ones(1))
    sol = baselines.waterfill_clairvoyant(
        service, channel, np.ones(1), n_mc=100, rng=_rng(19), tol=1e-6
    )
    nu_err = abs(sol.dual_level - 0.25)
    rate_err = abs(sol.achieved_sumrate - np.log(4.0))
    if nu_err > 1e-4 or rate_err > 1e-3:
        return CheckResult(
            "waterfilling_closed_form",
            False,
            f"nu off by {nu_err:.2e}, rate off by {rate_err:.2e}",
        )
    return CheckResult(
        "waterfilling_closed_form", True, f"nu=0.25 +-{nu_err:.1e}, rate=log 4 +-{rate_err:.1e}"
    )


def _waterfill_10(n_mc: int, tol: float = 1e-4):
    service = AwgnService(noise=np.ones(10), p_max=20.0)
    channel = ExponentialChannels(means=np.full(10, 2.0))
    rng = _rng(20)
    w = rng.uniform(size=10)
    w = w / w.sum()
    sol = baselines.waterfill_clairvoyant(service, channel, w, n_mc=n_mc, rng=_rng(21), tol=tol)
    return service, sol, w


def check_waterfilling_budget(n_mc: int = 50_000) -> CheckResult:
    service, sol, _ = _waterfill_10(n_mc)
    residual = abs(sol.achieved_budget - service.p_max)
    limit = 1e-3 * service.p_max
    ok = residual <= limit
    return CheckResult(
        "waterfilling_budget",
        ok,
        f"|budget - p_max| = {residual:.2e} ({'<=' if ok else '>'} {limit:.0e})",
    )


def check_waterfilling_kkt_grid(n_states: int = 100) -> CheckResult:
    """Grid search on the per-state Lagrangian never beats the closed form."""
    service, sol, w = _waterfill_10(20_000)
    nu, v = sol.dual_level, service.noise
    rng = _rng(22)
    n_grid = int(round(service.p_max / 1e-3)) + 1
    grid = np.linspace(0.0, service.p_max, n_grid)  # per-user power grid, step 1e-3
    worst = 0.0
    for _ in range(n_states):
        h = rng.exponential(2.0, size=10)
        p_star = sol.rule(h)
        value_star = w * np.log1p(h * p_star / v) - nu * p_star  # per-user Lagrangian
        lagr = w[:, None] * np.log1p(np.outer(h / v, grid)) - nu * grid[None, :]
        gap = float((lagr.max(axis=1) - value_star).max())
        worst = max(worst, gap)
        if gap > 1e-6:
            return CheckResult(
                "waterfilling_kkt_grid", False, f"grid beat the rule by {gap:.2e}"
            )
    return CheckResult(
        "waterfilling_kkt_grid", True, f"{n_states} states, max grid advantage {worst:.1e}"
    )


def check_wmmse_single_user() -> CheckResult:
    service = MaiService(noise=np.array([1.5]), p_max=7.0)
    it = baselines.wmmse_instant(service, np.ones(1), np.array([2.5]))
    p_err = abs(float(it.powers[0]) - 7.0)
    expected = float(np.log1p(2.5 * 7.0 / 1.5))
    r_err = abs(it.objective - expected)
    ok = p_err < 1e-9 and r_err < 1e-9
    return CheckResult(
        "wmmse_single_user", ok, f"power off {p_err:.1e}, rate off {r_err:.1e}"
    )


def check_wmmse_monotone_feasible(n_instances: int = 100) -> CheckResult:
    service = MaiService(noise=np.ones(10), p_max=20.0)
    rng = _rng(23)
    w = rng.uniform(size=10)
    w = w / w.sum()
    for i in range(n_instances):
        h = rng.exponential(2.0, size=10)
        it = baselines.wmmse_instant(service, w, h)
        drops = np.diff(it.objective_trace)
        if drops.size and float(drops.min()) < -1e-9:
            return CheckResult(
                "wmmse_monotone_feasible", False, f"instance {i}: objective dropped {drops.min():.2e}"
            )
        if float(it.powers.sum()) > service.p_max + 1e-9:
            return CheckResult(
                "wmmse_monotone_feasible", False, f"instance {i}: power {it.powers.sum():.6f}"
            )
    return CheckResult(
        "wmmse_monotone_feasible", True, f"{n_instances} instances monotone and power-feasible"
    )


def check_wmmse_batch_equivalence(n_instances: int = 16) -> CheckResult:
    service = MaiService(noise=np.ones(6), p_max=20.0)
    rng = _rng(24)
    w = rng.uniform(size=6)
    w = w / w.sum()
    h = rng.exponential(2.0, size=(n_instances, 6))
    batch = baselines._wmmse_batch(h, service.noise, w, service.p_max, 500, 1e-9)
    worst = 0.0
    for i in range(n_instances):
        single = baselines.wmmse_instant(service, w, h[i]).objective
        worst = max(worst, abs(single - batch[i]) / max(abs(single), 1e-12))
    ok = worst <= 1e-9
    return CheckResult(
        "wmmse_batch_equivalence", ok, f"max relative gap batch vs single {worst:.1e}"
    )


def check_records_roundtrip() -> CheckResult:
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "seed_3.csv")
        with records.RunWriter(path, "deadbeef", seed=3) as writer:
            writer.write_row(100, 1.5, 1.25, 18.0, 0.0, -0.25, 0.7, 1.45, 0)
            writer.write_row(200, 0.1 + 0.2, 1.0 / 3.0, 18.5, 0.5, 0.0, 0.8, 1.5, 12345)
        config_hash, cols = records.read_run_csv(path)
    if config_hash != "deadbeef":
        return CheckResult("records_roundtrip", False, "config hash mangled")
    if cols["inst_sumrate"][1] != 0.1 + 0.2 or cols["ma_sumrate"][1] != 1.0 / 3.0:
        return CheckResult("records_roundtrip", False, "floats did not round-trip exactly")
    if cols["iter"].tolist() != [100, 200] or cols["wall_ns"].tolist() != [0, 12345]:
        return CheckResult("records_roundtrip", False, "integer columns mangled")
    return CheckResult("records_roundtrip", True, "write/read round-trip exact")


# ---------------------------------------------------------------------------
# full-suite statistical checks


def _batched_121_forward(theta: np.ndarray, h: np.ndarray, p_max: float) -> np.ndarray:
    """Forward pass of the 1-2-1 network over a batch of scalar inputs."""
    w1, b1 = theta[0:2], theta[2:4]
    w2, b2 = theta[4:6], theta[6]
    a1 = np.maximum(np.outer(w1, h) + b1[:, None], 0.0)
    return p_max * expit(w2 @ a1 + b2)


def check_theorem4_consistency(
    n_estimator: int = 200_000, n_nested: int = 2_000_000, tol: float = 0.05
) -> CheckResult:
    """The action-perturbed update direction is a consistent gradient estimate.

    Single-user orthogonal link, 1-2-1 policy, frozen multipliers.  The mean
    of the per-sample update directions must match a central finite
    difference of the smoothed multiplier-weighted service value, itself
    estimated by nested Monte Carlo with common random numbers.
    """
    p_max, v, mu_r = 20.0, 1.0, 0.3
    lam = np.array([1.0, 0.5])
    policy = MlpPolicy(n_in=1, hidden=(2,), n_out=1, p_max=p_max)
    service = AwgnService(noise=np.array([v]), p_max=p_max)
    theta = 0.8 * _rng(25).standard_normal(policy.n_params)

    rng = _rng(26)
    directions = np.empty((n_estimator, policy.n_params))
    for i in range(n_estimator):
        u = rng.standard_normal(1)
        h = rng.exponential(2.0, size=1)
        p, cache = policy.forward_cached(theta, h)
        p_pert = np.clip(p + mu_r * u, 0.0, p_max)
        delta = (service.f_vector(h, p_pert) - service.f_vector(h, p)) / mu_r
        directions[i] = policy.vjp_from_cache(cache, float(delta @ lam) * u)
    estimate = directions.mean(axis=0)
    stderr = directions.std(axis=0, ddof=1) / np.sqrt(n_estimator)

    nested = _rng(27)
    h_b = nested.exponential(2.0, size=n_nested)
    u_b = nested.standard_normal(n_nested)

    def smoothed_value(th: np.ndarray) -> float:
        p = np.clip(_batched_121_forward(th, h_b, p_max) + mu_r * u_b, 0.0, p_max)
        value = lam[0] * np.log1p(h_b * p / v) + lam[1] * (p_max - p)
        return float(value.mean())

    eps = 1e-3
    fd = np.empty(policy.n_params)
    for i in range(policy.n_params):
        bump = np.zeros(policy.n_params)
        bump[i] = eps
        fd[i] = (smoothed_value(theta + bump) - smoothed_value(theta - bump)) / (2.0 * eps)

    rel = float(np.linalg.norm(estimate - fd) / np.linalg.norm(fd))
    noise_floor = float(np.linalg.norm(stderr) / np.linalg.norm(fd))
    ok = rel <= tol
    return CheckResult(
        "theorem4_consistency",
        ok,
        f"relative error {rel:.3f} ({'<=' if ok else '>'} {tol}), "
        f"estimator noise floor ~{noise_floor:.3f}",
    )


def _lemma2_fn(L: float, cap: float):
    def g(x: np.ndarray) -> float:
        return L * min(float(np.min(x)), cap)

    return g


def check_lemma2_bias_bound(n_samples: int = 200_000) -> CheckResult:
    """Gaussian smoothing moves an L-Lipschitz value by at most mu*L*sqrt(N)."""
    dim, L, cap, mu = 10, 2.0, 1.0, 0.1
    g = _lemma2_fn(L, cap)
    box = BoxSet.unbounded(dim)
    bound = mu * L * np.sqrt(dim)
    rng = _rng(28)
    details = []
    for x in (np.full(dim, 0.8), np.linspace(0.2, 2.0, dim)):
        est = smoothed_value_mc(g, x, box, mu, n_samples, rng)
        bias = abs(est.value - g(x))
        if bias > bound + 3.0 * est.stderr:
            return CheckResult(
                "lemma2_bias_bound", False, f"bias {bias:.4f} beyond {bound:.4f} + 3se"
            )
        details.append(f"{bias:.4f}")
    return CheckResult(
        "lemma2_bias_bound", True, f"biases {', '.join(details)} all within bound {bound:.4f}"
    )


def check_lemma2_second_moment(n_samples: int = 200_000) -> CheckResult:
    """Second moment of the two-point estimator stays under L^2 (N+4)^2."""
    dim, L, cap, mu = 10, 2.0, 1.0, 0.1
    g = _lemma2_fn(L, cap)
    x = np.full(dim, 0.8)
    bound = L**2 * (dim + 4) ** 2
    rng = _rng(29)
    samples = np.empty(n_samples)
    for i in range(n_samples):
        u = rng.standard_normal(dim)
        delta = (g(x + mu * u) - g(x)) / mu
        samples[i] = delta * delta * float(u @ u)
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(n_samples))
    ok = mean <= bound + 3.0 * stderr
    return CheckResult(
        "lemma2_second_moment",
        ok,
        f"second moment {mean:.1f} (+-{stderr:.1f}) vs bound {bound:.0f}",
    )


FAST_CHECKS = (
    check_box_projection,
    check_policy_vjp,
    check_smoothing_linear_grad,
    check_learner_stationarity,
    check_probe_economy,
    check_order_fidelity,
    check_learner_nonnegativity,
    check_learner_determinism,
    check_waterfilling_closed_form,
    check_waterfilling_budget,
    check_waterfilling_kkt_grid,
    check_wmmse_single_user,
    check_wmmse_monotone_feasible,
    check_wmmse_batch_equivalence,
    check_records_roundtrip,
)

FULL_CHECKS = (
    check_theorem4_consistency,
    check_lemma2_bias_bound,
    check_lemma2_second_moment,
)


def run_verification(full: bool = False) -> list[CheckResult]:
    checks = FAST_CHECKS + FULL_CHECKS if full else FAST_CHECKS
    return [check() for check in checks]
