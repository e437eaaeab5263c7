"""Forward/VJP contracts for both policy architectures.

The sigmoid output head scales to (0, p_max), so an all-zero parameter vector
puts every action at exactly p_max/2; several tests below pin the
consequences of that choice, including which coordinates can train at all
from the zero start.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdzdpg.policy import MlpPolicy, PerUserPolicy

from conftest import make_rng


@pytest.mark.parametrize(
    "policy,expected",
    [
        (MlpPolicy(n_in=1, hidden=(2,), n_out=1, p_max=20.0), 7),
        (PerUserPolicy(n_users=10, hidden=(8, 4), p_max=20.0), 570),
        (MlpPolicy(n_in=10, hidden=(64, 32), n_out=10, p_max=20.0), 3114),
        (MlpPolicy(n_in=5, hidden=(512, 256), n_out=5, p_max=20.0), 135_685),
    ],
)
def test_parameter_counts(policy, expected):
    assert policy.n_params == expected
    assert policy.init_params().shape == (expected,)


def test_zero_parameters_give_half_power():
    for policy, n in [
        (MlpPolicy(n_in=4, hidden=(5, 3), n_out=4, p_max=20.0), 4),
        (PerUserPolicy(n_users=3, hidden=(4,), p_max=12.0), 3),
    ]:
        h = make_rng(1).exponential(2.0, size=n)
        out = policy.forward(np.zeros(policy.n_params), h)
        np.testing.assert_array_equal(out, np.full(n, policy.p_max / 2.0))


def test_default_init_is_zero():
    policy = MlpPolicy(n_in=2, hidden=(3,), n_out=2, p_max=20.0)
    np.testing.assert_array_equal(policy.init_params(), np.zeros(policy.n_params))


def test_seeded_init_keeps_half_power_start():
    """The fan-in-scaled draw fills hidden weights but leaves the output layer
    at zero, so the observable starting policy is identical to zero init."""
    policy = MlpPolicy(n_in=3, hidden=(8, 4), n_out=3, p_max=20.0)
    theta = policy.init_params(make_rng(42))
    assert np.any(theta != 0.0)
    for h in make_rng(2).exponential(2.0, size=(20, 3)):
        np.testing.assert_array_equal(policy.forward(theta, h), np.full(3, 10.0))
    # same seed, same draw
    np.testing.assert_array_equal(theta, policy.init_params(make_rng(42)))


def test_seeded_init_per_user_variant():
    policy = PerUserPolicy(n_users=4, hidden=(6,), p_max=20.0)
    theta = policy.init_params(make_rng(7))
    assert np.any(theta != 0.0)
    h = make_rng(3).exponential(2.0, size=4)
    np.testing.assert_array_equal(policy.forward(theta, h), np.full(4, 10.0))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_forward_stays_in_action_range(seed):
    rng = make_rng(seed)
    policy = MlpPolicy(n_in=3, hidden=(4,), n_out=3, p_max=20.0)
    theta = rng.normal(scale=2.0, size=policy.n_params)
    out = policy.forward(theta, rng.exponential(2.0, size=3))
    assert np.all(out >= 0.0) and np.all(out <= 20.0)


def test_forward_rejects_wrong_parameter_length():
    policy = MlpPolicy(n_in=2, hidden=(3,), n_out=2, p_max=20.0)
    with pytest.raises(ValueError):
        policy.forward(np.zeros(policy.n_params + 1), np.ones(2))
    with pytest.raises(ValueError):
        PerUserPolicy(n_users=2, hidden=(3,), p_max=20.0).vjp(
            np.zeros(5), np.ones(2), np.ones(2)
        )


def _central_difference(policy, theta, h, cot, eps=1e-6):
    fd = np.empty(policy.n_params)
    for i in range(policy.n_params):
        bump = np.zeros_like(theta)
        bump[i] = eps
        up = float(cot @ policy.forward(theta + bump, h))
        down = float(cot @ policy.forward(theta - bump, h))
        fd[i] = (up - down) / (2.0 * eps)
    return fd


@pytest.mark.parametrize("seed", [10, 11, 12])
def test_vjp_matches_finite_differences(seed):
    rng = make_rng(seed)
    if seed % 2:
        policy = MlpPolicy(n_in=2, hidden=(4, 3), n_out=2, p_max=20.0)
        h = rng.exponential(2.0, size=2)
    else:
        policy = PerUserPolicy(n_users=2, hidden=(3,), p_max=20.0)
        h = rng.exponential(2.0, size=2)
    theta = 0.5 * rng.standard_normal(policy.n_params)
    cot = rng.standard_normal(policy.n_action)
    grad = policy.vjp(theta, h, cot)
    fd = _central_difference(policy, theta, h, cot)
    assert np.linalg.norm(grad - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-12)


def test_vjp_from_cache_matches_direct_vjp(rng):
    policy = MlpPolicy(n_in=3, hidden=(5,), n_out=3, p_max=20.0)
    theta = rng.normal(size=policy.n_params)
    h = rng.exponential(2.0, size=3)
    cot = rng.normal(size=3)
    out, cache = policy.forward_cached(theta, h)
    np.testing.assert_array_equal(out, policy.forward(theta, h))
    np.testing.assert_array_equal(policy.vjp_from_cache(cache, cot), policy.vjp(theta, h, cot))


def test_vjp_is_linear_in_the_cotangent(rng):
    policy = PerUserPolicy(n_users=2, hidden=(4,), p_max=20.0)
    theta = rng.normal(size=policy.n_params)
    h = rng.exponential(2.0, size=2)
    c1, c2 = rng.normal(size=2), rng.normal(size=2)
    _, cache = policy.forward_cached(theta, h)
    lhs = policy.vjp_from_cache(cache, 2.0 * c1 + c2)
    rhs = 2.0 * policy.vjp_from_cache(cache, c1) + policy.vjp_from_cache(cache, c2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_per_user_policy_equals_stacked_single_nets(rng):
    """One subnet per user must behave exactly like independent 1-in-1-out
    networks evaluated on their own channel coordinate."""
    n_users, hidden = 3, (4, 2)
    stacked = PerUserPolicy(n_users=n_users, hidden=hidden, p_max=20.0)
    single = MlpPolicy(n_in=1, hidden=hidden, n_out=1, p_max=20.0)
    per = single.n_params
    assert stacked.n_params == n_users * per

    theta = rng.normal(size=stacked.n_params)
    h = rng.exponential(2.0, size=n_users)
    cot = rng.normal(size=n_users)

    out = stacked.forward(theta, h)
    grad = stacked.vjp(theta, h, cot)
    for i in range(n_users):
        block = theta[i * per : (i + 1) * per]
        np.testing.assert_allclose(out[i], single.forward(block, h[i : i + 1])[0], atol=1e-14)
        np.testing.assert_allclose(
            grad[i * per : (i + 1) * per],
            single.vjp(block, h[i : i + 1], cot[i : i + 1]),
            atol=1e-14,
        )


def test_zero_init_gradient_lives_in_the_output_bias():
    """With ReLU hidden layers, zero parameters mean zero hidden activations,
    so the only nonzero gradient block is the output bias."""
    policy = MlpPolicy(n_in=4, hidden=(6, 5), n_out=4, p_max=20.0)
    rng = make_rng(21)
    for _ in range(5):
        grad = policy.vjp(
            np.zeros(policy.n_params), rng.exponential(2.0, size=4), rng.normal(size=4)
        )
        assert np.any(grad[-4:] != 0.0)
        np.testing.assert_array_equal(grad[:-4], np.zeros(policy.n_params - 4))


def test_zero_init_deadness_persists_under_training():
    """Gradient steps from the zero start never wake the hidden layers: the
    output bias moving cannot unblock the zero output weights, so the policy
    stays a constant function of the channel."""
    policy = MlpPolicy(n_in=3, hidden=(5, 4), n_out=3, p_max=20.0)
    rng = make_rng(22)
    theta = np.zeros(policy.n_params)
    for _ in range(50):
        h = rng.exponential(2.0, size=3)
        cot = rng.normal(size=3)
        theta = theta + 0.1 * policy.vjp(theta, h, cot)
    np.testing.assert_array_equal(theta[:-3], np.zeros(policy.n_params - 3))
    assert np.any(theta[-3:] != 0.0)
    # and the trained policy is still channel-independent
    out_a = policy.forward(theta, np.array([0.1, 5.0, 2.0]))
    out_b = policy.forward(theta, np.array([9.0, 0.2, 7.0]))
    np.testing.assert_array_equal(out_a, out_b)


def test_seeded_init_breaks_the_deadness():
    policy = MlpPolicy(n_in=3, hidden=(5, 4), n_out=3, p_max=20.0)
    rng = make_rng(23)
    theta = policy.init_params(make_rng(1))
    for _ in range(20):
        h = rng.exponential(2.0, size=3)
        cot = rng.normal(size=3)
        theta = theta + 0.1 * policy.vjp(theta, h, cot)
    trained = policy.forward(theta, np.array([0.1, 5.0, 2.0]))
    assert not np.array_equal(trained, policy.forward(theta, np.array([9.0, 0.2, 7.0])))
