"""Shared builders for the unit suite.

Everything here is deliberately tiny (a few users, one narrow hidden layer)
so each test stays in the millisecond range while still driving the full
primal-dual path.
"""

import numpy as np
import pytest

from pdzdpg.learner import LinearObjective, Problem, StepSchedule
from pdzdpg.policy import MlpPolicy, PerUserPolicy
from pdzdpg.smoothing import BoxSet
from pdzdpg.systems import AwgnService, ExponentialChannels, MaiService


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def small_awgn_problem(n_users=3, hidden=(4,), p_max=20.0, weights=None):
    if weights is None:
        weights = np.full(n_users, 1.0 / n_users)
    return Problem(
        policy=PerUserPolicy(n_users=n_users, hidden=hidden, p_max=p_max),
        channel=ExponentialChannels(np.full(n_users, 2.0)),
        service=AwgnService(noise=np.ones(n_users), p_max=p_max),
        weights=weights,
        metric_box=BoxSet.interval(n_users, 0.0, 60.0),
        action_box=BoxSet.interval(n_users, 0.0, p_max),
        objective=LinearObjective(weights),
    )


def small_mai_problem(n_users=3, hidden=(6, 4), p_max=20.0, weights=None):
    if weights is None:
        weights = np.full(n_users, 1.0 / n_users)
    return Problem(
        policy=MlpPolicy(n_in=n_users, hidden=hidden, n_out=n_users, p_max=p_max),
        channel=ExponentialChannels(np.full(n_users, 2.0)),
        service=MaiService(noise=np.ones(n_users), p_max=p_max),
        weights=weights,
        metric_box=BoxSet.interval(n_users, 0.0, 60.0),
        action_box=BoxSet.interval(n_users, 0.0, p_max),
        objective=LinearObjective(weights),
    )


def table_schedule():
    return StepSchedule(
        alpha_x=0.001, alpha_theta=0.02, alpha_lambda_rate=0.008, alpha_lambda_power=0.0001
    )


@pytest.fixture
def rng():
    return make_rng(0)
