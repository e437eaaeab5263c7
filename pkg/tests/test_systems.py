import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdzdpg.systems import AwgnService, ExponentialChannels, MaiService

from conftest import make_rng

E = np.e


def test_channel_mean_matches_parameterization():
    # mean-2 fading: the sample mean of 10^6 draws has standard error ~0.002
    channel = ExponentialChannels(np.full(2, 2.0))
    draws = channel.sample_batch(500_000, make_rng(1))
    assert draws.shape == (500_000, 2)
    assert abs(draws.mean() - 2.0) < 0.02


def test_channel_draws_positive_and_seeded():
    channel = ExponentialChannels(np.array([2.0, 0.5, 1.0]))
    a = channel.sample_batch(100, make_rng(2))
    assert np.all(a > 0.0)
    np.testing.assert_array_equal(a, channel.sample_batch(100, make_rng(2)))


def test_batch_draws_agree_with_sequential_draws():
    """sample_batch row i must equal the i-th single-state draw from the same
    stream; the learners and oracles rely on this when sharing seeds."""
    channel = ExponentialChannels(np.array([2.0, 1.0]))
    batch = channel.sample_batch(5, make_rng(3))
    rng = make_rng(3)
    rows = np.stack([channel.sample(rng) for _ in range(5)])
    np.testing.assert_array_equal(batch, rows)


def test_channel_rejects_bad_means():
    with pytest.raises(ValueError):
        ExponentialChannels(np.array([2.0, 0.0]))
    with pytest.raises(ValueError):
        ExponentialChannels(np.zeros((2, 2)))


def test_awgn_zero_power_gives_zero_rates():
    service = AwgnService(noise=np.ones(3), p_max=20.0)
    np.testing.assert_array_equal(service.rates(np.array([1.0, 2.0, 3.0]), np.zeros(3)), 0.0)


def test_awgn_unit_rate_example():
    service = AwgnService(noise=np.ones(1), p_max=20.0)
    np.testing.assert_allclose(service.rates(np.array([1.0]), np.array([E - 1.0])), [1.0])


def test_awgn_f_vector_layout():
    # two users at rate 1 each leaves 20 - 2(e-1) of budget headroom
    service = AwgnService(noise=np.ones(2), p_max=20.0)
    f = service.f_vector(np.ones(2), np.full(2, E - 1.0))
    assert f.shape == (3,)
    assert service.n_outputs == 3
    np.testing.assert_allclose(f[:2], [1.0, 1.0])
    np.testing.assert_allclose(f[2], 20.0 - 2.0 * (E - 1.0))
    np.testing.assert_allclose(f[2], 16.5634, atol=1e-4)


def test_awgn_rates_monotone_in_power():
    service = AwgnService(noise=np.ones(2), p_max=20.0)
    h = np.array([1.5, 0.7])
    low = service.rates(h, np.array([1.0, 2.0]))
    high = service.rates(h, np.array([1.5, 2.0]))
    assert high[0] > low[0] and high[1] == low[1]


def test_mai_symmetric_example():
    service = MaiService(noise=np.ones(2), p_max=20.0)
    rates = service.rates(np.ones(2), np.ones(2))
    np.testing.assert_allclose(rates, np.log(1.5))


def test_mai_asymmetric_example():
    # received powers (1, 2): user 1 sees interference 2, user 2 sees 1
    service = MaiService(noise=np.ones(2), p_max=20.0)
    rates = service.rates(np.array([1.0, 1.0]), np.array([1.0, 2.0]))
    np.testing.assert_allclose(rates, [np.log1p(1.0 / 3.0), np.log(2.0)])


def test_mai_zero_power_gives_zero_rates():
    service = MaiService(noise=np.ones(3), p_max=20.0)
    np.testing.assert_array_equal(service.rates(np.array([1.0, 2.0, 3.0]), np.zeros(3)), 0.0)


def test_single_user_mai_reduces_to_awgn():
    mai = MaiService(noise=np.array([1.5]), p_max=20.0)
    awgn = AwgnService(noise=np.array([1.5]), p_max=20.0)
    for seed in range(5):
        rng = make_rng(seed)
        h = rng.exponential(2.0, size=1)
        p = rng.uniform(0.0, 20.0, size=1)
        np.testing.assert_array_equal(mai.f_vector(h, p), awgn.f_vector(h, p))


@given(
    h=arrays(np.float64, 3, elements=st.floats(0.01, 50.0)),
    p=arrays(np.float64, 3, elements=st.floats(0.0, 20.0)),
    bump=st.floats(0.01, 5.0),
)
@settings(max_examples=100, deadline=None)
def test_mai_interference_monotonicity(h, p, bump):
    """Raising one user's power helps that user and hurts everyone else."""
    service = MaiService(noise=np.ones(3), p_max=20.0)
    before = service.rates(h, p)
    p_up = p.copy()
    p_up[0] += bump
    after = service.rates(h, p_up)
    assert after[0] > before[0]
    assert np.all(after[1:] <= before[1:])


@given(
    h=arrays(np.float64, 4, elements=st.floats(0.0, 100.0)),
    p=arrays(np.float64, 4, elements=st.floats(0.0, 20.0)),
)
@settings(max_examples=100, deadline=None)
def test_f_vectors_always_finite(h, p):
    for service in (AwgnService(np.ones(4), 20.0), MaiService(np.ones(4), 20.0)):
        assert np.all(np.isfinite(service.f_vector(h, p)))


def test_services_reject_bad_shapes_and_noise():
    service = AwgnService(noise=np.ones(2), p_max=20.0)
    with pytest.raises(ValueError):
        service.rates(np.ones(3), np.ones(2))
    with pytest.raises(ValueError):
        AwgnService(noise=np.array([1.0, 0.0]), p_max=20.0)
    with pytest.raises(ValueError):
        MaiService(noise=np.ones(2), p_max=0.0)
