"""Channel simulators and instantaneous service models.

A channel model draws fading states; a service model maps a fading state and a
power allocation to the vector the dual ascent probes: per-user instantaneous
rates followed by the transmit-power headroom ``p_max - sum(p)``.  Keeping the
headroom as the last row lets one multiplier vector police both the ergodic
rate constraints and the average power budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ExponentialChannels", "AwgnService", "MaiService"]


@dataclass(frozen=True, eq=False)
class ExponentialChannels:
    """I.i.d. exponential fading with per-user means (Rayleigh power gains)."""

    means: np.ndarray

    def __post_init__(self) -> None:
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim != 1 or means.size < 1:
            raise ValueError("channel means must form a nonempty 1-D vector")
        if np.any(means <= 0.0):
            raise ValueError("channel means must be positive")
        object.__setattr__(self, "means", means)

    @property
    def n_users(self) -> int:
        return self.means.shape[0]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One fading realization; consumes exactly ``n_users`` draws."""
        return rng.exponential(self.means)

    def sample_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``(n, n_users)`` realizations, row ``i`` drawn before row ``i+1``."""
        return rng.exponential(self.means, size=(n, self.n_users))


def _check_state(h: np.ndarray, p: np.ndarray, n_users: int) -> tuple[np.ndarray, np.ndarray]:
    h = np.asarray(h, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if h.shape != (n_users,) or p.shape != (n_users,):
        raise ValueError(
            f"expected channel and power vectors of length {n_users}, "
            f"got {h.shape} and {p.shape}"
        )
    return h, p


@dataclass(frozen=True, eq=False)
class AwgnService:
    """Orthogonal links: each user sees only its own channel and noise floor."""

    noise: np.ndarray
    p_max: float

    def __post_init__(self) -> None:
        noise = np.asarray(self.noise, dtype=np.float64)
        if noise.ndim != 1 or np.any(noise <= 0.0):
            raise ValueError("noise floors must be a 1-D positive vector")
        if self.p_max <= 0.0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        object.__setattr__(self, "noise", noise)

    @property
    def n_users(self) -> int:
        return self.noise.shape[0]

    @property
    def n_outputs(self) -> int:
        """Rates plus the power-headroom row."""
        return self.n_users + 1

    def rates(self, h: np.ndarray, p: np.ndarray) -> np.ndarray:
        h, p = _check_state(h, p, self.n_users)
        return np.log1p(h * p / self.noise)

    def f_vector(self, h: np.ndarray, p: np.ndarray) -> np.ndarray:
        r = self.rates(h, p)
        return np.concatenate([r, [self.p_max - p.sum()]])


@dataclass(frozen=True, eq=False)
class MaiService:
    """Shared medium: every other user's received power adds to the noise floor."""

    noise: np.ndarray
    p_max: float

    def __post_init__(self) -> None:
        noise = np.asarray(self.noise, dtype=np.float64)
        if noise.ndim != 1 or np.any(noise <= 0.0):
            raise ValueError("noise floors must be a 1-D positive vector")
        if self.p_max <= 0.0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        object.__setattr__(self, "noise", noise)

    @property
    def n_users(self) -> int:
        return self.noise.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.n_users + 1

    def rates(self, h: np.ndarray, p: np.ndarray) -> np.ndarray:
        h, p = _check_state(h, p, self.n_users)
        received = h * p
        interference = received.sum() - received
        return np.log1p(received / (self.noise + interference))

    def f_vector(self, h: np.ndarray, p: np.ndarray) -> np.ndarray:
        r = self.rates(h, p)
        return np.concatenate([r, [self.p_max - p.sum()]])
