"""Deterministic power-allocation policies: flat-parameter MLPs with exact VJPs.

Two variants share the same parameter conventions:

* :class:`MlpPolicy` maps the full channel vector through one network.
* :class:`PerUserPolicy` gives every user its own scalar-input subnet and
  evaluates all of them in a single stacked pass.

Hidden layers are ReLU; the output layer is ``p_max * sigmoid``, so raw
network outputs always land inside ``(0, p_max)`` and the action box
constraint never needs enforcing on the policy itself.  Parameters live in a
single flat float64 vector: layers in order, each as the weight matrix in
row-major order followed by its bias.  ReLU has derivative zero at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = ["MlpPolicy", "PerUserPolicy"]


def _layer_shapes(widths: tuple[int, ...]) -> list[tuple[int, int]]:
    if len(widths) < 2:
        raise ValueError("a network needs at least an input and an output width")
    if any(w < 1 for w in widths):
        raise ValueError(f"layer widths must be positive, got {widths}")
    return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]


def _layer_slices(shapes: list[tuple[int, int]]) -> tuple[list[slice], list[slice], int]:
    w_slices: list[slice] = []
    b_slices: list[slice] = []
    off = 0
    for n_out, n_in in shapes:
        w_slices.append(slice(off, off + n_out * n_in))
        off += n_out * n_in
        b_slices.append(slice(off, off + n_out))
        off += n_out
    return w_slices, b_slices, off


def _init_flat(
    shapes: list[tuple[int, int]],
    w_slices: list[slice],
    b_slices: list[slice],
    n_params: int,
    rng: np.random.Generator | None,
) -> np.ndarray:
    if rng is None:
        return np.zeros(n_params)
    # He-scaled hidden weights, but the output layer stays zero: every action
    # starts at exactly p_max/2 (the same observable start as zero init)
    # while the hidden features are alive and trainable from step one.
    theta = np.zeros(n_params)
    for layer, (n_out, n_in) in enumerate(shapes[:-1]):
        theta[w_slices[layer]] = rng.normal(0.0, np.sqrt(2.0 / n_in), n_out * n_in)
    return theta


@dataclass(eq=False)
class _MlpCache:
    """Forward-pass intermediates needed by the backward sweep."""

    weights: list[np.ndarray]
    acts: list[np.ndarray]  # acts[0] is the input, acts[l] the l-th ReLU output
    sig: np.ndarray  # output-layer sigmoid, before the p_max scaling


class MlpPolicy:
    """Fully connected network from the channel vector to one power per user."""

    def __init__(self, n_in: int, hidden: tuple[int, ...], n_out: int, p_max: float):
        if p_max <= 0.0:
            raise ValueError(f"p_max must be positive, got {p_max}")
        self.n_in = int(n_in)
        self.hidden = tuple(int(w) for w in hidden)
        self.n_out = int(n_out)
        self.p_max = float(p_max)
        self._shapes = _layer_shapes((self.n_in, *self.hidden, self.n_out))
        self._w_slices, self._b_slices, self._n_params = _layer_slices(self._shapes)

    @property
    def n_params(self) -> int:
        return self._n_params

    @property
    def n_action(self) -> int:
        return self.n_out

    def init_params(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Initial parameters: all zeros, or a seeded He-style draw.

        With no generator every parameter is zero and every user starts at
        ``p_max / 2``.  Zero init keeps the hidden layers inert: their
        activations are zero going forward and their weight gradients are
        zero going backward, so training can only ever move the output bias
        and the policy stays a constant function of the channel.  Passing a
        generator instead draws He-scaled Gaussian hidden weights (output
        layer and all biases still zero), which preserves the ``p_max / 2``
        starting actions but lets every layer train.
        """
        return _init_flat(self._shapes, self._w_slices, self._b_slices, self._n_params, rng)

    def _unpack(self, theta: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self._n_params,):
            raise ValueError(f"expected {self._n_params} parameters, got shape {theta.shape}")
        weights = [theta[s].reshape(shape) for s, shape in zip(self._w_slices, self._shapes)]
        biases = [theta[s] for s in self._b_slices]
        return weights, biases

    def forward(self, theta: np.ndarray, h: np.ndarray) -> np.ndarray:
        p, _ = self.forward_cached(theta, h)
        return p

    def forward_cached(self, theta: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, _MlpCache]:
        weights, biases = self._unpack(theta)
        a = np.asarray(h, dtype=np.float64)
        if a.shape != (self.n_in,):
            raise ValueError(f"expected channel vector of length {self.n_in}, got {a.shape}")
        acts = [a]
        for w, b in zip(weights[:-1], biases[:-1]):
            a = np.maximum(w @ a + b, 0.0)
            acts.append(a)
        sig = expit(weights[-1] @ a + biases[-1])
        return self.p_max * sig, _MlpCache(weights=weights, acts=acts, sig=sig)

    def vjp_from_cache(self, cache: _MlpCache, cotangent: np.ndarray) -> np.ndarray:
        """Gradient of ``cotangent . p(theta, h)`` in the flat layout, one backward sweep."""
        cot = np.asarray(cotangent, dtype=np.float64)
        if cot.shape != (self.n_out,):
            raise ValueError(f"expected cotangent of length {self.n_out}, got {cot.shape}")
        g = cot * self.p_max * cache.sig * (1.0 - cache.sig)
        grad = np.empty(self._n_params)
        for layer in reversed(range(len(self._shapes))):
            grad[self._w_slices[layer]] = np.outer(g, cache.acts[layer]).ravel()
            grad[self._b_slices[layer]] = g
            if layer > 0:
                g = (cache.weights[layer].T @ g) * (cache.acts[layer] > 0.0)
        return grad

    def vjp(self, theta: np.ndarray, h: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        _, cache = self.forward_cached(theta, h)
        return self.vjp_from_cache(cache, cotangent)


@dataclass(eq=False)
class _StackCache:
    weights: list[np.ndarray]  # per layer, shape (n_users, n_out, n_in)
    acts: list[np.ndarray]  # per layer input, shape (n_users, width)
    sig: np.ndarray  # shape (n_users, 1)


class PerUserPolicy:
    """One independent subnet per user, each mapping its own channel to its own power.

    All subnets share the same architecture, so the forward and backward passes
    run stacked across users instead of looping.  The flat parameter vector is
    the user-0 subnet followed by user 1 and so on, each in the standard
    layer-major layout, which is exactly the concatenation of the equivalent
    single-user :class:`MlpPolicy` vectors.
    """

    def __init__(self, n_users: int, hidden: tuple[int, ...], p_max: float):
        if n_users < 1:
            raise ValueError(f"n_users must be >= 1, got {n_users}")
        if p_max <= 0.0:
            raise ValueError(f"p_max must be positive, got {p_max}")
        self.n_users = int(n_users)
        self.hidden = tuple(int(w) for w in hidden)
        self.p_max = float(p_max)
        self._shapes = _layer_shapes((1, *self.hidden, 1))
        self._w_slices, self._b_slices, self._per_user = _layer_slices(self._shapes)
        self._n_params = self.n_users * self._per_user

    @property
    def n_params(self) -> int:
        return self._n_params

    @property
    def n_action(self) -> int:
        return self.n_users

    @property
    def params_per_user(self) -> int:
        return self._per_user

    def init_params(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Zero parameters, or one independent He-style draw per user subnet."""
        if rng is None:
            return np.zeros(self._n_params)
        blocks = [
            _init_flat(self._shapes, self._w_slices, self._b_slices, self._per_user, rng)
            for _ in range(self.n_users)
        ]
        return np.concatenate(blocks)

    def _unpack(self, theta: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self._n_params,):
            raise ValueError(f"expected {self._n_params} parameters, got shape {theta.shape}")
        per = theta.reshape(self.n_users, self._per_user)
        weights = [
            per[:, s].reshape(self.n_users, *shape)
            for s, shape in zip(self._w_slices, self._shapes)
        ]
        biases = [per[:, s] for s in self._b_slices]
        return weights, biases

    def forward(self, theta: np.ndarray, h: np.ndarray) -> np.ndarray:
        p, _ = self.forward_cached(theta, h)
        return p

    def forward_cached(self, theta: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, _StackCache]:
        weights, biases = self._unpack(theta)
        h = np.asarray(h, dtype=np.float64)
        if h.shape != (self.n_users,):
            raise ValueError(f"expected channel vector of length {self.n_users}, got {h.shape}")
        a = h[:, None]
        acts = [a]
        for w, b in zip(weights[:-1], biases[:-1]):
            a = np.maximum(np.einsum("koi,ki->ko", w, a) + b, 0.0)
            acts.append(a)
        sig = expit(np.einsum("koi,ki->ko", weights[-1], a) + biases[-1])
        return self.p_max * sig[:, 0], _StackCache(weights=weights, acts=acts, sig=sig)

    def vjp_from_cache(self, cache: _StackCache, cotangent: np.ndarray) -> np.ndarray:
        cot = np.asarray(cotangent, dtype=np.float64)
        if cot.shape != (self.n_users,):
            raise ValueError(f"expected cotangent of length {self.n_users}, got {cot.shape}")
        g = cot[:, None] * self.p_max * cache.sig * (1.0 - cache.sig)
        grad = np.empty((self.n_users, self._per_user))
        for layer in reversed(range(len(self._shapes))):
            n_out, n_in = self._shapes[layer]
            gw = np.einsum("ko,ki->koi", g, cache.acts[layer])
            grad[:, self._w_slices[layer]] = gw.reshape(self.n_users, n_out * n_in)
            grad[:, self._b_slices[layer]] = g
            if layer > 0:
                g = np.einsum("koi,ko->ki", cache.weights[layer], g) * (cache.acts[layer] > 0.0)
        return grad.ravel()

    def vjp(self, theta: np.ndarray, h: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        _, cache = self.forward_cached(theta, h)
        return self.vjp_from_cache(cache, cotangent)
