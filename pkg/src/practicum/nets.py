"""Minimal double-precision MLP, Adam, and squashed-Gaussian head.

Everything is plain numpy so that analytic gradients can be audited against
central finite differences. Layers are (W, b) pairs with x @ W + b and ReLU
between hidden layers; parameters flatten into a single vector for gradient
checks and checkpointing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


class MLP:
    """Fully connected net, ReLU hidden activations, linear output."""

    def __init__(self, in_dim: int, hidden: tuple[int, ...], out_dim: int, rng: np.random.Generator):
        sizes = [in_dim] + list(hidden) + [out_dim]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            # Small uniform bias init keeps ReLU pre-activations off exact zero,
            # where subgradients and finite differences disagree.
            bound = 1.0 / np.sqrt(fan_in)
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))
        self.in_dim = in_dim
        self.out_dim = out_dim

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, cache of layer inputs) for a (B, in_dim) batch."""
        cache = [x]
        h = x
        for i in range(self.n_layers):
            h = h @ self.weights[i] + self.biases[i]
            if i < self.n_layers - 1:
                h = np.maximum(h, 0.0)
            cache.append(h)
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. all params, given dL/d(output).

        Returns a flat list [dW_0, db_0, dW_1, db_1, ...] matching params().
        """
        grads: list[np.ndarray] = [None] * (2 * self.n_layers)
        delta = grad_out
        for i in reversed(range(self.n_layers)):
            layer_in = cache[i]
            if i < self.n_layers - 1:
                # cache[i+1] holds the post-ReLU activation of layer i.
                delta = delta * (cache[i + 1] > 0.0)
            grads[2 * i] = layer_in.T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.weights[i].T
        return grads

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat(self, flat: np.ndarray) -> None:
        i = 0
        for p in self.params():
            p[...] = flat[i : i + p.size].reshape(p.shape)
            i += p.size
        assert i == flat.size

    def copy_from(self, other: "MLP") -> None:
        for mine, theirs in zip(self.params(), other.params()):
            mine[...] = theirs

    def clone(self) -> "MLP":
        twin = MLP.__new__(MLP)
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        twin.in_dim = self.in_dim
        twin.out_dim = self.out_dim
        return twin

    def zero_(self) -> None:
        for p in self.params():
            p[...] = 0.0


class Adam:
    """Adam over a list of parameter arrays, updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"t": np.asarray(self.t)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"m_{i}"] = m
            out[f"v_{i}"] = v
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.t = int(arrays["t"])
        for i in range(len(self.m)):
            self.m[i][...] = arrays[f"m_{i}"]
            self.v[i][...] = arrays[f"v_{i}"]


# ---------------------------------------------------------------------------
# Squashed diagonal Gaussian head

ATANH_CLIP = 1.0 - 1e-6
LOG_STD_MAX = 2.0


def split_head(out: np.ndarray, log_std_min: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split raw net output into (mean, clamped log-std, in-range mask)."""
    act_dim = out.shape[1] // 2
    mean = out[:, :act_dim]
    raw = out[:, act_dim:]
    log_std = np.clip(raw, log_std_min, LOG_STD_MAX)
    inside = (raw > log_std_min) & (raw < LOG_STD_MAX)
    return mean, log_std, inside


def squash(u: np.ndarray, a_max: float) -> np.ndarray:
    return a_max * np.tanh(u)


def unsquash(a: np.ndarray, a_max: float) -> np.ndarray:
    return np.arctanh(np.clip(a / a_max, -ATANH_CLIP, ATANH_CLIP))


def gaussian_log_prob(
    u: np.ndarray, mean: np.ndarray, log_std: np.ndarray, a_max: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Log-density of squashed actions with pre-squash values ``u``.

    Includes the tanh change-of-variables term. Returns per-sample log-probs
    plus the gradients w.r.t. mean and log-std (the jacobian term does not
    depend on the parameters).
    """
    z = (u - mean) * np.exp(-log_std)
    base = -0.5 * z * z - log_std - 0.5 * LOG_2PI
    # log |da/du| = log(a_max) + log(1 - tanh(u)^2), computed stably.
    jacobian = np.log(a_max) + 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
    logp = (base - jacobian).sum(axis=1)
    d_mean = z * np.exp(-log_std)
    d_log_std = z * z - 1.0
    return logp, d_mean, d_log_std
