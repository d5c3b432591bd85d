"""Shared numerics: safe sigmoid/softmax and a from-scratch Adam optimizer.

All training-time math runs in float64 so finite-difference gradient checks
stay meaningful.
"""

from __future__ import annotations

import numpy as np

# Logits are clamped to +-LOGIT_CLAMP before exponentiation: sigmoid output
# stays strictly inside (0, 1) in float64 and log-losses stay finite.
LOGIT_CLAMP = 30.0


def sigmoid(z):
    """Numerically safe logistic function, clamped to the open interval (0,1)."""
    z = np.clip(np.asarray(z, dtype=np.float64), -LOGIT_CLAMP, LOGIT_CLAMP)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def sigmoid_grad_mask(z):
    """1 where the clamped sigmoid is differentiable in z, else 0.

    Training code multiplies logit-space gradients by this mask so analytic
    gradients match the clamped forward function exactly.
    """
    z = np.asarray(z, dtype=np.float64)
    return (np.abs(z) < LOGIT_CLAMP).astype(np.float64)


def softmax(z):
    """Row-wise stable softmax."""
    z = np.asarray(z, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Adam:
    """Adam over a dict of named parameter arrays, updated in place.

    Biases may be 0-d arrays; everything is treated uniformly. `step` takes a
    grads dict keyed like the params dict (missing keys mean zero gradient).
    """

    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = grads.get(k)
            if g is None:
                continue
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def zero_grads_like(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}
