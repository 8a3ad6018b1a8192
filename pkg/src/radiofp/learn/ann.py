"""One-hidden-layer ReLU network with a two-way softmax output."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass(eq=False)
class AnnParams:
    W1: np.ndarray  # (d, hidden)
    b1: np.ndarray
    W2: np.ndarray  # (hidden, 2)
    b2: np.ndarray

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.asarray(d[k], dtype=float) for k in PARAM_NAMES))

    def copy(self) -> "AnnParams":
        return AnnParams(*(getattr(self, k).copy() for k in PARAM_NAMES))

    @property
    def n_parameters(self) -> int:
        return sum(getattr(self, k).size for k in PARAM_NAMES)


def init_params(d: int, hidden: int, rng: np.random.Generator) -> AnnParams:
    return AnnParams(
        rng.normal(0.0, np.sqrt(2.0 / d), size=(d, hidden)),
        np.zeros(hidden),
        rng.normal(0.0, np.sqrt(1.0 / hidden), size=(hidden, 2)),
        np.zeros(2),
    )


def forward(p: AnnParams, X: np.ndarray):
    z1 = X @ p.W1 + p.b1
    h = np.maximum(z1, 0.0)
    logits = h @ p.W2 + p.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    return z1, h, logits, probs


def loss(p: AnnParams, X: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy."""
    _, _, logits, _ = forward(p, X)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(y.size), y].mean())


def gradients(p: AnnParams, X: np.ndarray, y: np.ndarray) -> AnnParams:
    z1, h, _, probs = forward(p, X)
    dlogits = probs.copy()
    dlogits[np.arange(y.size), y] -= 1.0
    dlogits /= y.size
    dW2 = h.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dz1 = (dlogits @ p.W2.T) * (z1 > 0)
    dW1 = X.T @ dz1
    db1 = dz1.sum(axis=0)
    return AnnParams(dW1, db1, dW2, db2)


def fit(
    Z: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    hidden: int = 16,
    learning_rate: float = 0.01,
    epochs: int = 300,
    batch_size: int = 32,
) -> AnnParams:
    p = init_params(Z.shape[1], hidden, rng)
    n = y.size
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            g = gradients(p, Z[idx], y[idx])
            for k in PARAM_NAMES:
                getattr(p, k)[...] -= learning_rate * getattr(g, k)
    return p


def predict(p: AnnParams, Z: np.ndarray) -> np.ndarray:
    _, _, logits, _ = forward(p, Z)
    # argmax keeps index 0 (car) on an exact tie
    return np.argmax(logits, axis=1).astype(np.int64)


def gradient_check(p: AnnParams, X: np.ndarray, y: np.ndarray, epsilon: float = 1e-5, floor: float = 1e-8) -> float:
    """Largest relative error between backprop and central finite differences.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; ``floor`` keeps
    parameters whose gradient is exactly zero (dead units) from dividing by 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    analytic = gradients(p, X, y)
    probe = p.copy()
    worst = 0.0
    for k in PARAM_NAMES:
        arr = getattr(probe, k)
        grad = getattr(analytic, k)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + epsilon
            up = loss(probe, X, y)
            arr[idx] = orig - epsilon
            down = loss(probe, X, y)
            arr[idx] = orig
            numeric = (up - down) / (2 * epsilon)
            a = grad[idx]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, rel)
    return worst
