"""Linear SVM: L2-regularized hinge loss, per-sample subgradient descent."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class SvmParams:
    w: np.ndarray
    b: float

    def to_dict(self):
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["w"], dtype=float), float(d["b"]))

    @property
    def n_parameters(self) -> int:
        return self.w.size + 1


def fit(
    Z: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    lam: float = 1e-3,
    epochs: int = 200,
    eta0: float = 0.1,
) -> SvmParams:
    """``y`` in {0, 1}; class 1 (truck) is the positive side."""
    s = np.where(y == 1, 1.0, -1.0)
    n, d = Z.shape
    w = np.zeros(d)
    b = 0.0
    t = 0
    rows = [Z[i] for i in range(n)]
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = eta0 / (1.0 + eta0 * lam * t)
            x, yi = rows[i], s[i]
            margin = yi * (float(w @ x) + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += (eta * yi) * x
                b += eta * yi
    return SvmParams(w, b)


def decision_function(params: SvmParams, Z: np.ndarray) -> np.ndarray:
    return Z @ params.w + params.b


def predict(params: SvmParams, Z: np.ndarray) -> np.ndarray:
    return (decision_function(params, Z) > 0).astype(np.int64)
