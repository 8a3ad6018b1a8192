"""k-nearest neighbours on standardized inputs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class KnnParams:
    X: np.ndarray
    y: np.ndarray
    k: int

    def to_dict(self):
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["X"], dtype=float).reshape(len(d["y"]), -1), np.asarray(d["y"], dtype=np.int64), int(d["k"]))

    @property
    def n_parameters(self) -> int:
        return self.X.size


def fit(Z: np.ndarray, y: np.ndarray, k: int = 3) -> KnnParams:
    return KnnParams(Z.copy(), y.copy(), int(k))


def predict(params: KnnParams, Z: np.ndarray) -> np.ndarray:
    k = min(params.k, params.y.size)
    out = np.empty(Z.shape[0], dtype=np.int64)
    for i, q in enumerate(Z):
        d = np.sum((params.X - q) ** 2, axis=1)
        # stable sort: equidistant neighbours ranked by training order
        nearest = np.argsort(d, kind="stable")[:k]
        votes = np.bincount(params.y[nearest], minlength=2)
        if votes[0] == votes[1]:
            out[i] = params.y[nearest[0]]
        else:
            out[i] = int(np.argmax(votes))
    return out
