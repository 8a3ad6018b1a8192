"""Labelled datasets, standardization and stratified folds."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..scenario import VehicleClass

CLASSES = (VehicleClass.CAR, VehicleClass.TRUCK)


class Representation(str, Enum):
    FEATURE_VECTOR = "feature_vector"
    RAW_DATA = "raw_data"


def encode_labels(labels) -> np.ndarray:
    """car -> 0, truck -> 1."""
    out = []
    for lab in labels:
        if isinstance(lab, (int, np.integer)):
            if lab not in (0, 1):
                raise ValueError(f"label {lab} is not binary")
            out.append(int(lab))
        else:
            out.append(CLASSES.index(VehicleClass(lab)))
    return np.asarray(out, dtype=np.int64)


def decode_label(code: int) -> VehicleClass:
    return CLASSES[int(code)]


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    representation: Representation = Representation.FEATURE_VECTOR
    ids: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = encode_labels(self.y)
        if X.ndim != 2:
            raise ValueError("X must be 2-D (samples x dims)")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y disagree on the sample count")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains non-finite inputs")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "representation", Representation(self.representation))
        if self.ids is not None:
            object.__setattr__(self, "ids", np.asarray(self.ids))

    def __len__(self):
        return self.y.size

    @property
    def dims(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(
            self.X[idx], self.y[idx], self.representation, None if self.ids is None else self.ids[idx]
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=2)


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # constant columns pass through centred
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold index per sample; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if y.size < folds:
        raise ValueError(f"{y.size} samples cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in (0, 1)])
    assign = np.empty(y.size, dtype=np.int64)
    assign[order] = np.arange(order.size) % folds
    return assign
