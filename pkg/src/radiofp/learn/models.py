"""Model specs, training dispatch, prediction and the text model format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import ann, knn, svm, tree
from .dataset import Dataset, Representation, Standardizer, decode_label

MODEL_FORMAT = "radiofp-model"
MODEL_VERSION = 1


class Family(str, Enum):
    KNN = "knn"
    DECISION_TREE = "decision_tree"
    SVM = "svm"
    ANN = "ann"


DEFAULTS: dict[Family, dict[str, Any]] = {
    Family.KNN: {"k": 3},
    Family.DECISION_TREE: {"max_depth": 8, "min_leaf": 5},
    Family.SVM: {"lam": 1e-3, "epochs": 200, "eta0": 0.1},
    Family.ANN: {"hidden": 16, "learning_rate": 0.01, "epochs": 300, "batch_size": 32},
}

_POSITIVE_INT = {"k", "max_depth", "min_leaf", "epochs", "hidden", "batch_size"}
_POSITIVE_FLOAT = {"lam", "eta0", "learning_rate"}


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        hp = dict(DEFAULTS[family])
        unknown = set(self.hyperparameters) - set(hp)
        if unknown:
            raise ValueError(f"unknown {family.value} hyperparameters: {sorted(unknown)}")
        hp.update(self.hyperparameters)
        for key, val in hp.items():
            if key in _POSITIVE_INT and (int(val) != val or val < 1):
                raise ValueError(f"{key} must be a positive integer")
            if key in _POSITIVE_FLOAT and not val > 0:
                raise ValueError(f"{key} must be positive")
        object.__setattr__(self, "hyperparameters", hp)


_PARAM_TYPES = {
    Family.KNN: knn.KnnParams,
    Family.DECISION_TREE: tree.TreeParams,
    Family.SVM: svm.SvmParams,
    Family.ANN: ann.AnnParams,
}
_PREDICT = {
    Family.KNN: knn.predict,
    Family.DECISION_TREE: tree.predict,
    Family.SVM: svm.predict,
    Family.ANN: ann.predict,
}


@dataclass(frozen=True, eq=False)
class TrainedModel:
    family: Family
    params: Any
    scaler: Standardizer
    representation: Representation = Representation.FEATURE_VECTOR
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)

    @property
    def dims(self) -> int:
        return self.scaler.mean.size

    @property
    def n_parameters(self) -> int:
        return self.params.n_parameters

    def predict_codes(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dims:
            raise ValueError(f"input has {X.shape[1]} dims, model expects {self.dims}")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite input")
        return _PREDICT[self.family](self.params, self.scaler.transform(X))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "family": self.family.value,
            "representation": self.representation.value,
            "dims": self.dims,
            "hyperparameters": dict(self.hyperparameters),
            "scaler": {"mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()},
            "params": self.params.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a radiofp model document (or unsupported version)")
        family = Family(d["family"])
        scaler = Standardizer(np.asarray(d["scaler"]["mean"], dtype=float), np.asarray(d["scaler"]["std"], dtype=float))
        if scaler.mean.size != d["dims"]:
            raise ValueError("model dims disagree with the scaler")
        return cls(
            family,
            _PARAM_TYPES[family].from_dict(d["params"]),
            scaler,
            Representation(d["representation"]),
            dict(d["hyperparameters"]),
        )


def train(spec: ModelSpec, training: Dataset) -> TrainedModel:
    counts = training.class_counts()
    if counts.min() == 0:
        raise ValueError("training set holds a single class")
    if counts.min() < 2:
        raise ValueError("need at least 2 samples per class")
    scaler = Standardizer.fit(training.X)
    Z = scaler.transform(training.X)
    y = training.y
    hp = spec.hyperparameters
    rng = np.random.default_rng(spec.rng_seed)
    if spec.family is Family.KNN:
        params = knn.fit(Z, y, hp["k"])
    elif spec.family is Family.DECISION_TREE:
        params = tree.fit(Z, y, hp["max_depth"], hp["min_leaf"])
    elif spec.family is Family.SVM:
        params = svm.fit(Z, y, rng, hp["lam"], hp["epochs"], hp["eta0"])
    else:
        params = ann.fit(Z, y, rng, hp["hidden"], hp["learning_rate"], hp["epochs"], hp["batch_size"])
    return TrainedModel(spec.family, params, scaler, training.representation, hp)


def predict(model: TrainedModel, x):
    """Label for one input vector."""
    return decode_label(model.predict_codes(np.asarray(x, dtype=float).reshape(1, -1))[0])


def save_model(model: TrainedModel, path) -> None:
    # repr-exact floats keep the round trip lossless
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n")


def load_model(path) -> TrainedModel:
    return TrainedModel.from_dict(json.loads(Path(path).read_text()))


def gradient_check(model, sample, label, epsilon: float = 1e-5) -> float:
    """Backprop vs central differences for an ANN (TrainedModel or raw params)."""
    from .dataset import encode_labels

    if isinstance(model, TrainedModel):
        if model.family is not Family.ANN:
            raise ValueError("gradient check applies to ANN models only")
        x = model.scaler.transform(np.atleast_2d(sample))
        params = model.params
    else:
        x, params = np.atleast_2d(sample), model
    return ann.gradient_check(params, x, encode_labels(np.atleast_1d(label)), epsilon)
