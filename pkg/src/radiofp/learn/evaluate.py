"""Stratified k-fold cross-validation and the per-link evaluation."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .dataset import CLASSES, Dataset, stratified_folds
from .models import ModelSpec, train


@dataclass(frozen=True, eq=False)
class EvalReport:
    family: str
    representation: str
    folds: int
    seed: int
    confusion: tuple[np.ndarray, ...]  # per fold, rows = true, cols = predicted
    inference_times: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def total_confusion(self) -> np.ndarray:
        return sum(self.confusion, np.zeros((2, 2), dtype=np.int64))

    @property
    def csr(self) -> float:
        cm = self.total_confusion
        return float(np.trace(cm) / cm.sum())

    def precision(self, cls: int) -> float:
        col = self.total_confusion[:, cls].sum()
        return float(self.total_confusion[cls, cls] / col) if col else float("nan")

    def recall(self, cls: int) -> float:
        row = self.total_confusion[cls].sum()
        return float(self.total_confusion[cls, cls] / row) if row else float("nan")

    @property
    def mean_inference_time(self) -> float:
        return float(self.inference_times.mean()) if self.inference_times.size else float("nan")

    @property
    def median_inference_time(self) -> float:
        return float(np.median(self.inference_times)) if self.inference_times.size else float("nan")

    def same_outcome(self, other: "EvalReport") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.confusion, other.confusion)) and len(
            self.confusion
        ) == len(other.confusion)

    def to_text(self, timing: bool = False) -> str:
        lines = [
            f"family = {self.family}",
            f"representation = {self.representation}",
            f"folds = {self.folds}",
            f"seed = {self.seed}",
            f"csr = {self.csr:.6f}",
        ]
        for c, cls in enumerate(CLASSES):
            lines.append(f"precision.{cls.value} = {self.precision(c):.6f}")
            lines.append(f"recall.{cls.value} = {self.recall(c):.6f}")
        if timing:
            lines.append(f"inference_time.mean_s = {self.mean_inference_time:.9f}")
            lines.append(f"inference_time.median_s = {self.median_inference_time:.9f}")
        lines.append("confusion (rows=true, cols=predicted; car truck)")
        for i, cm in enumerate(self.confusion):
            lines.append(f"  fold {i}: {cm[0, 0]} {cm[0, 1]} / {cm[1, 0]} {cm[1, 1]}")
        cm = self.total_confusion
        lines.append(f"  total: {cm[0, 0]} {cm[0, 1]} / {cm[1, 0]} {cm[1, 1]}")
        return "\n".join(lines) + "\n"


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    cm = np.zeros((2, 2), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def cross_validate(
    spec: ModelSpec, dataset: Dataset, folds: int = 5, seed: int = 0, timing: bool = False
) -> EvalReport:
    """Stratified CV; scaler and model are refitted on each training split only.

    With ``timing`` each test input is classified on its own and timed.
    """
    if len(dataset) < folds:
        raise ValueError(f"dataset of {len(dataset)} samples is smaller than {folds} folds")
    assign = stratified_folds(dataset.y, folds, seed)
    matrices = []
    times = []
    for f in range(folds):
        train_idx = np.flatnonzero(assign != f)
        test_idx = np.flatnonzero(assign == f)
        tr = dataset.subset(train_idx)
        if tr.class_counts().min() == 0:
            raise ValueError(f"fold {f}: training split lacks a class")
        model = train(spec, tr)
        X_test = dataset.X[test_idx]
        if timing:
            pred = np.empty(test_idx.size, dtype=np.int64)
            for i, x in enumerate(X_test):
                t0 = time.perf_counter()
                pred[i] = model.predict_codes(x[None, :])[0]
                times.append(time.perf_counter() - t0)
        else:
            pred = model.predict_codes(X_test)
        matrices.append(confusion_matrix(dataset.y[test_idx], pred))
    return EvalReport(
        spec.family.value,
        dataset.representation.value,
        folds,
        seed,
        tuple(matrices),
        np.asarray(times),
    )


def per_link_eval(
    spec: ModelSpec, datasets: Mapping[int, Dataset], folds: int = 5, seed: int = 0
) -> list[tuple[int, float]]:
    out = []
    for link_id in range(1, 10):
        ds = datasets.get(link_id)
        if ds is None or len(ds) == 0:
            raise ValueError(f"no data for link {link_id}")
        out.append((link_id, cross_validate(spec, ds, folds, seed).csr))
    return out
