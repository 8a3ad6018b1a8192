"""Wall-clock cost of training and single-pass inference per model."""
from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .learn.dataset import Dataset
from .learn.models import ModelSpec, TrainedModel, train

MIN_INFERENCES = 1000


def hardware_description() -> str:
    return f"{platform.machine()} {platform.processor() or 'unknown-cpu'} / {platform.system()} {platform.release()} / Python {platform.python_version()}"


@dataclass(frozen=True)
class ProfileRow:
    family: str
    representation: str
    train_time: float
    mean_inference: float
    median_inference: float
    p95_inference: float
    n_parameters: int
    n_inferences: int


@dataclass(frozen=True)
class ProfileReport:
    rows: tuple[ProfileRow, ...] = ()
    hardware: str = field(default_factory=hardware_description)
    energy: str = "unsupported"

    def row(self, family: str, representation: str) -> ProfileRow:
        for r in self.rows:
            if r.family == family and r.representation == representation:
                return r
        raise KeyError((family, representation))

    def to_text(self) -> str:
        lines = [f"hardware = {self.hardware}", f"energy = {self.energy}"]
        for r in self.rows:
            key = f"{r.family}.{r.representation}"
            lines += [
                f"{key}.train_time_s = {r.train_time:.6f}",
                f"{key}.inference_mean_s = {r.mean_inference:.9f}",
                f"{key}.inference_median_s = {r.median_inference:.9f}",
                f"{key}.inference_p95_s = {r.p95_inference:.9f}",
                f"{key}.parameters = {r.n_parameters}",
                f"{key}.inferences = {r.n_inferences}",
            ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        head = "family,representation,train_time_s,inference_mean_s,inference_median_s,inference_p95_s,parameters,energy"
        body = [
            f"{r.family},{r.representation},{r.train_time:.6f},{r.mean_inference:.9f},"
            f"{r.median_inference:.9f},{r.p95_inference:.9f},{r.n_parameters},{self.energy}"
            for r in self.rows
        ]
        return "\n".join([head, *body]) + "\n"


def time_inference(model: TrainedModel, X: np.ndarray, n: int = MIN_INFERENCES) -> np.ndarray:
    """Seconds per single-input classification, cycling through the rows of ``X``."""
    if n < MIN_INFERENCES:
        raise ValueError(f"need at least {MIN_INFERENCES} inferences")
    times = np.empty(n)
    rows = [X[i % X.shape[0]][None, :] for i in range(n)]
    for i, x in enumerate(rows):
        t0 = time.perf_counter()
        model.predict_codes(x)
        times[i] = time.perf_counter() - t0
    return times


def profile_models(
    cells: Sequence[tuple[ModelSpec, Dataset]], n_inferences: int = MIN_INFERENCES
) -> ProfileReport:
    """Train each (spec, dataset) cell on the full dataset and time its inference."""
    rows = []
    for spec, ds in cells:
        t0 = time.perf_counter()
        model = train(spec, ds)
        t_train = time.perf_counter() - t0
        times = time_inference(model, ds.X, n_inferences)
        rows.append(
            ProfileRow(
                spec.family.value,
                ds.representation.value,
                t_train,
                float(times.mean()),
                float(np.median(times)),
                float(np.percentile(times, 95)),
                model.n_parameters,
                n_inferences,
            )
        )
    return ProfileReport(tuple(rows))
