"""Fleet-level glue: synthesize passes, extract features, build datasets."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import MacSchedule, NoiseModel, RssiTrace, ShadowingModel, pass_seed, synth_pass
from .features import DetectorConfig, FeatureError, PassExtraction, extract_pass
from .learn.dataset import Dataset, Representation
from .scenario import DeploymentConfig, LinkGeometry, VehicleProfile, build_links


@dataclass(frozen=True)
class ChannelSetup:
    config: DeploymentConfig = DeploymentConfig()
    schedule: MacSchedule | None = None
    noise: NoiseModel = NoiseModel()
    shadowing: ShadowingModel = ShadowingModel()

    @property
    def mac(self) -> MacSchedule:
        return self.schedule or MacSchedule.for_config(self.config)

    @property
    def links(self) -> list[LinkGeometry]:
        return build_links(self.config)


def synth_one(vehicle: VehicleProfile, setup: ChannelSetup, run_seed: int) -> list[RssiTrace]:
    return synth_pass(
        vehicle, setup.links, setup.config, setup.mac, setup.noise, pass_seed(run_seed, vehicle.vehicle_id),
        shadowing=setup.shadowing,
    )


def _synth_star(args):
    return synth_one(*args)


def synth_fleet(
    fleet: Sequence[VehicleProfile], setup: ChannelSetup, run_seed: int, workers: int = 1
) -> list[list[RssiTrace]]:
    """Per-pass traces; each pass has its own seed so worker count never changes output."""
    jobs = [(v, setup, run_seed) for v in fleet]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_synth_star, jobs, chunksize=16))
    return [synth_one(*j) for j in jobs]


@dataclass
class ExtractionResult:
    passes: list[PassExtraction] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    rejects: list[tuple[int | None, str]] = field(default_factory=list)


def extract_fleet(
    traces: Sequence[Sequence[RssiTrace]],
    vehicle_ids: Sequence[int],
    labels: Sequence[str],
    links: Sequence[LinkGeometry],
    cfg: DetectorConfig = DetectorConfig(),
    reference_link: int | None = 1,
) -> ExtractionResult:
    out = ExtractionResult()
    for tr, vid, lab in zip(traces, vehicle_ids, labels):
        try:
            px = extract_pass(tr, links, cfg, vid, reference_link)
        except FeatureError as exc:
            out.rejects.append((vid, f"{exc.kind}: {exc}"))
            continue
        out.passes.append(px)
        out.labels.append(lab)
    return out


def feature_dataset(result: ExtractionResult) -> Dataset:
    X = np.array([p.features.as_array() for p in result.passes]).reshape(len(result.passes), -1)
    ids = [p.vehicle_id for p in result.passes]
    return Dataset(X, result.labels, Representation.FEATURE_VECTOR, ids)


def raw_dataset(result: ExtractionResult) -> Dataset:
    X = np.array([p.raw.values for p in result.passes]).reshape(len(result.passes), -1)
    ids = [p.vehicle_id for p in result.passes]
    return Dataset(X, result.labels, Representation.RAW_DATA, ids)


def link_datasets(result: ExtractionResult, links: Sequence[LinkGeometry]) -> dict[int, Dataset]:
    """One feature dataset per link: shared speed/length plus that link's scalars."""
    out = {}
    for lid in range(1, 10):
        rows, labs, ids = [], [], []
        for p, lab in zip(result.passes, result.labels):
            fv = p.link_features(lid, links)
            if fv is not None:
                rows.append(fv.as_array())
                labs.append(lab)
                ids.append(p.vehicle_id)
        out[lid] = Dataset(np.array(rows).reshape(len(rows), -1), labs, Representation.FEATURE_VECTOR, ids)
    return out
