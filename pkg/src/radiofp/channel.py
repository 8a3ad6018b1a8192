"""RSSI synthesis for the nine links during a single vehicle pass.

Idle levels follow free-space path loss.  A vehicle body occludes a link when
its silhouette rises above the line of sight where that line crosses the
vehicle's lateral track; the occlusion depth is mapped to a saturating dB
loss.  Links are sampled on a token schedule: each TX beacons in its slot and
all three receivers measure it simultaneously.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .scenario import (
    DIRECT_LINKS,
    DeploymentConfig,
    LinkGeometry,
    VehicleProfile,
    exit_time,
)

SPEED_OF_LIGHT = 299_792_458.0
TRACE_FORMAT = "# radiofp-trace v1"
TRACE_COLUMNS = "time_s,link_id,rssi_dbm"


class TraceFormatError(ValueError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no


@dataclass(frozen=True)
class MacSchedule:
    token_order: tuple[int, int, int] = (1, 2, 3)
    slot_duration: float = 0.003

    def __post_init__(self):
        if sorted(self.token_order) != [1, 2, 3]:
            raise ValueError("token_order must be a permutation of (1, 2, 3)")
        if self.slot_duration <= 0:
            raise ValueError("slot_duration must be positive")
        if self.slot_us <= 0:
            raise ValueError("slot_duration below microsecond resolution")

    @property
    def slot_us(self) -> int:
        return round(self.slot_duration * 1e6)

    @property
    def round_us(self) -> int:
        return 3 * self.slot_us

    @property
    def round_duration(self) -> float:
        return self.round_us / 1e6

    def slot_of(self, tx_index: int) -> int:
        return self.token_order.index(tx_index)

    def check(self, config: DeploymentConfig) -> None:
        if not math.isclose(self.round_duration, config.round_duration, rel_tol=1e-6):
            raise ValueError(
                f"schedule round {self.round_duration} s does not match "
                f"{config.sample_rounds_per_second} rounds/s"
            )

    @classmethod
    def for_config(cls, config: DeploymentConfig, token_order=(1, 2, 3)) -> "MacSchedule":
        return cls(tuple(token_order), config.round_duration / 3)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 1.0
    quantization_step: int = 1

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.quantization_step <= 0 or int(self.quantization_step) != self.quantization_step:
            raise ValueError("quantization_step must be a positive whole number of dB")

    def quantize(self, x):
        step = int(self.quantization_step)
        return (step * np.round(np.asarray(x, dtype=float) / step)).astype(np.int64)


@dataclass(frozen=True)
class ShadowingModel:
    a_max: float = 30.0  # dB
    decay: float = 0.5  # m

    def __post_init__(self):
        if self.a_max <= 0 or self.decay <= 0:
            raise ValueError("a_max and decay must be positive")


@dataclass(frozen=True)
class RssiSample:
    time: float
    link_id: int
    rssi: int


@dataclass(frozen=True, eq=False)
class RssiTrace:
    link_id: int
    times: np.ndarray
    rssi: np.ndarray
    idle_level_true: float | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rssi = np.asarray(self.rssi, dtype=np.int64)
        if times.shape != rssi.shape or times.ndim != 1:
            raise ValueError("times and rssi must be 1-D arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("trace timestamps must be strictly increasing")
        times.flags.writeable = False
        rssi.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rssi", rssi)

    def __len__(self):
        return self.times.size

    @property
    def samples(self) -> list[RssiSample]:
        return [RssiSample(float(t), self.link_id, int(r)) for t, r in zip(self.times, self.rssi)]

    def shifted(self, offset: int) -> "RssiTrace":
        return RssiTrace(self.link_id, self.times, self.rssi + offset, None)


# --------------------------------------------------------------------------- propagation


def free_space_path_loss(distance: float, frequency: float) -> float:
    return 20 * math.log10(distance) + 20 * math.log10(frequency) + 20 * math.log10(4 * math.pi / SPEED_OF_LIGHT)


def idle_rssi(link: LinkGeometry, config: DeploymentConfig) -> float:
    return config.tx_power - free_space_path_loss(link.length, config.carrier_frequency)


def _front_positions(vehicle: VehicleProfile, t: np.ndarray) -> np.ndarray:
    dt = t - vehicle.entry_time
    v, a = vehicle.entry_velocity, vehicle.acceleration
    if a < 0:
        # a decelerating vehicle halts instead of backing up
        dt = np.minimum(dt, -v / a)
    advance = v * dt + 0.5 * a * dt * dt
    return vehicle.entry_position + vehicle.sign * advance


def _depths(link: LinkGeometry, vehicle: VehicleProfile, t: np.ndarray) -> np.ndarray:
    x_c, z_c = link.crossing(vehicle.lateral_offset)
    front = _front_positions(vehicle, t)
    behind = vehicle.sign * (front - x_c)  # distance of the crossing behind the front
    edges = np.cumsum([0.0] + [seg for seg, _ in vehicle.silhouette])
    heights = np.array([h for _, h in vehicle.silhouette])
    idx = np.searchsorted(edges, behind, side="right") - 1
    on_body = (behind >= 0) & (behind < vehicle.length) & (t >= vehicle.entry_time)
    idx = np.clip(idx, 0, heights.size - 1)
    return np.where(on_body, np.maximum(0.0, heights[idx] - z_c), 0.0)


def occlusion_depth(link: LinkGeometry, vehicle: VehicleProfile, t: float) -> float:
    """Penetration (m) of the vehicle body above the link's line of sight at time ``t``."""
    return float(_depths(link, vehicle, np.array([float(t)]))[0])


def attenuation_db(depth, model: ShadowingModel = ShadowingModel()):
    depth = np.asarray(depth, dtype=float)
    if np.any(depth < 0):
        raise ValueError("depth must be non-negative")
    out = model.a_max * -np.expm1(-depth / model.decay)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- synthesis


TAIL_TIME = 0.5


def pass_window(vehicle: VehicleProfile, config: DeploymentConfig, lead: float = 1.5, tail: float = TAIL_TIME):
    return max(0.0, vehicle.entry_time - lead), exit_time(vehicle, config) + tail


def synth_pass(
    vehicle: VehicleProfile,
    links: Sequence[LinkGeometry],
    config: DeploymentConfig,
    schedule: MacSchedule,
    noise: NoiseModel,
    seed,
    window: tuple[float, float] | None = None,
    shadowing: ShadowingModel = ShadowingModel(),
) -> list[RssiTrace]:
    """Synthesize one trace per link covering the whole pass.

    ``vehicle`` may be None for an empty-road recording (``window`` required).
    """
    schedule.check(config)
    if vehicle is None:
        if window is None:
            raise ValueError("an empty-road trace needs an explicit window")
        t0, t1 = window
    else:
        auto = pass_window(vehicle, config)
        t0, t1 = window if window is not None else auto
        if t0 > vehicle.entry_time or t1 < exit_time(vehicle, config):
            raise ValueError(
                f"window [{t0}, {t1}] does not contain the pass "
                f"[{vehicle.entry_time}, {exit_time(vehicle, config)}]"
            )
    if t0 < 0 or t1 <= t0:
        raise ValueError("invalid window")

    r0 = math.ceil(t0 * 1e6 / schedule.round_us)
    r1 = math.floor(t1 * 1e6 / schedule.round_us)
    rounds = np.arange(r0, r1 + 1, dtype=np.int64)
    rng = np.random.default_rng(seed)
    jitter = rng.normal(0.0, 1.0, size=(rounds.size, len(links))) * noise.sigma

    traces = []
    for j, link in enumerate(links):
        us = rounds * schedule.round_us + schedule.slot_of(link.tx_index) * schedule.slot_us
        times = us / 1e6
        idle = idle_rssi(link, config)
        level = np.full(times.shape, idle)
        if vehicle is not None:
            level = level - attenuation_db(_depths(link, vehicle, times), shadowing)
        traces.append(RssiTrace(link.link_id, times, noise.quantize(level + jitter[:, j]), idle))
    return traces


def pass_seed(run_seed: int, vehicle_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([run_seed, vehicle_id])


def peak_attenuation(vehicle: VehicleProfile, antenna_height: float, model: ShadowingModel = ShadowingModel()) -> float:
    """Deepest attenuation (dB) the vehicle imposes on a level link at ``antenna_height``."""
    depth = max(max(0.0, h - antenna_height) for _, h in vehicle.silhouette)
    return attenuation_db(depth, model)


def class_attenuation_spread(
    fleet: Iterable[VehicleProfile],
    antenna_heights: Sequence[float],
    model: ShadowingModel = ShadowingModel(),
) -> list[dict]:
    """Per antenna height: per-class mean peak attenuation and the spread between classes."""
    fleet = list(fleet)
    rows = []
    for h in antenna_heights:
        by_class = defaultdict(list)
        for v in fleet:
            by_class[v.class_label].append(peak_attenuation(v, h, model))
        means = {c.value: float(np.mean(vals)) for c, vals in by_class.items()}
        rows.append(
            {"antenna_height": h, "class_means": means, "spread": max(means.values()) - min(means.values())}
        )
    return rows


# --------------------------------------------------------------------------- files


def iter_rows(traces: Sequence[RssiTrace]) -> Iterator[RssiSample]:
    """Samples of all links merged in (time, link_id) order."""
    rows = []
    for tr in traces:
        rows.extend(zip(tr.times.tolist(), [tr.link_id] * len(tr), tr.rssi.tolist()))
    rows.sort(key=lambda r: (r[0], r[1]))
    for t, lid, r in rows:
        yield RssiSample(t, lid, r)


def format_row(sample: RssiSample) -> str:
    return f"{sample.time:.6f},{sample.link_id},{sample.rssi}"


def write_trace_file(path, traces: Sequence[RssiTrace]) -> None:
    with open(path, "w") as fh:
        fh.write(TRACE_FORMAT + "\n" + TRACE_COLUMNS + "\n")
        for s in iter_rows(traces):
            fh.write(format_row(s) + "\n")


def parse_row(line: str, path="<stream>", line_no: int = 0) -> RssiSample:
    parts = line.strip().split(",")
    if len(parts) != 3:
        raise TraceFormatError(path, line_no, f"expected 3 columns, got {len(parts)}")
    try:
        t = float(parts[0])
        lid = int(parts[1])
        r = int(parts[2])
    except ValueError as exc:
        raise TraceFormatError(path, line_no, f"bad value ({exc})") from None
    if not math.isfinite(t) or t < 0:
        raise TraceFormatError(path, line_no, "time must be finite and non-negative")
    if not 1 <= lid <= 9:
        raise TraceFormatError(path, line_no, f"link_id {lid} out of range")
    return RssiSample(t, lid, r)


def iter_trace_rows(lines: Iterable[str], path="<stream>", first_line: int = 1) -> Iterator[RssiSample]:
    """Parse trace rows, skipping the version line and column header.

    ``first_line`` is the file line number of the first item in ``lines``.
    """
    for no, line in enumerate(lines, start=first_line):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            if no == 1 and text != TRACE_FORMAT:
                raise TraceFormatError(path, no, f"unsupported trace format {text!r}")
            continue
        if text == TRACE_COLUMNS:
            continue
        yield parse_row(text, path, no)


def read_trace_file(path) -> list[RssiTrace]:
    per_link: dict[int, tuple[list, list]] = {i: ([], []) for i in range(1, 10)}
    with open(path) as fh:
        first = fh.readline()
        if first.strip() != TRACE_FORMAT:
            raise TraceFormatError(path, 1, "missing trace version header")
        for no, line in enumerate(fh, start=2):
            text = line.strip()
            if not text or text.startswith("#") or text == TRACE_COLUMNS:
                continue
            s = parse_row(text, path, no)
            ts, rs = per_link[s.link_id]
            if ts and s.time <= ts[-1]:
                raise TraceFormatError(path, no, f"non-increasing time on link {s.link_id} at {s.time}")
            ts.append(s.time)
            rs.append(s.rssi)
    return [RssiTrace(lid, np.array(ts), np.array(rs, dtype=np.int64)) for lid, (ts, rs) in per_link.items()]


def write_sidecar(path, vehicle: VehicleProfile, traces: Sequence[RssiTrace], trace_file: str) -> None:
    meta = {
        "trace_file": trace_file,
        "vehicle": vehicle.to_record(),
        "idle_level_true": {str(tr.link_id): tr.idle_level_true for tr in traces},
    }
    Path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_sidecar(path) -> dict:
    return json.loads(Path(path).read_text())


__all__ = [
    "DIRECT_LINKS",
    "MacSchedule",
    "NoiseModel",
    "RssiSample",
    "RssiTrace",
    "ShadowingModel",
    "TraceFormatError",
    "attenuation_db",
    "class_attenuation_spread",
    "free_space_path_loss",
    "idle_rssi",
    "occlusion_depth",
    "pass_seed",
    "peak_attenuation",
    "read_trace_file",
    "synth_pass",
    "write_trace_file",
]
