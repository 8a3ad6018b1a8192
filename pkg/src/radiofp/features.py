"""Attenuation-event detection and the per-pass feature vector.

An event is the stretch of a link's trace where RSSI sits more than
``drop_threshold`` dB below the idle level, entered and left with a
``min_consecutive``-sample hysteresis.  From the three direct links we get
the mean speed (from onset delays between posts), the vehicle length and the
link-local shape statistics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .channel import RssiTrace
from .scenario import DIRECT_LINKS, Direction, LinkGeometry

DEEP_MINIMA_FACTOR = 0.8
RAW_LENGTH = 64


class FeatureError(ValueError):
    """Base class for traces the feature extractor cannot use."""

    kind = "feature error"


class UnusableTraceError(FeatureError):
    kind = "unusable trace"


class IncompletePassError(FeatureError):
    kind = "incomplete pass"


class DegenerateEventError(FeatureError):
    kind = "degenerate event"


class VelocityError(FeatureError):
    kind = "velocity estimate failed"


@dataclass(frozen=True)
class DetectorConfig:
    drop_threshold: float = 6.0  # dB
    min_consecutive: int = 3
    idle_window: float = 1.0  # s
    deep_minima_factor: float = DEEP_MINIMA_FACTOR

    def __post_init__(self):
        if self.drop_threshold <= 0:
            raise ValueError("drop_threshold must be positive")
        if self.min_consecutive < 1:
            raise ValueError("min_consecutive must be at least 1")
        if self.idle_window <= 0:
            raise ValueError("idle_window must be positive")
        if self.deep_minima_factor != DEEP_MINIMA_FACTOR:
            raise ValueError("deep_minima_factor is fixed at 0.8")


@dataclass(frozen=True, eq=False)
class AttenuationEvent:
    link_id: int
    t_start: float
    t_end: float
    idle_level: float
    min_rssi: int
    magnitude: float
    local_magnitude: float
    deep_minima_count: int
    bulge: float
    times: np.ndarray
    values: np.ndarray

    @property
    def t_drop(self) -> float:
        return self.t_end - self.t_start


FEATURE_NAMES = ("v_est", "l_est", "t_drop", "b", "m", "m_l", "n")


@dataclass(frozen=True)
class FeatureVector:
    v_est: float
    l_est: float
    t_drop: float
    b: float
    m: float
    m_l: float
    n: float
    direction: Direction = Direction.FORWARD
    vehicle_id: int | None = None
    links: tuple[int, ...] = DIRECT_LINKS

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise FeatureError("non-finite feature")
        if self.v_est <= 0 or self.l_est <= 0:
            raise FeatureError("velocity and length estimates must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in FEATURE_NAMES], dtype=float)


@dataclass(frozen=True, eq=False)
class RawVector:
    link_id: int
    values: np.ndarray
    vehicle_id: int | None = None


# --------------------------------------------------------------------------- per-link


def idle_median(values) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def estimate_idle(trace: RssiTrace, cfg: DetectorConfig = DetectorConfig()) -> float:
    """Median RSSI over the leading ``idle_window`` seconds."""
    if len(trace) == 0 or trace.times[-1] - trace.times[0] < cfg.idle_window:
        raise UnusableTraceError(f"link {trace.link_id}: trace shorter than the idle window")
    lead = trace.times < trace.times[0] + cfg.idle_window
    return idle_median(trace.rssi[lead])


def bulge(samples) -> float:
    """Fourth standardized moment with the population standard deviation."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DegenerateEventError("bulge needs at least two samples")
    centred = x - x.mean()
    std = np.sqrt(np.mean(centred**2))
    if std == 0:
        raise DegenerateEventError("constant event has no bulge")
    return float(np.mean((centred / std) ** 4))


def count_deep_minima(values, idle: float, magnitude: float) -> int:
    """Local minima (plateaus merged) at least ``0.8 * magnitude`` below idle."""
    values = np.asarray(values)
    keep = np.concatenate(([True], values[1:] != values[:-1]))
    runs = values[keep]
    left = np.concatenate(([np.inf], runs[:-1]))
    right = np.concatenate((runs[1:], [np.inf]))
    is_min = (runs < left) & (runs < right)
    deep = idle - runs >= DEEP_MINIMA_FACTOR * magnitude
    return int(np.count_nonzero(is_min & deep))


def build_event(link_id: int, times, values, idle: float) -> AttenuationEvent:
    """Statistics over the samples from onset to the first recovered sample (inclusive)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=np.int64)
    if times.size < 2:
        raise DegenerateEventError("event needs at least two samples")
    lo, hi = int(values.min()), int(values.max())
    m = idle - lo
    # shift by an integer before the moment so a global dB offset cancels exactly
    return AttenuationEvent(
        link_id=link_id,
        t_start=float(times[0]),
        t_end=float(times[-1]),
        idle_level=idle,
        min_rssi=lo,
        magnitude=m,
        local_magnitude=float(hi - lo),
        deep_minima_count=count_deep_minima(values, idle, m),
        bulge=bulge(values - lo),
        times=times,
        values=values,
    )


def _first_run(mask: np.ndarray, k: int, start: int = 0) -> int | None:
    run = 0
    for i in range(start, mask.size):
        if mask[i]:
            run += 1
            if run == k:
                return i - k + 1
        else:
            run = 0
    return None


def detect_event(trace: RssiTrace, idle: float, cfg: DetectorConfig = DetectorConfig()) -> AttenuationEvent | None:
    below = trace.rssi < idle - cfg.drop_threshold
    onset = _first_run(below, cfg.min_consecutive)
    if onset is None:
        return None
    end = _first_run(~below, cfg.min_consecutive, onset)
    if end is None:
        raise IncompletePassError(f"link {trace.link_id}: event runs past the end of the trace")
    return build_event(trace.link_id, trace.times[onset : end + 1], trace.rssi[onset : end + 1], idle)


# --------------------------------------------------------------------------- per-pass


def _direct_events(events: Mapping[int, AttenuationEvent]) -> list[AttenuationEvent]:
    missing = [lid for lid in DIRECT_LINKS if events.get(lid) is None]
    if missing:
        raise IncompletePassError(f"no event on direct link(s) {missing}")
    return [events[lid] for lid in DIRECT_LINKS]


def estimate_velocity(
    events: Mapping[int, AttenuationEvent], links: Sequence[LinkGeometry]
) -> tuple[float, Direction]:
    """Mean speed from onset delays between the three direct links, and travel direction."""
    e1, e5, e9 = _direct_events(events)
    ref = {l.link_id: l.longitudinal_ref for l in links}
    t1, t5, t9 = e1.t_start, e5.t_start, e9.t_start
    if t1 < t5 < t9:
        direction = Direction.FORWARD
    elif t1 > t5 > t9:
        direction = Direction.REVERSE
    else:
        raise VelocityError(f"direct-link onsets not strictly ordered: {t1}, {t5}, {t9}")
    speeds = []
    for (a, ta), (b, tb) in (((1, t1), (5, t5)), ((1, t1), (9, t9)), ((5, t5), (9, t9))):
        dt = abs(tb - ta)
        if dt == 0:
            raise VelocityError(f"zero onset delay between links {a} and {b}")
        speeds.append(abs(ref[b] - ref[a]) / dt)
    return sum(speeds) / 3, direction


def estimate_length(v_est: float, t_drops: Sequence[float]) -> float:
    if v_est <= 0:
        raise ValueError("v_est must be positive")
    if len(t_drops) != 3:
        raise ValueError("need the three direct-link durations")
    return v_est / 3 * sum(t_drops)


def assemble_features(
    events: Mapping[int, AttenuationEvent],
    links: Sequence[LinkGeometry],
    reference_link: int | None = 1,
    vehicle_id: int | None = None,
) -> FeatureVector:
    """Build the feature vector.

    Link-local scalars come from ``reference_link``; pass ``None`` to average
    them over the three direct links instead.
    """
    direct = _direct_events(events)
    v, direction = estimate_velocity(events, links)
    length = estimate_length(v, [e.t_drop for e in direct])
    if reference_link is None:
        chosen, used = direct, DIRECT_LINKS
    else:
        ev = events.get(reference_link)
        if ev is None:
            raise IncompletePassError(f"no event on reference link {reference_link}")
        chosen, used = [ev], (reference_link,)
    k = len(chosen)
    return FeatureVector(
        v_est=v,
        l_est=length,
        t_drop=sum(e.t_drop for e in chosen) / k,
        b=sum(e.bulge for e in chosen) / k,
        m=sum(e.magnitude for e in chosen) / k,
        m_l=sum(e.local_magnitude for e in chosen) / k,
        n=sum(e.deep_minima_count for e in chosen) / k,
        direction=direction,
        vehicle_id=vehicle_id,
        links=used,
    )


def raw_vector(event: AttenuationEvent, length: int = RAW_LENGTH, vehicle_id: int | None = None) -> RawVector:
    """Event resampled onto ``length`` uniform points and z-normalized."""
    if event.times.size < 2:
        raise DegenerateEventError("event needs at least two samples")
    span = event.t_end - event.t_start
    u = (event.times - event.t_start) / span
    grid = np.linspace(0.0, 1.0, length)
    vals = np.interp(grid, u, (event.values - event.values.min()).astype(float))
    centred = vals - vals.mean()
    std = np.sqrt(np.mean(centred**2))
    if std == 0:
        raise DegenerateEventError("constant event cannot be normalized")
    return RawVector(event.link_id, centred / std, vehicle_id)


@dataclass(frozen=True)
class PassExtraction:
    vehicle_id: int | None
    events: dict[int, AttenuationEvent | None]
    features: FeatureVector
    raw: RawVector

    def link_features(self, link_id: int, links: Sequence[LinkGeometry]) -> FeatureVector | None:
        """Shared speed/length with the link-local scalars of ``link_id``."""
        if self.events.get(link_id) is None:
            return None
        return assemble_features(self.events, links, reference_link=link_id, vehicle_id=self.vehicle_id)


def detect_all(traces: Sequence[RssiTrace], cfg: DetectorConfig = DetectorConfig()) -> dict[int, AttenuationEvent | None]:
    events = {}
    for tr in traces:
        idle = estimate_idle(tr, cfg)
        events[tr.link_id] = detect_event(tr, idle, cfg)
    return events


def extract_pass(
    traces: Sequence[RssiTrace],
    links: Sequence[LinkGeometry],
    cfg: DetectorConfig = DetectorConfig(),
    vehicle_id: int | None = None,
    reference_link: int | None = 1,
    raw_length: int = RAW_LENGTH,
) -> PassExtraction:
    events = detect_all(traces, cfg)
    fv = assemble_features(events, links, reference_link, vehicle_id)
    raw_link = reference_link if reference_link is not None else DIRECT_LINKS[0]
    raw = raw_vector(events[raw_link], raw_length, vehicle_id)
    return PassExtraction(vehicle_id, events, fv, raw)
