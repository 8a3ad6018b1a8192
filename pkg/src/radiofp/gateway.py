"""Online pass detection and classification over a merged RSSI stream.

The gateway sees samples from all nine links interleaved in time order.  Each
link runs the same hysteresis detector as the batch extractor; when the third
direct-link event closes, the pass's features are assembled and classified.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .channel import RssiSample
from .features import (
    DetectorConfig,
    FeatureError,
    FeatureVector,
    assemble_features,
    build_event,
    idle_median,
    raw_vector,
    AttenuationEvent,
)
from .learn.dataset import Representation, decode_label
from .learn.models import TrainedModel
from .scenario import DIRECT_LINKS, Direction, LinkGeometry


class StreamOrderError(ValueError):
    pass


class _Phase(Enum):
    QUIET = 0
    EVENT = 1


@dataclass
class _LinkDetector:
    """Per-link hysteresis state; buffers hold (time, rssi) pairs."""

    link_id: int
    cfg: DetectorConfig
    max_event_samples: int
    max_gap: float = np.inf
    idle: float | None = None
    window_start: float | None = None
    window: list = field(default_factory=list)
    window_open: bool = True
    phase: _Phase = _Phase.QUIET
    run: list = field(default_factory=list)  # pending below-threshold run while quiet
    event: list = field(default_factory=list)
    recovered: int = 0
    last_time: float = -np.inf

    def buffered(self) -> int:
        return len(self.window) + len(self.run) + len(self.event)

    def push(self, t: float, r: int) -> list:
        """Feed one sample; returns ``("onset", t)`` / ``("event", AttenuationEvent)`` / ``("aborted", reason)`` items."""
        out = []
        if t - self.last_time > self.max_gap:
            out += self._restart(t)
        self.last_time = t
        if self.window_open:
            if self.window_start is None:
                self.window_start = t
            if t < self.window_start + self.cfg.idle_window:
                self.window.append((t, r))
                if self.idle is not None:
                    out += self._detect(t, r)
                return out
            fresh = idle_median([v for _, v in self.window])
            replay = self.window if self.idle is None else []
            self.idle = fresh
            self.window = []
            self.window_open = False
            for tt, rr in replay:
                out += self._detect(tt, rr)
        out += self._detect(t, r)
        return out

    def _restart(self, t: float) -> list:
        # missing samples make the idle estimate stale: start over as on a fresh recording
        out = [("aborted", "gap in the sample stream")] if self.phase is _Phase.EVENT else []
        self.idle = None
        self.window_start = t
        self.window = []
        self.window_open = True
        self.phase = _Phase.QUIET
        self.run = []
        self.event = []
        self.recovered = 0
        return out

    def _close_window(self):
        # an onset ends the quiet period; a partial refill is discarded
        self.window_open = False
        self.window = []

    def _detect(self, t: float, r: int) -> list:
        cfg = self.cfg
        below = r < self.idle - cfg.drop_threshold
        if self.phase is _Phase.QUIET:
            if below:
                self.run.append((t, r))
                if len(self.run) >= cfg.min_consecutive:
                    self.phase = _Phase.EVENT
                    self.event = self.run
                    self.run = []
                    self.recovered = 0
                    if self.window_open:
                        self._close_window()
                    return [("onset", self.event[0][0])]
            else:
                self.run = []
            return []

        self.event.append((t, r))
        if below:
            self.recovered = 0
        else:
            self.recovered += 1
            if self.recovered >= cfg.min_consecutive:
                end = len(self.event) - self.recovered
                samples = self.event[: end + 1]
                tail = self.event[end:]
                self.phase = _Phase.QUIET
                self.event = []
                self.recovered = 0
                # the quiet period (and the next idle window) starts at the first recovered sample
                self.window_open = True
                self.window_start = tail[0][0]
                self.window = list(tail)
                times = np.array([s[0] for s in samples])
                vals = np.array([s[1] for s in samples], dtype=np.int64)
                try:
                    return [("event", build_event(self.link_id, times, vals, self.idle))]
                except FeatureError as exc:
                    return [("aborted", str(exc))]
        if len(self.event) > self.max_event_samples:
            self.phase = _Phase.QUIET
            self.event = []
            self.recovered = 0
            self.window_open = True
            self.window_start = t
            self.window = []
            return [("aborted", "event exceeds the maximum event duration")]
        return []

    def open_event(self) -> bool:
        return self.phase is _Phase.EVENT


@dataclass(frozen=True)
class ClassificationRecord:
    pass_id: int
    timestamp: float
    label: str | None
    features: FeatureVector
    direction: Direction
    latency: float

    def to_json(self) -> str:
        f = self.features
        return json.dumps(
            {
                "pass_id": self.pass_id,
                "timestamp": self.timestamp,
                "label": self.label,
                "direction": self.direction.value,
                "features": {k: float(getattr(f, k)) for k in ("v_est", "l_est", "t_drop", "b", "m", "m_l", "n")},
                "latency": self.latency,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class PassDiagnostic:
    pass_id: int
    reason: str
    links_with_events: tuple[int, ...]

    def to_json(self) -> str:
        return json.dumps(
            {"pass_id": self.pass_id, "reason": self.reason, "links_with_events": list(self.links_with_events)},
            sort_keys=True,
        )


@dataclass
class _Pass:
    pass_id: int
    events: dict = field(default_factory=dict)
    open_links: set = field(default_factory=set)
    emitted: bool = False


class Gateway:
    """Streaming state for one array; mutate from a single thread."""

    def __init__(
        self,
        links: Sequence[LinkGeometry],
        model: TrainedModel | None = None,
        cfg: DetectorConfig = DetectorConfig(),
        round_duration: float = 0.009,
        reference_link: int | None = 1,
        max_event_duration: float = 10.0,
    ):
        self.links = list(links)
        self.model = model
        self.cfg = cfg
        self.round_duration = round_duration
        self.reference_link = reference_link
        max_samples = int(np.ceil(max_event_duration / round_duration)) + cfg.min_consecutive
        # a per-link silence longer than this is a break in the recording
        max_gap = 1.5 * round_duration
        self.detectors = {l.link_id: _LinkDetector(l.link_id, cfg, max_samples, max_gap) for l in self.links}
        self.current: _Pass | None = None
        self.next_pass_id = 0
        self.diagnostics: list[PassDiagnostic] = []
        self.cross_link_events: list[AttenuationEvent] = []
        self.last_time = -np.inf
        self.peak_buffered = 0

    def buffered_samples(self) -> int:
        return sum(d.buffered() for d in self.detectors.values())

    def push_sample(self, sample: RssiSample) -> list[ClassificationRecord]:
        det = self.detectors.get(sample.link_id)
        if det is None:
            raise ValueError(f"unknown link_id {sample.link_id}")
        if sample.time < self.last_time - self.round_duration:
            raise StreamOrderError(f"sample at {sample.time} s arrives after {self.last_time} s")
        if sample.time <= det.last_time:
            raise StreamOrderError(f"link {sample.link_id}: non-increasing time {sample.time}")
        self.last_time = max(self.last_time, sample.time)

        records = []
        for kind, payload in det.push(sample.time, sample.rssi):
            if kind == "onset":
                self._on_onset(sample.link_id)
            elif kind == "event":
                rec = self._on_event(payload, sample.time)
                if rec is not None:
                    records.append(rec)
            else:
                self._on_abort(sample.link_id, payload)
        self.peak_buffered = max(self.peak_buffered, self.buffered_samples())
        return records

    def _all_quiet(self) -> bool:
        return not any(d.open_event() for d in self.detectors.values())

    def _retire_current(self):
        p = self.current
        if p is not None and not p.emitted:
            self.diagnostics.append(
                PassDiagnostic(p.pass_id, "incomplete pass: direct-link trio not completed", tuple(sorted(p.events)))
            )
        self.current = None

    def _on_onset(self, link_id: int):
        p = self.current
        if p is not None and not p.open_links and (p.emitted or link_id in p.events):
            # every link is idle again and this one already fired: a new vehicle
            self._retire_current()
            p = None
        if p is None:
            if link_id not in DIRECT_LINKS:
                return  # cross-link activity outside a pass is ignored
            p = self.current = _Pass(self.next_pass_id)
            self.next_pass_id += 1
        p.open_links.add(link_id)

    def _on_abort(self, link_id: int, reason: str):
        p = self.current
        if p is None or link_id not in p.open_links:
            return
        p.open_links.discard(link_id)
        self.diagnostics.append(PassDiagnostic(p.pass_id, f"link {link_id}: {reason}", tuple(sorted(p.events))))
        if link_id in DIRECT_LINKS:
            # the trio can no longer complete; the diagnostic above stands for the pass
            p.emitted = True
        if p.emitted and not p.open_links:
            self.current = None

    def _on_event(self, event: AttenuationEvent, now: float) -> ClassificationRecord | None:
        p = self.current
        if p is None or event.link_id not in p.open_links:
            return None
        p.open_links.discard(event.link_id)
        p.events[event.link_id] = event
        if event.link_id not in DIRECT_LINKS:
            self.cross_link_events.append(event)
        record = None
        if not p.emitted and all(lid in p.events for lid in DIRECT_LINKS) and (
            self.reference_link is None or self.reference_link in p.events
        ):
            p.emitted = True
            try:
                fv = assemble_features(p.events, self.links, self.reference_link, vehicle_id=p.pass_id)
                label = self._classify(p, fv)
            except FeatureError as exc:
                self.diagnostics.append(PassDiagnostic(p.pass_id, f"{exc.kind}: {exc}", tuple(sorted(p.events))))
            else:
                closing = max(p.events[lid].t_end for lid in DIRECT_LINKS)
                record = ClassificationRecord(p.pass_id, now, label, fv, fv.direction, now - closing)
        if p.emitted and not p.open_links:
            self.current = None
        return record

    def _classify(self, p: _Pass, fv: FeatureVector) -> str | None:
        if self.model is None:
            return None
        if self.model.representation is Representation.RAW_DATA:
            ref = self.reference_link or DIRECT_LINKS[0]
            x = raw_vector(p.events[ref]).values
        else:
            x = fv.as_array()
        return decode_label(self.model.predict_codes(x[None, :])[0]).value

    def flush(self) -> list[PassDiagnostic]:
        """End of stream: report passes that never completed; returns all diagnostics so far."""
        p = self.current
        if p is not None and not p.emitted:
            open_direct = [lid for lid in DIRECT_LINKS if lid in p.open_links]
            reason = "incomplete pass: stream ended"
            if open_direct:
                reason += f" with open events on direct link(s) {open_direct}"
            self.diagnostics.append(PassDiagnostic(p.pass_id, reason, tuple(sorted(p.events))))
        self.current = None
        out, self.diagnostics = self.diagnostics, []
        return out


def run_stream(gateway: Gateway, samples) -> tuple[list[ClassificationRecord], list[PassDiagnostic]]:
    records = []
    for s in samples:
        records.extend(gateway.push_sample(s))
    return records, gateway.flush()
