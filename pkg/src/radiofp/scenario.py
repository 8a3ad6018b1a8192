"""Deployment geometry and ground-truth vehicle fleets.

Three transmitter posts stand on one side of the road (y = 0) and three
receiver posts opposite them (y = road_width).  Link ``i`` joins TX ``tx``
with RX ``rx`` where ``i = 3 * (tx - 1) + rx``, so links 1, 5 and 9 are the
perpendicular ("direct") ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Mapping

import numpy as np


class VehicleClass(str, Enum):
    CAR = "car"
    TRUCK = "truck"


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


# front of the vehicle sits this far outside the outermost post at entry_time
ENTRY_MARGIN = 0.5


@dataclass(frozen=True)
class DeploymentConfig:
    tx_power: float = 2.5  # dBm
    carrier_frequency: float = 2.4e9  # Hz
    antenna_height: float = 1.0  # m
    road_width: float = 7.0  # m, TX to RX lateral separation
    post_spacing: float = 5.0  # m
    lane_offset: float = 3.5  # m from the TX side
    sample_rounds_per_second: float = 1.0 / 0.009

    def __post_init__(self):
        if self.antenna_height <= 0:
            raise ValueError("antenna_height must be positive")
        if self.road_width <= 0:
            raise ValueError("road_width must be positive")
        if self.post_spacing <= 0:
            raise ValueError("post_spacing must be positive")
        if not 0 < self.lane_offset < self.road_width:
            raise ValueError("lane_offset must lie strictly between the post rows")
        if self.sample_rounds_per_second <= 0:
            raise ValueError("sample_rounds_per_second must be positive")

    @property
    def round_duration(self) -> float:
        return 1.0 / self.sample_rounds_per_second


@dataclass(frozen=True)
class LinkGeometry:
    link_id: int
    tx_position: tuple[float, float, float]
    rx_position: tuple[float, float, float]
    is_direct: bool
    longitudinal_ref: float

    @property
    def tx_index(self) -> int:
        return (self.link_id - 1) // 3 + 1

    @property
    def rx_index(self) -> int:
        return (self.link_id - 1) % 3 + 1

    @property
    def length(self) -> float:
        return math.dist(self.tx_position, self.rx_position)

    def crossing(self, y: float) -> tuple[float, float]:
        """(x, z) of the line-of-sight segment where it crosses the plane at lateral ``y``."""
        (x0, y0, z0), (x1, y1, z1) = self.tx_position, self.rx_position
        frac = (y - y0) / (y1 - y0)
        return x0 + (x1 - x0) * frac, z0 + (z1 - z0) * frac


def link_id_for(tx_index: int, rx_index: int) -> int:
    return 3 * (tx_index - 1) + rx_index


DIRECT_LINKS = (1, 5, 9)


def build_links(config: DeploymentConfig) -> list[LinkGeometry]:
    s, w, h = config.post_spacing, config.road_width, config.antenna_height
    links = []
    for tx in (1, 2, 3):
        for rx in (1, 2, 3):
            tx_pos = ((tx - 1) * s, 0.0, h)
            rx_pos = ((rx - 1) * s, w, h)
            if tx == rx:
                # exact: no interpolation round-off for the perpendicular links
                ref = tx_pos[0]
            else:
                ref = tx_pos[0] + (rx_pos[0] - tx_pos[0]) * config.lane_offset / w
            links.append(
                LinkGeometry(
                    link_id=link_id_for(tx, rx),
                    tx_position=tx_pos,
                    rx_position=rx_pos,
                    is_direct=tx == rx,
                    longitudinal_ref=ref,
                )
            )
    return links


@dataclass(frozen=True)
class VehicleProfile:
    vehicle_id: int
    class_label: VehicleClass
    length: float
    silhouette: tuple[tuple[float, float], ...]  # (segment_length, height), front first
    lateral_offset: float
    entry_velocity: float
    acceleration: float = 0.0
    entry_time: float = 0.0
    direction: Direction = Direction.FORWARD
    entry_position: float = -ENTRY_MARGIN

    def __post_init__(self):
        object.__setattr__(self, "class_label", VehicleClass(self.class_label))
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "silhouette", tuple((float(a), float(b)) for a, b in self.silhouette))
        if not self.silhouette:
            raise ValueError("silhouette needs at least one segment")
        if any(seg <= 0 for seg, _ in self.silhouette):
            raise ValueError("segment lengths must be positive")
        if any(h <= 0 for _, h in self.silhouette):
            raise ValueError("silhouette heights must be positive")
        if not math.isclose(sum(seg for seg, _ in self.silhouette), self.length, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("segment lengths must sum to the vehicle length")
        if self.entry_velocity <= 0:
            raise ValueError("entry_velocity must be positive")

    @property
    def sign(self) -> float:
        return 1.0 if self.direction is Direction.FORWARD else -1.0

    def height_at(self, u: float) -> float | None:
        """Body height at distance ``u`` behind the front, or None when off the body."""
        if u < 0 or u >= self.length:
            return None
        edge = 0.0
        for seg, h in self.silhouette:
            edge += seg
            if u < edge:
                return h
        return self.silhouette[-1][1]

    def time_to_travel(self, distance: float) -> float:
        """Seconds after entry_time until the front has advanced ``distance`` metres."""
        v, a = self.entry_velocity, self.acceleration
        if distance <= 0:
            return 0.0
        disc = v * v + 2.0 * a * distance
        if disc < 0:
            raise ValueError(f"vehicle {self.vehicle_id} stops before covering {distance} m")
        # rationalised root, stable for a -> 0
        return 2.0 * distance / (v + math.sqrt(disc))

    def to_record(self) -> dict[str, Any]:
        return {
            "vehicle_id": self.vehicle_id,
            "class": self.class_label.value,
            "length": self.length,
            "velocity": self.entry_velocity,
            "acceleration": self.acceleration,
            "direction": self.direction.value,
            "lateral_offset": self.lateral_offset,
            "entry_time": self.entry_time,
            "entry_position": self.entry_position,
            "silhouette": [list(s) for s in self.silhouette],
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "VehicleProfile":
        return cls(
            vehicle_id=int(rec["vehicle_id"]),
            class_label=rec["class"],
            length=float(rec["length"]),
            silhouette=tuple(tuple(s) for s in rec["silhouette"]),
            lateral_offset=float(rec["lateral_offset"]),
            entry_velocity=float(rec["velocity"]),
            acceleration=float(rec["acceleration"]),
            entry_time=float(rec["entry_time"]),
            direction=rec["direction"],
            entry_position=float(rec["entry_position"]),
        )


def position_at(vehicle: VehicleProfile, t: float) -> float:
    """x of the vehicle front at time ``t``."""
    if t < vehicle.entry_time:
        raise ValueError("t precedes entry_time")
    dt = t - vehicle.entry_time
    if vehicle.acceleration < 0:
        # halts rather than backing up
        dt = min(dt, -vehicle.entry_velocity / vehicle.acceleration)
    advance = vehicle.entry_velocity * dt + 0.5 * vehicle.acceleration * dt * dt
    return vehicle.entry_position + vehicle.sign * advance


def pass_distance(vehicle: VehicleProfile, config: DeploymentConfig) -> float:
    """Front travel from entry until the rear clears the far post row plus the margin."""
    return 2 * config.post_spacing + 2 * ENTRY_MARGIN + vehicle.length


def exit_time(vehicle: VehicleProfile, config: DeploymentConfig) -> float:
    return vehicle.entry_time + vehicle.time_to_travel(pass_distance(vehicle, config))


# --------------------------------------------------------------------------- fleets


@dataclass(frozen=True)
class Distribution:
    """Uniform on [a, b] or normal N(a, b^2); normals redraw outside [low, high]."""

    kind: str
    a: float
    b: float = 0.0
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "normal", "constant"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "uniform" and self.b < self.a:
            raise ValueError("uniform needs a <= b")
        if self.kind == "normal" and self.b < 0:
            raise ValueError("normal needs a non-negative standard deviation")
        lo, hi = self.support
        if lo > hi:
            raise ValueError("empty support")

    @classmethod
    def parse(cls, value: Any) -> "Distribution":
        if isinstance(value, Distribution):
            return value
        if isinstance(value, (int, float)):
            return cls("constant", float(value))
        value = dict(value)
        kind = value.pop("kind", "normal")
        if kind == "uniform":
            return cls("uniform", float(value["low"]), float(value["high"]))
        if kind == "constant":
            return cls("constant", float(value["value"]))
        return cls(
            "normal",
            float(value["mean"]),
            float(value["std"]),
            None if value.get("low") is None else float(value["low"]),
            None if value.get("high") is None else float(value["high"]),
        )

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "constant":
            return self.a, self.a
        if self.kind == "uniform":
            return self.a, self.b
        if self.b == 0:
            return self.a, self.a
        lo = -math.inf if self.low is None else self.low
        hi = math.inf if self.high is None else self.high
        return lo, hi

    def require_positive(self, name: str) -> None:
        if self.support[0] <= 0:
            raise ValueError(f"{name}: distribution can produce non-positive values (support {self.support})")

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return self.a
        if self.kind == "uniform":
            return float(rng.uniform(self.a, self.b))
        lo, hi = self.support
        for _ in range(10_000):
            x = float(rng.normal(self.a, self.b))
            if lo <= x <= hi:
                return x
        raise ValueError(f"could not draw within [{lo}, {hi}] from N({self.a}, {self.b}^2)")


@dataclass(frozen=True)
class ClassSpec:
    length: Distribution
    segment_fractions: tuple[float, ...]
    heights: tuple[Distribution, ...]
    velocity: Distribution
    acceleration: Distribution
    lateral_offset: Distribution

    def validate(self, name: str) -> None:
        if len(self.segment_fractions) != len(self.heights):
            raise ValueError(f"{name}: one height distribution per silhouette segment")
        if any(f <= 0 for f in self.segment_fractions) or not math.isclose(sum(self.segment_fractions), 1.0):
            raise ValueError(f"{name}: segment fractions must be positive and sum to 1")
        self.length.require_positive(f"{name}.length")
        self.velocity.require_positive(f"{name}.velocity")
        for i, h in enumerate(self.heights):
            h.require_positive(f"{name}.heights[{i}]")


def _n(mean, std, low, high):
    return Distribution("normal", mean, std, low, high)


DEFAULT_CAR = ClassSpec(
    length=_n(4.5, 0.3, 3.5, 5.5),
    segment_fractions=(0.25, 0.5, 0.25),
    heights=(_n(0.8, 0.05, 0.6, 0.95), _n(1.5, 0.1, 1.2, 1.9), _n(0.9, 0.05, 0.7, 0.98)),
    velocity=_n(14.0, 3.0, 5.0, 30.0),
    acceleration=Distribution("constant", 0.0),
    lateral_offset=_n(3.5, 0.3, 2.5, 4.5),
)

DEFAULT_TRUCK = ClassSpec(
    length=_n(12.0, 2.0, 7.0, 18.0),
    segment_fractions=(0.2, 0.8),
    heights=(_n(2.5, 0.15, 2.0, 3.0), _n(3.5, 0.2, 3.0, 4.0)),
    velocity=_n(12.0, 2.0, 5.0, 25.0),
    acceleration=Distribution("constant", 0.0),
    lateral_offset=_n(3.5, 0.3, 2.5, 4.5),
)


@dataclass(frozen=True)
class FleetSpec:
    class_mix: float = 0.3  # fraction of trucks
    car: ClassSpec = DEFAULT_CAR
    truck: ClassSpec = DEFAULT_TRUCK
    reverse_fraction: float = 0.0
    rng_seed: int = 0
    gap: float = 2.0  # idle seconds between consecutive passes

    def __post_init__(self):
        if not 0.0 <= self.class_mix <= 1.0:
            raise ValueError("class_mix must be in [0, 1]")
        if not 0.0 <= self.reverse_fraction <= 1.0:
            raise ValueError("reverse_fraction must be in [0, 1]")
        if self.gap <= 0:
            raise ValueError("gap must be positive")
        self.car.validate("car")
        self.truck.validate("truck")

    def for_class(self, label: VehicleClass) -> ClassSpec:
        return self.truck if label is VehicleClass.TRUCK else self.car

    def with_acceleration(self, dist: Distribution) -> "FleetSpec":
        return replace(self, car=replace(self.car, acceleration=dist), truck=replace(self.truck, acceleration=dist))


# lead-in before the first vehicle; must exceed the detector idle window
LEAD_TIME = 1.5
MIN_EXIT_SPEED = 1.0


def sample_fleet(spec: FleetSpec, n: int, config: DeploymentConfig | None = None) -> list[VehicleProfile]:
    """Draw ``n`` single-vehicle passes laid out back to back in time."""
    if n < 1:
        raise ValueError("n must be at least 1")
    config = config or DeploymentConfig()
    rng = np.random.default_rng(spec.rng_seed)
    far_edge = 2 * config.post_spacing + ENTRY_MARGIN
    fleet = []
    t = LEAD_TIME
    for vid in range(n):
        label = VehicleClass.TRUCK if rng.random() < spec.class_mix else VehicleClass.CAR
        cs = spec.for_class(label)
        length = cs.length.draw(rng)
        heights = [h.draw(rng) for h in cs.heights]
        segments = [f * length for f in cs.segment_fractions]
        # keep the sum exact
        segments[-1] = length - sum(segments[:-1])
        velocity = cs.velocity.draw(rng)
        lateral = cs.lateral_offset.draw(rng)
        if not 0 < lateral < config.road_width:
            raise ValueError("lateral_offset must stay between the post rows")
        distance = 2 * config.post_spacing + 2 * ENTRY_MARGIN + length
        for _ in range(1000):
            accel = cs.acceleration.draw(rng)
            if velocity**2 + 2 * accel * distance >= MIN_EXIT_SPEED**2:
                break
        else:
            raise ValueError("acceleration distribution stops vehicles inside the array")
        reverse = rng.random() < spec.reverse_fraction
        vehicle = VehicleProfile(
            vehicle_id=vid,
            class_label=label,
            length=length,
            silhouette=tuple(zip(segments, heights)),
            lateral_offset=lateral,
            entry_velocity=velocity,
            acceleration=accel,
            entry_time=t,
            direction=Direction.REVERSE if reverse else Direction.FORWARD,
            entry_position=far_edge if reverse else -ENTRY_MARGIN,
        )
        fleet.append(vehicle)
        t = exit_time(vehicle, config) + spec.gap + LEAD_TIME
    return fleet


# --------------------------------------------------------------------------- config files


def _class_from_mapping(raw: Mapping[str, Any], base: ClassSpec) -> ClassSpec:
    unknown = set(raw) - {"length", "velocity", "acceleration", "lateral_offset", "segment_fractions", "heights"}
    if unknown:
        raise ValueError(f"unknown keys {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for key in ("length", "velocity", "acceleration", "lateral_offset"):
        if key in raw:
            kw[key] = Distribution.parse(raw[key])
    if "segment_fractions" in raw:
        kw["segment_fractions"] = tuple(float(f) for f in raw["segment_fractions"])
    if "heights" in raw:
        kw["heights"] = tuple(Distribution.parse(h) for h in raw["heights"])
    return replace(base, **kw)


def load_config(path) -> tuple[DeploymentConfig, FleetSpec, dict[str, Any]]:
    """Read a YAML run configuration.

    Returns the deployment, the fleet spec and the remaining top-level sections
    (``channel``, ``detector`` ...) as plain dicts for the caller to interpret.
    """
    import yaml

    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError("config root must be a mapping")
    return config_from_mapping(raw)


def config_from_mapping(raw: Mapping[str, Any]) -> tuple[DeploymentConfig, FleetSpec, dict[str, Any]]:
    raw = dict(raw)
    dep_raw = dict(raw.pop("deployment", None) or {})
    try:
        # PyYAML reads exponent forms such as 2.4e9 as strings
        deployment = DeploymentConfig(**{k: float(v) for k, v in dep_raw.items()})
    except (TypeError, ValueError) as exc:
        raise ValueError(f"deployment: {exc}") from None
    fleet_raw = dict(raw.pop("fleet", None) or {})
    try:
        car = _class_from_mapping(fleet_raw.pop("car", {}) or {}, DEFAULT_CAR)
        truck = _class_from_mapping(fleet_raw.pop("truck", {}) or {}, DEFAULT_TRUCK)
        if "acceleration" in fleet_raw:
            acc = Distribution.parse(fleet_raw.pop("acceleration"))
            car, truck = replace(car, acceleration=acc), replace(truck, acceleration=acc)
        fleet = FleetSpec(car=car, truck=truck, **fleet_raw)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"fleet: {exc}") from None
    return deployment, fleet, raw


__all__ = [
    "DIRECT_LINKS",
    "ClassSpec",
    "DeploymentConfig",
    "Direction",
    "Distribution",
    "FleetSpec",
    "LinkGeometry",
    "VehicleClass",
    "VehicleProfile",
    "build_links",
    "exit_time",
    "load_config",
    "position_at",
    "sample_fleet",
]
