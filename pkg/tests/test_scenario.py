import json
import math

import pytest
from hypothesis import given, strategies as st

from radiofp.scenario import (
    DIRECT_LINKS,
    DeploymentConfig,
    Direction,
    Distribution,
    FleetSpec,
    VehicleClass,
    VehicleProfile,
    build_links,
    exit_time,
    load_config,
    position_at,
    sample_fleet,
)

from .helpers import make_car


class TestBuildLinks:
    def test_direct_link_reference_is_post_position(self, links):
        assert links[0].link_id == 1
        assert links[0].longitudinal_ref == 0.0

    def test_cross_link_reference(self, links):
        # line (0,0) -> (5,7) at y = 3.5: x = 5 * 3.5 / 7
        assert links[1].longitudinal_ref == pytest.approx(2.5, abs=1e-12)

    def test_direct_flags(self, links):
        assert {l.link_id for l in links if l.is_direct} == {1, 5, 9}

    def test_numbering_and_heights(self, links, config):
        assert [l.link_id for l in links] == list(range(1, 10))
        for l in links:
            assert l.link_id == 3 * (l.tx_index - 1) + l.rx_index
            assert l.tx_position[2] == l.rx_position[2] == config.antenna_height
            assert l.tx_position[1] == 0.0 and l.rx_position[1] == config.road_width

    @given(
        spacing=st.floats(0.5, 50),
        width=st.floats(0.5, 50),
        frac=st.floats(0.01, 0.99),
        height=st.floats(0.05, 5),
    )
    def test_geometry_invariants(self, spacing, width, frac, height):
        cfg = DeploymentConfig(antenna_height=height, road_width=width, post_spacing=spacing, lane_offset=frac * width)
        links = build_links(cfg)
        assert len(links) == 9
        assert tuple(l.link_id for l in links if l.is_direct) == DIRECT_LINKS
        for l in links:
            if l.is_direct:
                assert l.longitudinal_ref == l.tx_position[0]
            lo, hi = sorted((l.tx_position[0], l.rx_position[0]))
            assert lo - 1e-9 <= l.longitudinal_ref <= hi + 1e-9

    @pytest.mark.parametrize(
        "kw",
        [
            {"antenna_height": 0},
            {"road_width": -1},
            {"post_spacing": 0},
            {"lane_offset": 0},
            {"lane_offset": 7.0},
        ],
    )
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            DeploymentConfig(**kw)

    def test_table_defaults(self):
        cfg = DeploymentConfig()
        assert (cfg.carrier_frequency, cfg.tx_power, cfg.antenna_height) == (2.4e9, 2.5, 1.0)
        assert (cfg.road_width, cfg.post_spacing) == (7.0, 5.0)


class TestPositionAt:
    def test_constant_speed(self):
        v = make_car(v=10, entry_time=0.0)
        assert position_at(v, 1.0) - position_at(v, 0.0) == pytest.approx(10.0)

    def test_acceleration(self):
        v = make_car(v=10, a=2, entry_time=0.0)
        assert position_at(v, 1.0) - position_at(v, 0.0) == pytest.approx(11.0)

    def test_reverse(self):
        v = make_car(v=10, direction="reverse", entry_time=0.0)
        assert position_at(v, 1.0) - position_at(v, 0.0) == pytest.approx(-10.0)

    def test_before_entry(self):
        with pytest.raises(ValueError):
            position_at(make_car(entry_time=1.0), 0.5)

    def test_decelerating_vehicle_halts(self):
        v = make_car(v=2, a=-2, entry_time=0.0)
        assert position_at(v, 5.0) == pytest.approx(position_at(v, 1.0))


class TestVehicleProfile:
    def test_segments_must_sum(self):
        with pytest.raises(ValueError):
            VehicleProfile(0, "car", 4.0, ((1.0, 1.0), (2.0, 1.0)), 3.5, 10.0)

    def test_positive_heights_and_speed(self):
        with pytest.raises(ValueError):
            VehicleProfile(0, "car", 2.0, ((1.0, 0.0), (1.0, 1.0)), 3.5, 10.0)
        with pytest.raises(ValueError):
            VehicleProfile(0, "car", 2.0, ((1.0, 1.0), (1.0, 1.0)), 3.5, 0.0)

    def test_record_round_trip(self):
        v = make_car(vid=7, a=0.3, direction="reverse")
        back = VehicleProfile.from_record(json.loads(json.dumps(v.to_record())))
        assert back == v


class TestFleet:
    def test_all_cars_when_mix_zero(self):
        fleet = sample_fleet(FleetSpec(class_mix=0.0, rng_seed=1), 10)
        assert len(fleet) == 10
        assert all(v.class_label is VehicleClass.CAR for v in fleet)

    def test_deterministic(self):
        spec = FleetSpec(rng_seed=5, reverse_fraction=0.5)
        assert sample_fleet(spec, 25) == sample_fleet(spec, 25)

    def test_different_seed_differs(self):
        assert sample_fleet(FleetSpec(rng_seed=1), 5) != sample_fleet(FleetSpec(rng_seed=2), 5)

    def test_truck_count_binomial(self):
        n, p = 3000, FleetSpec().class_mix
        fleet = sample_fleet(FleetSpec(rng_seed=3), n)
        trucks = sum(v.class_label is VehicleClass.TRUCK for v in fleet)
        assert abs(trucks - n * p) <= 3 * math.sqrt(n * p * (1 - p))

    def test_profiles_valid(self, config):
        fleet = sample_fleet(FleetSpec(rng_seed=9, reverse_fraction=0.5), 200, config)
        for v in fleet:
            assert math.isclose(sum(s for s, _ in v.silhouette), v.length)
            assert all(h > 0 for _, h in v.silhouette)
            assert v.entry_velocity > 0
            if v.direction is Direction.REVERSE:
                assert v.entry_position > 2 * config.post_spacing
            else:
                assert v.entry_position < 0

    def test_passes_do_not_overlap(self, config):
        fleet = sample_fleet(FleetSpec(rng_seed=2), 30, config)
        for a, b in zip(fleet, fleet[1:]):
            assert exit_time(a, config) < b.entry_time

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_fleet(FleetSpec(), 0)

    def test_rejects_non_positive_support(self):
        from dataclasses import replace

        from radiofp.scenario import DEFAULT_CAR

        with pytest.raises(ValueError):
            FleetSpec(car=replace(DEFAULT_CAR, length=Distribution("normal", 4.5, 0.3)))
        with pytest.raises(ValueError):
            FleetSpec(car=replace(DEFAULT_CAR, velocity=Distribution("uniform", -1.0, 10.0)))

    def test_acceleration_keeps_vehicles_moving(self, config):
        spec = FleetSpec(rng_seed=4).with_acceleration(Distribution("normal", 0.0, 3.0))
        for v in sample_fleet(spec, 200, config):
            assert v.time_to_travel(2 * config.post_spacing + 1 + v.length) > 0


def test_load_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "deployment:\n  antenna_height: 1.5\n"
        "fleet:\n  class_mix: 0.5\n  acceleration: {kind: normal, mean: 0, std: 1}\n"
        "  car:\n    velocity: {kind: uniform, low: 8, high: 20}\n"
        "detector:\n  drop_threshold: 5\n"
    )
    deployment, fleet, rest = load_config(path)
    assert deployment.antenna_height == 1.5
    assert fleet.class_mix == 0.5
    assert fleet.car.velocity == Distribution("uniform", 8.0, 20.0)
    assert fleet.truck.acceleration.kind == "normal"
    assert rest == {"detector": {"drop_threshold": 5}}


def test_example_config_matches_defaults():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / "example.yaml"
    deployment, fleet, rest = load_config(path)
    assert deployment == DeploymentConfig()
    assert fleet == FleetSpec()
    assert set(rest) == {"channel", "detector"}


def test_exponent_floats_in_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("deployment:\n  carrier_frequency: 5.8e9\n")
    assert load_config(path)[0].carrier_frequency == 5.8e9


@pytest.mark.parametrize("text", ["fleet:\n  bogus: 1\n", "fleet:\n  car:\n    lenght: [normal, 4, 1]\n"])
def test_unknown_fleet_keys_rejected(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(ValueError, match="fleet"):
        load_config(p)
