import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from radiofp.channel import NoiseModel, RssiTrace, synth_pass
from radiofp.features import (
    AttenuationEvent,
    DegenerateEventError,
    DetectorConfig,
    IncompletePassError,
    UnusableTraceError,
    VelocityError,
    assemble_features,
    build_event,
    bulge,
    count_deep_minima,
    detect_event,
    estimate_idle,
    estimate_length,
    estimate_velocity,
    extract_pass,
    raw_vector,
)
from radiofp.scenario import Direction

from .helpers import make_car, make_truck

IDLE = -54


def trace_of(values, link_id=1, dt=0.009):
    values = np.asarray(values, dtype=np.int64)
    return RssiTrace(link_id, np.arange(values.size) * dt, values)


def event_at(link_id, t0, duration=0.45, depth=20):
    times = t0 + np.arange(11) * duration / 10
    vals = np.array([0, -8, -12, -16, -19, -depth, -19, -16, -12, -8, 0]) + IDLE
    return build_event(link_id, times, vals, IDLE)


def synth(vehicle, setup, seed=0):
    return synth_pass(vehicle, setup.links, setup.config, setup.mac, setup.noise, seed)


class TestEstimateIdle:
    def test_constant(self):
        assert estimate_idle(trace_of([-54] * 200)) == -54

    def test_median_of_window(self):
        tr = RssiTrace(1, np.array([0.0, 0.2, 0.4, 0.6, 0.8, 1.2]), np.array([-54, -54, -53, -55, -54, -90]))
        assert estimate_idle(tr) == -54

    def test_zero_noise_trace(self, quiet_setup):
        tr = synth(make_car(), quiet_setup)
        for t in tr:
            # the generator's idle level after the receiver's 1 dB quantization
            assert estimate_idle(t) == NoiseModel(0.0).quantize(t.idle_level_true)

    def test_short_trace(self):
        with pytest.raises(UnusableTraceError):
            estimate_idle(trace_of([-54] * 20))


class TestDetectEvent:
    def test_no_vehicle(self):
        assert detect_event(trace_of([-54] * 300), -54) is None

    def test_single_v(self):
        # steep recovery: the first recovered sample is back at idle
        dip = [-54, -64, -69, -74, -69, -64, -54]
        ev = detect_event(trace_of([-54] * 120 + dip + [-54] * 20), -54)
        assert (ev.deep_minima_count, ev.magnitude, ev.local_magnitude) == (1, 20, 20)

    def test_w_shape(self):
        dip = [-54, -62, -68, -74, -66, -60, -66, -71, -64, -58, -54]
        values = [-54] * 120 + dip + [-54] * 20
        ev = detect_event(trace_of(values), -54)
        # brute force: strict local minima of the event samples, 0.8 * m = 16 dB below idle
        s = list(ev.values)
        mins = [s[i] for i in range(1, len(s) - 1) if s[i] < s[i - 1] and s[i] < s[i + 1]]
        assert mins == [-74, -71]
        assert ev.magnitude == 20
        assert ev.deep_minima_count == sum(-54 - x >= 16 for x in mins) == 2

    def test_hysteresis_span(self):
        values = [-54] * 120 + [-70] * 10 + [-54] * 10
        ev = detect_event(trace_of(values), -54)
        assert ev.t_start == pytest.approx(120 * 0.009)
        # onset to the first recovered sample
        assert ev.t_end == pytest.approx(130 * 0.009)
        assert ev.values.size == 11

    def test_short_glitch_ignored(self):
        values = [-54] * 120 + [-70, -70] + [-54] * 10
        assert detect_event(trace_of(values), -54) is None

    def test_truncated(self):
        with pytest.raises(IncompletePassError):
            detect_event(trace_of([-54] * 120 + [-70] * 10), -54)

    def test_plateau_minima_merge(self):
        assert count_deep_minima(np.array([-54, -70, -70, -70, -54]), -54, 16) == 1


def kurtosis_oracle(xs):
    n = len(xs)
    mu = sum(xs) / n
    var = sum((x - mu) ** 2 for x in xs) / n
    return sum((x - mu) ** 4 for x in xs) / n / var**2


class TestBulge:
    def test_hand_value(self):
        assert bulge([-50, -50, -70, -50, -50]) == pytest.approx(3.25, abs=1e-12)

    def test_two_points(self):
        assert bulge([3.0, -7.0]) == pytest.approx(1.0)

    def test_constant(self):
        with pytest.raises(DegenerateEventError):
            bulge([-54, -54, -54])

    @given(
        st.lists(st.integers(-100, -20), min_size=2, max_size=80),
        st.floats(0.1, 10),
        st.floats(-50, 50),
    )
    def test_affine_invariance_and_bound(self, xs, a, c):
        assume(len(set(xs)) > 1)
        x = np.array(xs, dtype=float)
        b = bulge(x)
        assert b >= 1 - 1e-12
        assert bulge(a * x + c) == pytest.approx(b, rel=1e-9)
        assert b == pytest.approx(kurtosis_oracle(xs), rel=1e-9)


class TestVelocityAndLength:
    def test_constant_velocity(self, links):
        ev = {1: event_at(1, 0.0), 5: event_at(5, 0.5), 9: event_at(9, 1.0)}
        v, d = estimate_velocity(ev, links)
        assert v == pytest.approx(10.0) and d is Direction.FORWARD

    def test_reverse(self, links):
        ev = {1: event_at(1, 1.0), 5: event_at(5, 0.5), 9: event_at(9, 0.0)}
        v, d = estimate_velocity(ev, links)
        assert v == pytest.approx(10.0) and d is Direction.REVERSE

    def test_zero_delay(self, links):
        ev = {1: event_at(1, 0.0), 5: event_at(5, 0.0), 9: event_at(9, 1.0)}
        with pytest.raises(VelocityError):
            estimate_velocity(ev, links)

    def test_missing_direct(self, links):
        with pytest.raises(IncompletePassError):
            assemble_features({1: event_at(1, 0.0), 5: event_at(5, 0.5)}, links)

    def test_length(self):
        assert estimate_length(10, [0.45] * 3) == pytest.approx(4.5)
        assert estimate_length(20, [0.45] * 3) == pytest.approx(9.0)

    def test_accelerating_pass(self, quiet_setup, links):
        # oracle: onset of each direct link from the kinematics of the cabin's leading edge
        v0, a = 12.0, 1.5
        car = make_car(v=v0, a=a)
        onsets = []
        for x in (0.0, 5.0, 10.0):
            s = x + 0.5 + 1.125  # distance the front travels until the cabin reaches x
            onsets.append(car.entry_time + (-v0 + np.sqrt(v0 * v0 + 2 * a * s)) / a)
        expected = np.mean([5 / (onsets[1] - onsets[0]), 10 / (onsets[2] - onsets[0]), 5 / (onsets[2] - onsets[1])])
        px = extract_pass(synth(car, quiet_setup), links)
        assert px.features.v_est == pytest.approx(expected, rel=0.02)


class TestAssemble:
    def test_seven_finite(self, quiet_setup, links):
        fv = extract_pass(synth(make_car(), quiet_setup), links).features
        arr = fv.as_array()
        assert arr.shape == (7,) and np.all(np.isfinite(arr))

    def test_offset_invariance(self, noisy_setup, links):
        traces = synth(make_truck(), noisy_setup, seed=9)
        base = extract_pass(traces, links).features.as_array()
        for c in (-17, 3, 40):
            shifted = extract_pass([t.shifted(c) for t in traces], links).features.as_array()
            assert np.array_equal(base, shifted)

    def test_mean_mode(self, quiet_setup, links):
        px = extract_pass(synth(make_car(), quiet_setup), links, reference_link=None)
        direct = [px.events[i] for i in (1, 5, 9)]
        assert px.features.links == (1, 5, 9)
        assert px.features.m == pytest.approx(np.mean([e.magnitude for e in direct]))

    def test_link_features_share_speed(self, quiet_setup, links):
        px = extract_pass(synth(make_car(), quiet_setup), links)
        f2 = px.link_features(2, links)
        assert f2.v_est == px.features.v_est and f2.links == (2,)


class TestRawVector:
    def test_identity_for_64_samples(self):
        vals = np.concatenate([np.linspace(-54, -80, 32), np.linspace(-80, -54, 32)]).round().astype(np.int64)
        ev = build_event(1, np.arange(64) * 0.009, vals, -54)
        rv = raw_vector(ev)
        z = (vals - vals.mean()) / vals.std()
        assert np.allclose(rv.values, z, atol=1e-12)

    def test_time_dilation(self):
        vals = np.array([-54, -60, -72, -66, -75, -60, -54])
        a = raw_vector(build_event(1, np.arange(7) * 0.009, vals, -54))
        b = raw_vector(build_event(1, 3.0 + np.arange(7) * 0.018, vals, -54))
        assert np.allclose(a.values, b.values, atol=1e-12)

    @given(st.lists(st.integers(-90, -40), min_size=2, max_size=200))
    def test_normalized(self, xs):
        assume(len(set(xs)) > 1)
        ev = build_event(1, np.arange(len(xs)) * 0.009, np.array(xs), -40)
        rv = raw_vector(ev)
        assert rv.values.size == 64
        if np.ptp(rv.values) > 0:
            assert abs(rv.values.mean()) < 1e-9
            assert rv.values.std() == pytest.approx(1.0, abs=1e-9)

    def test_constant_rejected(self):
        times, vals = np.arange(5) * 0.009, np.array([-60] * 5)
        with pytest.raises(DegenerateEventError):
            build_event(1, times, vals, -54)
        ev = AttenuationEvent(1, 0.0, times[-1], -54, -60, 6, 0, 1, 1.0, times, vals)
        with pytest.raises(DegenerateEventError):
            raw_vector(ev)


def test_detector_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(drop_threshold=0)
    with pytest.raises(ValueError):
        DetectorConfig(min_consecutive=0)
    with pytest.raises(ValueError):
        DetectorConfig(deep_minima_factor=0.7)


def test_event_invariants(noisy_setup, links, config):
    from radiofp.scenario import FleetSpec, sample_fleet

    for v in sample_fleet(FleetSpec(rng_seed=8, reverse_fraction=0.3), 40, config):
        px = extract_pass(synth(v, noisy_setup, seed=v.vehicle_id), links)
        assert px.features.direction is v.direction
        for ev in px.events.values():
            if ev is None:
                continue
            assert ev.t_end > ev.t_start
            assert ev.magnitude >= 0 and ev.local_magnitude >= 0
            assert ev.deep_minima_count >= 1
            assert ev.bulge >= 1
