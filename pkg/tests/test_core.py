"""Tests for the closed-form flight and the event-driven simulator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibroimpact import (
    Params,
    classify_orbit,
    classify_vzero,
    flight_propagate,
    simulate,
    stick_release_time,
)
from vibroimpact.core import EventKind, MotionRegime, State, next_event
from vibroimpact.errors import (
    EventBudgetExceeded,
    PermanentRest,
    ValidationError,
)

from reference_values import REFS

P = Params()
P_STAR = (0.1002798898441954, 0.5419433067664584)


class TestFlightPropagate:
    def test_matches_rk45_reference(self):
        x, v = flight_propagate(P, 0.0, 0.1003, 0.5419, +1, 0.5)
        x_ref, v_ref = REFS["flight_rk45"]
        assert abs(x - x_ref) < 1e-9
        assert abs(v - v_ref) < 1e-9

    def test_identity_at_start(self):
        x, v = flight_propagate(P, 0.3, 0.25, -0.7, -1, 0.3)
        assert x == 0.25 and v == -0.7

    def test_vectorized_matches_scalar(self):
        ts = np.linspace(0.0, 2.0, 7)
        xs, vs = flight_propagate(P, 0.0, 0.1, 0.5, +1, ts)
        for t, x, v in zip(ts, xs, vs):
            x1, v1 = flight_propagate(P, 0.0, 0.1, 0.5, +1, float(t))
            assert abs(x - x1) < 1e-14 and abs(v - v1) < 1e-14

    @given(
        t0=st.floats(-5.0, 5.0),
        x0=st.floats(-1.0, 1.0),
        v0=st.floats(-2.0, 2.0),
        s=st.sampled_from([-1, 1]),
        d1=st.floats(0.01, 2.0),
        d2=st.floats(0.01, 2.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_semigroup_property(self, t0, x0, v0, s, d1, d2):
        x1, v1 = flight_propagate(P, t0, x0, v0, s, t0 + d1)
        x2a, v2a = flight_propagate(P, t0 + d1, x1, v1, s, t0 + d1 + d2)
        x2b, v2b = flight_propagate(P, t0, x0, v0, s, t0 + d1 + d2)
        assert abs(x2a - x2b) < 1e-11
        assert abs(v2a - v2b) < 1e-11


class TestClassifyVzero:
    def test_transverse_positive(self):
        kind, sgn = classify_vzero(P, 0.0)   # F cos 0 = 1 > f
        assert kind == "transverse" and sgn == +1

    def test_transverse_negative(self):
        kind, sgn = classify_vzero(P, math.pi)
        assert kind == "transverse" and sgn == -1

    def test_stick_onset(self):
        kind, sgn = classify_vzero(P, math.pi / 2)   # forcing ~ 0 < f
        assert kind == "stick_onset" and sgn == 0

    def test_tangential_band(self):
        kind, _ = classify_vzero(P, math.acos(0.4))  # |F cos| = f to rounding
        assert kind == "tangential"


class TestStickRelease:
    def test_release_matches_brute_scan_first_window(self):
        t_rel, sgn = stick_release_time(P, 1.16)
        assert abs(t_rel - REFS["release_after_1p16"]) < 1e-6
        assert abs(t_rel - (math.pi - math.acos(0.4))) < 1e-12
        assert sgn == -1

    def test_release_matches_brute_scan_second_window(self):
        t_rel, sgn = stick_release_time(P, 4.31)
        assert abs(t_rel - REFS["release_after_4p31"]) < 1e-6
        assert abs(t_rel - (2.0 * math.pi - math.acos(0.4))) < 1e-12
        assert sgn == +1

    def test_permanent_rest(self):
        with pytest.raises(PermanentRest):
            stick_release_time(Params(F=0.3, f=0.4), 1.0)

    def test_exit_sign_matches_forcing(self):
        for t_on in (1.3, 1.9, 4.5, 5.0, 7.6):
            t_rel, sgn = stick_release_time(P, t_on)
            assert sgn == (1 if math.cos(t_rel) > 0 else -1)
            assert abs(abs(P.F * math.cos(P.omega * t_rel)) - P.f) < 1e-12


class TestSimulate:
    def test_reference_orbit_events(self):
        tr = simulate(P, P_STAR, P.T)
        kinds = [e.kind for e in tr.events]
        assert kinds == [EventKind.WALL_HIT_RIGHT, EventKind.WALL_HIT_LEFT]
        assert abs(tr.events[0].time - 1.0991729107) < 1e-8
        assert abs(tr.events[1].time - 3.5160904414) < 1e-8

    def test_reference_orbit_closes(self):
        tr = simulate(P, P_STAR, P.T)
        assert abs(tr.final_state.x - P_STAR[0]) < 1e-10
        assert abs(tr.final_state.v - P_STAR[1]) < 1e-10

    def test_energy_conserved_at_impacts(self):
        tr = simulate(P, (0.3, 0.9), 5 * P.T)
        for e in tr.events:
            if e.kind in (EventKind.WALL_HIT_RIGHT, EventKind.WALL_HIT_LEFT):
                de = 0.5 * e.state_after.v ** 2 - 0.5 * e.state_before.v ** 2
                assert abs(de) < 1e-12

    def test_speed_bound(self):
        z0 = (0.2, 1.1)
        tr = simulate(P, z0, 10 * P.T, sample_dt=0.01)
        bound = abs(z0[1]) + (P.F + P.f) * tr.samples[:, 0] + 1e-12
        assert np.all(np.abs(tr.samples[:, 2]) <= bound)

    def test_positions_stay_inside_walls(self):
        tr = simulate(P, (0.2, 1.1), 10 * P.T, sample_dt=0.01)
        assert np.all(tr.samples[:, 1] <= P.r + 1e-9)
        assert np.all(tr.samples[:, 1] >= P.l - 1e-9)

    def test_sample_cadence(self):
        tr = simulate(P, (0.1, 0.5), 1.0, sample_dt=0.125)
        expected = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0]
        assert np.allclose(tr.samples[:, 0], expected)

    def test_regime_intervals_contiguous(self):
        tr = simulate(Params(F=0.55), (0.0, 1.5), 2 * Params().T)
        assert tr.regimes[0][0] == 0.0
        for (a, b, _), (c, d, _) in zip(tr.regimes, tr.regimes[1:]):
            assert b == c
        assert tr.regimes[-1][1] == tr.t_span

    def test_chattering_cascade(self):
        p = Params(F=0.55)
        tr = simulate(p, (0.0, 1.5), 2 * p.T)
        expected = [
            (EventKind.WALL_HIT_RIGHT, 0.65),
            (EventKind.WALL_HIT_LEFT, 2.54),
            (EventKind.TURNING_TRANSVERSE, 3.45),
            (EventKind.STICK_ONSET, 4.28),
            (EventKind.STICK_RELEASE, 5.53),
            (EventKind.STICK_ONSET, 7.85),
            (EventKind.STICK_RELEASE, 8.67),
            (EventKind.STICK_ONSET, 10.99),
            (EventKind.STICK_RELEASE, 11.81),
        ]
        assert len(tr.events) == len(expected)
        for e, (kind, t) in zip(tr.events, expected):
            assert e.kind is kind
            assert abs(e.time - t) < 0.02

    def test_grazing_sensitivity_pair(self):
        p = Params(F=1.2)
        counts = []
        for v0 in (0.95, 1.00):
            tr = simulate(p, (-0.95, v0), 4 * p.T)
            wr, wl, tu, _ = tr.counts()
            counts.append((wr, wl, tu))
        assert counts[0] == counts[1] == (4, 4, 4)

    def test_low_forcing_capture(self):
        p = Params(F=0.62)
        tr = simulate(p, (0.0, 0.7), 3 * p.T,
                      stop_on=(EventKind.STICK_ONSET, EventKind.TANGENTIAL_TOUCH))
        assert tr.events[-1].kind is EventKind.STICK_ONSET
        assert abs(tr.events[-1].time - 14.4) < 0.1

    def test_permanent_rest_orbit(self):
        p = Params(F=0.3, f=0.4)
        tr = simulate(p, (0.2, 0.0), 2 * p.T)
        assert len(tr.regimes) == 1
        assert tr.regimes[0][2].is_sticking
        assert tr.final_state.x == 0.2 and tr.final_state.v == 0.0

    def test_event_budget(self):
        p = Params(F=0.55)
        with pytest.raises(EventBudgetExceeded):
            simulate(p, (0.0, 1.5), 2 * p.T, max_events=3)

    def test_validation(self):
        with pytest.raises(ValidationError):
            simulate(P, (1.5, 0.0), 1.0)
        with pytest.raises(ValidationError):
            simulate(P, (1.0, 0.5), 1.0)   # at right wall moving outward
        with pytest.raises(ValidationError):
            simulate(P, (0.0, 0.5), -1.0)

    def test_next_event_none_when_window_short(self):
        ev = next_event(P, State(0.0, 0.1, 0.5), MotionRegime.flight(+1), 0.5)
        assert ev is None

    def test_stop_on_truncates(self):
        tr = simulate(P, (0.3, 0.9), 5 * P.T, stop_on=(EventKind.WALL_HIT_LEFT,))
        assert tr.events[-1].kind is EventKind.WALL_HIT_LEFT
        assert tr.t_span == tr.events[-1].time


class TestClassifyOrbit:
    def test_reference_orbit_non_sticking(self):
        c = classify_orbit(P, P_STAR, 1)
        assert c.orbit_class == "non_sticking"
        assert (c.wall_hits_right, c.wall_hits_left, c.turnings, c.stick_intervals) == (1, 1, 0, 0)

    def test_turning_orbit(self):
        c = classify_orbit(Params(F=1.2), (-0.95, 0.95), 1)
        assert c.orbit_class in ("turning", "sticking")
        assert c.turnings >= 1

    def test_sticking_orbit(self):
        c = classify_orbit(Params(F=0.55), (0.0, 1.5), 2)
        assert c.orbit_class == "sticking"
