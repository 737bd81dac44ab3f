"""Event-driven simulation of the forced dry-friction oscillator between walls.

Between events the motion follows the closed-form flight solution of
x'' + s f = F cos(w t) with fixed velocity sign s.  Events (wall impacts,
transverse turnings, sticking onsets and releases, tangential touches) are
located by a dense scan of the closed form followed by bisection, so no ODE
stepping error enters the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    BracketFailure,
    EventBudgetExceeded,
    InconsistentEvent,
    PermanentRest,
    ValidationError,
)
from .params import Params

SCAN_DIVISIONS = 2000       # scan points per forcing period for event bracketing
T_BISECT_TOL = 1e-13        # absolute time tolerance of event bisection
MAX_BISECT = 120
TANGENT_TOL = 1e-10         # half-width of the tangential band |F cos| - f
GRAZE_V_TOL = 1e-10         # wall-contact speed below which the hit is grazing
WALL_CAPTURE_DEPTH = 1e-12  # rebound dip depth below which chattering is captured
MAX_EVENTS = 1_000_000


class EventKind(Enum):
    WALL_HIT_RIGHT = "wall_hit_right"
    WALL_HIT_LEFT = "wall_hit_left"
    TURNING_TRANSVERSE = "turning_transverse"
    STICK_ONSET = "stick_onset"
    STICK_RELEASE = "stick_release"
    TANGENTIAL_TOUCH = "tangential_touch"


WALL_KINDS = (EventKind.WALL_HIT_RIGHT, EventKind.WALL_HIT_LEFT)
STICKING_KINDS = (EventKind.STICK_ONSET, EventKind.STICK_RELEASE, EventKind.TANGENTIAL_TOUCH)


class RegimeKind(Enum):
    FREE_FLIGHT = "free_flight"
    STICKING = "sticking"


@dataclass(frozen=True)
class MotionRegime:
    """Current motion regime: a signed free flight or a sticking interval.

    ``wall`` is nonzero (+1 right, -1 left) when the particle is held at a
    wall by outward forcing after a grazing contact.
    """

    kind: RegimeKind
    sign: int = 0
    wall: int = 0

    @classmethod
    def flight(cls, sign: int) -> "MotionRegime":
        return cls(RegimeKind.FREE_FLIGHT, sign)

    @classmethod
    def sticking(cls, wall: int = 0) -> "MotionRegime":
        return cls(RegimeKind.STICKING, 0, wall)

    @property
    def is_sticking(self) -> bool:
        return self.kind is RegimeKind.STICKING


@dataclass(frozen=True)
class State:
    t: float
    x: float
    v: float


@dataclass(frozen=True)
class Event:
    kind: EventKind
    time: float
    state_before: State
    state_after: State
    exit_sign: int = 0
    grazing: bool = False


@dataclass
class OrbitTrace:
    """Simulation record: dense samples, event log, and regime intervals."""

    params: object
    z0: tuple
    t_span: float
    samples: np.ndarray                  # rows (t, x, v)
    events: list = field(default_factory=list)
    regimes: list = field(default_factory=list)   # (t_start, t_end, MotionRegime)
    warnings: list = field(default_factory=list)

    @property
    def final_state(self) -> State:
        t, x, v = self.samples[-1]
        return State(t, x, v)

    def counts(self) -> tuple:
        """(right wall hits, left wall hits, turnings, sticking intervals)."""
        wr = sum(1 for e in self.events if e.kind is EventKind.WALL_HIT_RIGHT)
        wl = sum(1 for e in self.events if e.kind is EventKind.WALL_HIT_LEFT)
        tu = sum(1 for e in self.events if e.kind is EventKind.TURNING_TRANSVERSE)
        st = sum(1 for e in self.events if e.kind in (EventKind.STICK_ONSET, EventKind.TANGENTIAL_TOUCH))
        # a trace that starts inside a sticking interval has no onset event
        if self.regimes and self.regimes[0][2].is_sticking:
            st += 1
        return (wr, wl, tu, st)

    def itinerary(self) -> tuple:
        return tuple(e.kind for e in self.events)

    def has_sticking_event(self) -> bool:
        """True if any zero-velocity event (turning, onset, release, touch) occurs."""
        if self.regimes and self.regimes[0][2].is_sticking:
            return True
        return any(
            e.kind in (EventKind.TURNING_TRANSVERSE, EventKind.STICK_ONSET,
                       EventKind.STICK_RELEASE, EventKind.TANGENTIAL_TOUCH)
            for e in self.events
        )


def flight_propagate(p: Params, t0: float, x0: float, v0: float, s: int, t):
    """Closed-form flight state (x, v) at time t for constant velocity sign s.

    Solves x'' = F cos(w t) - s f exactly.  ``t`` may be a scalar or an array.
    """
    w = p.omega
    if isinstance(t, np.ndarray):
        sin, cos = np.sin, np.cos
    else:
        sin, cos = math.sin, math.cos
    dt = t - t0
    aw = p.F / w
    s0 = math.sin(w * t0)
    c0 = math.cos(w * t0)
    st = sin(w * t)
    ct = cos(w * t)
    v = v0 + aw * (st - s0) - s * p.f * dt
    x = x0 + v0 * dt - (aw / w) * (ct - c0) - aw * s0 * dt - 0.5 * s * p.f * dt * dt
    return x, v


class _Dynamics:
    """Bundle of flight law, restitution, and parameters used by the simulator."""

    __slots__ = ("p", "params_obj", "e", "flight", "scalar_funs")

    def __init__(self, p, params_obj, e, flight, scalar_funs):
        self.p = p
        self.params_obj = params_obj
        self.e = e
        self.flight = flight            # vectorized (t0, x0, v0, s, t_array) -> (x, v)
        self.scalar_funs = scalar_funs  # factory (t0, x0, v0, s) -> (xfun, vfun)

    @classmethod
    def elastic(cls, p: Params) -> "_Dynamics":
        w = p.omega
        aw = p.F / w
        aww = aw / w
        f = p.f

        def flight(t0, x0, v0, s, t):
            return flight_propagate(p, t0, x0, v0, s, t)

        def scalar_funs(t0, x0, v0, s):
            s0 = math.sin(w * t0)
            c0 = math.cos(w * t0)
            sf = s * f
            slope = v0 - aw * s0

            def xfun(t):
                dt = t - t0
                return x0 + slope * dt - aww * (math.cos(w * t) - c0) - 0.5 * sf * dt * dt

            def vfun(t):
                dt = t - t0
                return v0 + aw * (math.sin(w * t) - s0) - sf * dt

            return xfun, vfun

        return cls(p, p, 1.0, flight, scalar_funs)


def classify_vzero(p: Params, t: float):
    """Classify a zero-velocity instant by the forcing-friction balance.

    Returns ("transverse", exit_sign), ("stick_onset", 0) or ("tangential", 0)
    according to whether |F cos(w t)| exceeds, falls below, or equals f within
    the tangential tolerance band.
    """
    force = p.F * math.cos(p.omega * t)
    if abs(force) > p.f + TANGENT_TOL:
        return ("transverse", 1 if force > 0.0 else -1)
    if abs(force) < p.f - TANGENT_TOL:
        return ("stick_onset", 0)
    return ("tangential", 0)


def stick_release_time(p: Params, t_onset: float):
    """First time after t_onset at which |F cos(w t)| returns to f.

    Returns (t_release, exit_sign) with exit_sign = sgn(F cos(w t_release)).
    Raises PermanentRest when f >= F, in which case the forcing can never
    overcome friction again.
    """
    if p.f >= p.F:
        raise PermanentRest("friction f >= forcing amplitude F: no release")
    if p.f == 0.0:
        raise InconsistentEvent("sticking cannot occur with zero friction")
    a = math.acos(p.f / p.F)          # phase half-width of the moving zone
    two_pi = 2.0 * math.pi
    u = math.fmod(p.omega * t_onset, two_pi)
    if u < 0.0:
        u += two_pi
    # low-forcing windows where sticking persists: (a, pi - a) and (pi + a, 2 pi - a)
    slack = 1e-9
    if a - slack <= u <= math.pi - a + slack:
        u_rel, exit_sign = math.pi - a, -1
    elif math.pi + a - slack <= u <= two_pi - a + slack:
        u_rel, exit_sign = two_pi - a, +1
    else:
        raise InconsistentEvent(
            f"onset phase {u:.6f} lies outside the sticking windows for f/F={p.f / p.F:.6f}")
    du = u_rel - u
    if du < 0.0:
        du = 0.0
    return t_onset + du / p.omega, exit_sign


def _wall_press_release(p: Params, t_onset: float, wall: int):
    """Release time for a particle held at a wall by outward forcing.

    The particle leaves when the forcing points inward with magnitude above f,
    i.e. at the first phase where F cos(w t) = -wall f moving inward.  The
    departure sign is -wall.
    """
    if p.f >= p.F:
        raise PermanentRest("friction f >= forcing amplitude F: no release")
    a = math.acos(p.f / p.F)
    two_pi = 2.0 * math.pi
    # inward escape phase: cos passes -wall*f/F toward -wall
    u_target = (math.pi - a) if wall > 0 else (two_pi - a)
    u = math.fmod(p.omega * t_onset, two_pi)
    if u < 0.0:
        u += two_pi
    du = u_target - u
    while du <= 1e-12:
        du += two_pi
    return t_onset + du / p.omega, -wall


def _bisect_root(gfun, ta, tb, ga, gb):
    """Bisection for the root of gfun in (ta, tb], given bracketing values."""
    if ga == 0.0:
        return ta
    if gb == 0.0:
        return tb
    if (ga < 0.0) == (gb < 0.0):
        raise BracketFailure("endpoint values do not bracket a sign change")
    for _ in range(MAX_BISECT):
        if (tb - ta) <= T_BISECT_TOL:
            break
        tm = 0.5 * (ta + tb)
        if tm <= ta or tm >= tb:
            break
        gm = gfun(tm)
        if gm == 0.0:
            return tm
        if (ga < 0.0) != (gm < 0.0):
            tb, gb = tm, gm
        else:
            ta, ga = tm, gm
    return 0.5 * (ta + tb)


def _first_bracket(ts, g, skip_start: bool):
    """Index i of the first sign change of g over (ts[i-1], ts[i]], or None.

    An exact zero at an interior node counts as a root; a zero at the first
    node is the departing state and is skipped when skip_start is set.
    """
    prod = g[:-1] * g[1:]
    hits = np.flatnonzero((prod < 0.0) | (g[1:] == 0.0))
    for i in hits:
        if i == 0 and skip_start and g[0] == 0.0:
            # departure from an exact zero; only a genuine crossing counts
            if g[1] == 0.0:
                return 1
            continue
        return int(i) + 1
    return None


def _next_event_flight(dyn: _Dynamics, t0: float, x0: float, v0: float, s: int, t_max: float):
    """Earliest event of a free flight started at (t0, x0, v0) with sign s."""
    p = dyn.p
    h = p.T / SCAN_DIVISIONS
    chunk_len = 256.0 * h
    xfun, vfun = dyn.scalar_funs(t0, x0, v0, s)

    def scan_nodes(ts, skip_start):
        xs, vs = dyn.flight(t0, x0, v0, s, ts)
        candidates = []
        for g, tag, gfun in ((xs - p.r, "wall_r", None), (xs - p.l, "wall_l", None), (vs, "vzero", vfun)):
            i = _first_bracket(ts, g, skip_start=skip_start)
            if i is not None:
                if gfun is None:
                    wall_pos = p.r if tag == "wall_r" else p.l
                    gfun = (lambda wp: lambda t: xfun(t) - wp)(wall_pos)
                t_root = _bisect_root(gfun, ts[i - 1], ts[i], g[i - 1], g[i])
                candidates.append((t_root, tag, ts[i - 1]))
        if not candidates:
            return None
        candidates.sort(key=lambda c: c[0])
        t_root, tag, t_left = candidates[0]
        # tie break: a wall contact within bisection tolerance of a
        # velocity zero is processed as the wall contact
        if tag == "vzero":
            for t2, tag2, tl2 in candidates[1:]:
                if tag2 in ("wall_r", "wall_l") and t2 - t_root <= T_BISECT_TOL:
                    t_root, tag, t_left = t2, tag2, tl2
                    break
        if t_root <= t_max + T_BISECT_TOL:
            return _resolve_event(dyn, t0, x0, v0, s, t_root, tag, t_left, xfun, vfun)
        return "beyond"

    # a flight leaving a wall against outward acceleration dips back within
    # roughly 2|v0|/|a0|; when that is shorter than the scan step the dip is
    # invisible to the coarse grid, so resolve it on a fine prefix first
    if v0 != 0.0 and (x0 == p.r or x0 == p.l):
        a0 = p.F * math.cos(p.omega * t0) - s * p.f
        outward = a0 > 0.0 if x0 == p.r else a0 < 0.0
        if outward:
            dip = 2.0 * abs(v0) / abs(a0)
            if dip < 2.0 * h:
                micro_end = min(t0 + 4.0 * dip, t_max)
                found = scan_nodes(np.linspace(t0, micro_end, 129), skip_start=True)
                if found == "beyond":
                    return None
                if found is not None:
                    return found

    chunk_start = t0
    first_chunk = True
    while chunk_start < t_max - 1e-15:
        chunk_end = min(chunk_start + chunk_len, t_max)
        n = max(int(math.ceil((chunk_end - chunk_start) / h)), 1) + 1
        found = scan_nodes(np.linspace(chunk_start, chunk_end, n), skip_start=first_chunk)
        if found == "beyond":
            return None
        if found is not None:
            return found
        chunk_start = chunk_end
        first_chunk = False
    return None


def _resolve_event(dyn: _Dynamics, t0, x0, v0, s, t_root, tag, t_left, xfun, vfun):
    """Build the Event located at t_root, handling grazing and wall overshoot."""
    p = dyn.p
    x_e, v_e = xfun(t_root), vfun(t_root)
    if tag == "vzero" and (x_e >= p.r or x_e <= p.l):
        # the velocity zero sits inside a sub-grid wall excursion: the wall
        # contact happens first, between the last inside grid point and t_root
        wall_pos = p.r if x_e >= p.r else p.l
        gfun = lambda t: xfun(t) - wall_pos
        t_root = _bisect_root(gfun, t_left, t_root, gfun(t_left), x_e - wall_pos)
        tag = "wall_r" if wall_pos == p.r else "wall_l"
        x_e, v_e = xfun(t_root), vfun(t_root)

    if tag in ("wall_r", "wall_l"):
        wall = +1 if tag == "wall_r" else -1
        wall_pos = p.r if wall > 0 else p.l
        before = State(t_root, wall_pos, v_e)
        graze = abs(v_e) < GRAZE_V_TOL
        if not graze:
            # Zeno chattering against an outward-pressing forcing contracts
            # the rebound dip geometrically; once its depth falls beneath
            # position resolution the tail cannot be followed in float64 and
            # the contact is treated as a grazing capture
            a_out = p.F * math.cos(p.omega * t_root) + wall * p.f
            if wall * a_out > 0.0:
                graze = (dyn.e * v_e) ** 2 / (2.0 * abs(a_out)) < WALL_CAPTURE_DEPTH
        if graze:
            kind, exit_sign = classify_vzero(p, t_root)
            if kind == "transverse" and exit_sign == -wall:
                after = State(t_root, wall_pos, 0.0)
                return Event(EventKind.TURNING_TRANSVERSE, t_root, before, after,
                             exit_sign=exit_sign, grazing=True)
            after = State(t_root, wall_pos, 0.0)
            return Event(EventKind.STICK_ONSET, t_root, before, after,
                         exit_sign=0, grazing=True)
        if v_e * wall < 0.0:
            raise InconsistentEvent(
                "wall contact with velocity pointing away from the wall")
        kind = EventKind.WALL_HIT_RIGHT if wall > 0 else EventKind.WALL_HIT_LEFT
        after = State(t_root, wall_pos, -dyn.e * v_e)
        return Event(kind, t_root, before, after)

    # interior velocity zero
    before = State(t_root, x_e, 0.0)
    kind, exit_sign = classify_vzero(p, t_root)
    if kind == "transverse":
        if exit_sign == s:
            raise InconsistentEvent("transverse turning with unchanged velocity sign")
        return Event(EventKind.TURNING_TRANSVERSE, t_root, before, before, exit_sign=exit_sign)
    if kind == "stick_onset":
        return Event(EventKind.STICK_ONSET, t_root, before, before)
    return Event(EventKind.TANGENTIAL_TOUCH, t_root, before, before, grazing=True)


def next_event(dyn_or_params, state: State, regime: MotionRegime, t_max: float):
    """Earliest event after ``state`` under the given regime, or None.

    Accepts either a Params instance (elastic dynamics) or an internal
    dynamics bundle.  Sticking regimes yield the stick release, when it
    occurs before t_max.
    """
    dyn = dyn_or_params if isinstance(dyn_or_params, _Dynamics) else _Dynamics.elastic(dyn_or_params)
    p = dyn.p
    if regime.is_sticking:
        try:
            if regime.wall != 0:
                t_rel, exit_sign = _wall_press_release(p, state.t, regime.wall)
            else:
                t_rel, exit_sign = stick_release_time(p, state.t)
        except PermanentRest:
            return None
        if t_rel > t_max:
            return None
        st = State(t_rel, state.x, 0.0)
        return Event(EventKind.STICK_RELEASE, t_rel, st, st, exit_sign=exit_sign)
    return _next_event_flight(dyn, state.t, state.x, state.v, regime.sign, t_max)


def _initial_regime(dyn: _Dynamics, z0, warnings: list):
    p = dyn.p
    x0, v0 = z0
    if not (p.l <= x0 <= p.r):
        raise ValidationError(f"initial position {x0} outside the walls [{p.l}, {p.r}]")
    if v0 != 0.0:
        if x0 == p.r and v0 > 0.0:
            raise ValidationError("initial state at the right wall moving outward")
        if x0 == p.l and v0 < 0.0:
            raise ValidationError("initial state at the left wall moving outward")
        return MotionRegime.flight(1 if v0 > 0.0 else -1)
    kind, exit_sign = classify_vzero(p, 0.0)
    at_wall = +1 if x0 == p.r else (-1 if x0 == p.l else 0)
    if kind == "transverse":
        if at_wall != 0 and exit_sign == at_wall:
            warnings.append("initial state pressed against a wall by the forcing")
            return MotionRegime.sticking(wall=at_wall)
        return MotionRegime.flight(exit_sign)
    if kind == "tangential":
        warnings.append("initial zero-velocity state lies in the tangential band")
    return MotionRegime.sticking(wall=at_wall)


def _simulate(dyn: _Dynamics, z0, t_span: float, sample_dt, max_events: int,
              stop_on=None) -> OrbitTrace:
    p = dyn.p
    if not (t_span > 0.0) or not math.isfinite(t_span):
        raise ValidationError("t_span must be positive and finite")
    warnings: list = []
    regime = _initial_regime(dyn, z0, warnings)
    state = State(0.0, float(z0[0]), float(z0[1]))
    events: list = []
    regimes: list = []
    sample_ts: list = [0.0]
    sample_xs: list = [state.x]
    sample_vs: list = [state.v]
    next_k = 1  # next cadence index to emit

    def emit_samples(seg_start_state: State, seg_regime: MotionRegime, t_end: float):
        nonlocal next_k
        if sample_dt is None:
            return
        while True:
            t_k = next_k * sample_dt
            if t_k >= t_end or t_k > t_span:
                break
            if seg_regime.is_sticking:
                xk, vk = seg_start_state.x, 0.0
            else:
                xk, vk = dyn.flight(seg_start_state.t, seg_start_state.x,
                                    seg_start_state.v, seg_regime.sign, t_k)
            sample_ts.append(t_k)
            sample_xs.append(xk)
            sample_vs.append(vk)
            next_k += 1

    while True:
        ev = next_event(dyn, state, regime, t_span)
        t_seg_end = ev.time if ev is not None else t_span
        emit_samples(state, regime, t_seg_end)
        regimes.append((state.t, t_seg_end, regime))
        if ev is None:
            break
        if ev.grazing:
            warnings.append(f"grazing contact at t={ev.time:.12g} handled as {ev.kind.value}")
        events.append(ev)
        state = ev.state_after
        if stop_on is not None and ev.kind in stop_on:
            samples = np.column_stack([sample_ts + [ev.time], sample_xs + [state.x],
                                       sample_vs + [state.v]])
            return OrbitTrace(dyn.params_obj, (float(z0[0]), float(z0[1])), ev.time,
                              samples, events, regimes, warnings)
        if ev.kind in WALL_KINDS:
            if ev.state_after.v == 0.0:
                # full inelastic stop at the wall
                wall = +1 if ev.kind is EventKind.WALL_HIT_RIGHT else -1
                kind, exit_sign = classify_vzero(p, ev.time)
                if kind == "transverse" and exit_sign == -wall:
                    regime = MotionRegime.flight(exit_sign)
                else:
                    regime = MotionRegime.sticking(wall=wall)
            else:
                regime = MotionRegime.flight(1 if ev.state_after.v > 0.0 else -1)
        elif ev.kind is EventKind.TURNING_TRANSVERSE:
            regime = MotionRegime.flight(ev.exit_sign)
        elif ev.kind in (EventKind.STICK_ONSET, EventKind.TANGENTIAL_TOUCH):
            at_wall = +1 if ev.state_after.x == p.r else (-1 if ev.state_after.x == p.l else 0)
            regime = MotionRegime.sticking(wall=at_wall if ev.grazing else 0)
        elif ev.kind is EventKind.STICK_RELEASE:
            regime = MotionRegime.flight(ev.exit_sign)
        if len(events) >= max_events:
            raise EventBudgetExceeded(f"more than {max_events} events in one simulation")

    # final state at t_span
    if regime.is_sticking:
        xf, vf = state.x, 0.0
    else:
        xf, vf = dyn.flight(state.t, state.x, state.v, regime.sign, t_span)
    if sample_ts[-1] != t_span:
        sample_ts.append(t_span)
        sample_xs.append(xf)
        sample_vs.append(vf)
    samples = np.column_stack([sample_ts, sample_xs, sample_vs])
    return OrbitTrace(dyn.params_obj, (float(z0[0]), float(z0[1])), t_span,
                      samples, events, regimes, warnings)


def simulate(p: Params, z0, t_span: float, sample_dt=None, max_events: int = MAX_EVENTS,
             stop_on=None) -> OrbitTrace:
    """Simulate the elastic oscillator from state z0 = (x0, v0) at phase zero.

    Returns an OrbitTrace with samples on the requested cadence (plus the
    initial and final states), the full event log, and regime intervals.
    When ``stop_on`` (a collection of EventKind) is given, the run ends at the
    first matching event and the trace is truncated there.
    """
    return _simulate(_Dynamics.elastic(p), z0, t_span, sample_dt, max_events, stop_on)


@dataclass(frozen=True)
class OrbitClassification:
    orbit_class: str                      # "non_sticking" | "turning" | "sticking"
    wall_hits_right: int
    wall_hits_left: int
    turnings: int
    stick_intervals: int


def classify_orbit(p: Params, z0, n_periods: int = 1) -> OrbitClassification:
    """Classify the orbit from z0 over n_periods forcing periods by its events."""
    trace = simulate(p, z0, n_periods * p.T)
    wr, wl, tu, st = trace.counts()
    if st > 0:
        cls = "sticking"
    elif tu > 0:
        cls = "turning"
    else:
        cls = "non_sticking"
    return OrbitClassification(cls, wr, wl, tu, st)
