"""Validated numerics for the stroboscopic map.

Builds on the outward-rounded interval arithmetic of ``intervals``:

* interval propagation of an orbit and its variational matrix through one
  forcing period, with every event time bracketed by rigorous bisection of
  the closed-form flight position;
* Krawczyk fixed-point certification (existence and uniqueness of a true
  fixed point inside an explicit box);
* the order-four non-resonance certificate for the rotation number.

Certificates serialize to a JSON proof log in which every interval
endpoint appears as the exact decimal expansion of its binary value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .core import EventKind, simulate
from .errors import (
    ItineraryAmbiguous,
    NotCertifiablyElliptic,
    ValidationError,
)
from .intervals import (
    IMat2,
    Interval,
    I_TAU,
    as_interval,
    iabs,
    iarccos,
    icos,
    isin,
    isqr,
    _down,
)
from .params import Params
from .strobomap import jacobian_saltation

EVENT_BISECT_TOL = 1e-12    # contract width of a rigorous event-time bracket
EVENT_MAX_HALVINGS = 50
_BRACKET_H0 = 1e-6          # initial half-width of an event bracket
_BRACKET_GROWTH = 8.0
# Internal bisection target, two decades under the contract width: the width
# of a parent bracket enters the enclosures probed for its children, so each
# bracket is tightened as far as the sign test allows.
_BISECT_FLOOR = 1e-14
# Probe offsets tried per round; the off-center ones rescue rounds where the
# midpoint lands inside the sign-indeterminate sliver around the root.
_PROBE_FRACTIONS = (0.5, 0.375, 0.625, 0.25, 0.75, 0.125, 0.875)

VERDICT_UNIQUE = "UniqueFixedPointInBox"
VERDICT_INCONCLUSIVE = "Inconclusive"

# rotation numbers resonant at order four or below
RESONANCES_ORDER4 = ((1, 4), (1, 3), (2, 5), (1, 2), (3, 5), (2, 3), (3, 4))

_EVENT_KINDS_SEPARABLE = (EventKind.WALL_HIT_RIGHT, EventKind.WALL_HIT_LEFT,
                          EventKind.TURNING_TRANSVERSE)


# ---------------------------------------------------------------------------
# interval flight propagation

def interval_flight(p: Params, t0: Interval, x0: Interval, v0: Interval,
                    s: int, t: Interval):
    """Enclosure of the closed-form flight state (x, v) at time t.

    Interval counterpart of the float flight solution of
    x'' = F cos(w t) - s f with constant velocity sign s.
    """
    w = Interval(p.omega)
    aw = Interval(p.F) / w
    f = Interval(p.f)
    dt = t - t0
    s0 = isin(w * t0)
    c0 = icos(w * t0)
    st = isin(w * t)
    ct = icos(w * t)
    v = v0 + aw * (st - s0) - s * f * dt
    x = (x0 + v0 * dt - (aw / w) * (ct - c0) - aw * s0 * dt
         - Interval(0.5 * p.f) * s * isqr(dt))
    return x, v


@dataclass(frozen=True)
class IntervalVariational:
    """Rigorous one-period propagation record.

    ``matrix`` encloses the period-map derivative (product of flight shears
    and event saltations); ``event_times`` are the rigorous brackets of the
    event instants; ``final_state`` encloses the stroboscopic image of the
    initial box.
    """

    matrix: IMat2
    event_times: tuple
    event_kinds: tuple
    final_state: tuple

    def det(self) -> Interval:
        return self.matrix.det()

    def trace(self) -> Interval:
        return self.matrix.trace()


def _proven_sign(iv: Interval) -> int:
    """+1 / -1 when the interval is strictly one-signed, else 0."""
    if iv.hi < 0.0:
        return -1
    if iv.lo > 0.0:
        return 1
    return 0


def _bracket_event(g, direction: int, t_center: float, h_max: float):
    """Rigorous bracket [a, b] of a sign change of g near t_center.

    ``g`` maps a float probe time to an interval enclosure; ``direction``
    is the crossing sense (+1 increasing, -1 decreasing).  The bracket is
    grown geometrically until both endpoint signs are proven, then bisected
    until its width falls below EVENT_BISECT_TOL, the halving budget is
    spent, or a midpoint sign becomes unprovable (the bracket stays valid
    in every case).
    """
    h = min(_BRACKET_H0, h_max)
    while True:
        a, b = t_center - h, t_center + h
        ok_a = _proven_sign(g(a)) == -direction
        ok_b = _proven_sign(g(b)) == direction
        if ok_a and ok_b:
            break
        if h >= h_max:
            raise ItineraryAmbiguous(
                f"event near t = {t_center:.6f}: sign change not certifiable "
                f"within half-width {h_max:.3e}")
        h = min(h * _BRACKET_GROWTH, h_max)
    rounds = 0
    while (b - a) > _BISECT_FLOOR and rounds < EVENT_MAX_HALVINGS:
        rounds += 1
        advanced = False
        for frac in _PROBE_FRACTIONS:
            m = a + frac * (b - a)
            if not a < m < b:
                continue
            sign_m = _proven_sign(g(m))
            if sign_m == -direction:
                a = m
                advanced = True
                break
            if sign_m == direction:
                b = m
                advanced = True
                break
        if not advanced:
            break  # box-wide indeterminacy: bracket cannot shrink further
    return Interval(a, b)


def _check_itinerary(trace):
    if trace.regimes and trace.regimes[0][2].is_sticking:
        raise ItineraryAmbiguous("orbit starts inside a sticking interval")
    for e in trace.events:
        if e.kind not in _EVENT_KINDS_SEPARABLE:
            raise ItineraryAmbiguous(
                f"event kind {e.kind.value} is not interval-separable")


def _interval_flow(p: Params, x_iv: Interval, v_iv: Interval) -> IntervalVariational:
    """March the box through one period, enclosing events and the variational."""
    z_bar = (x_iv.mid, v_iv.mid)
    trace = simulate(p, z_bar, p.T)
    _check_itinerary(trace)
    if not trace.regimes:
        raise ItineraryAmbiguous("empty simulation record")
    s = trace.regimes[0][2].sign

    F = Interval(p.F)
    w = Interval(p.omega)
    f = Interval(p.f)
    one, zero = Interval(1.0), Interval(0.0)
    period = I_TAU / w

    t_iv, x_cur, v_cur = Interval(0.0), x_iv, v_iv
    M = IMat2.identity()
    times, kinds = [], []
    float_times = [e.time for e in trace.events]
    for idx, e in enumerate(trace.events):
        t_prev = float_times[idx - 1] if idx else 0.0
        t_next = float_times[idx + 1] if idx + 1 < len(float_times) else p.T
        h_max = 0.25 * min(e.time - t_prev, t_next - e.time)

        if e.kind is EventKind.WALL_HIT_RIGHT:
            wall, direction = p.r, 1
        elif e.kind is EventKind.WALL_HIT_LEFT:
            wall, direction = p.l, -1
        else:
            wall, direction = None, -s

        def g(tf, wall=wall, t0=t_iv, x0=x_cur, v0=v_cur, s_=s):
            x, v = interval_flight(p, t0, x0, v0, s_, Interval(tf))
            return v if wall is None else x - Interval(wall)

        t_k = _bracket_event(g, direction, e.time, h_max)
        if times and t_k.lo <= times[-1].hi:
            raise ItineraryAmbiguous("event-time brackets overlap or misorder")
        x_e, v_e = interval_flight(p, t_iv, x_cur, v_cur, s, t_k)

        M = IMat2(one, t_k - t_iv, zero, one) @ M
        cos_e = icos(w * t_k)
        if wall is not None:
            if _proven_sign(v_e) == 0:
                raise ItineraryAmbiguous(
                    f"wall hit at t = {e.time:.6f} not certifiably transverse")
            M = IMat2(-one, zero, (2.0 * F * cos_e) / v_e, -one) @ M
            x_cur, v_cur = Interval(wall), -v_e
        else:
            mag = iabs(F * cos_e)
            if (mag - f).lo <= 0.0:
                raise ItineraryAmbiguous(
                    f"turning at t = {e.time:.6f} not certifiably transverse")
            M = IMat2(one, zero, zero, (mag - f) / (mag + f)) @ M
            x_cur, v_cur = x_e, Interval(0.0)
        t_iv, s = t_k, -s
        times.append(t_k)
        kinds.append(e.kind)

    if times and times[-1].hi >= period.lo:
        raise ItineraryAmbiguous("final event bracket reaches the period end")
    M = IMat2(one, period - t_iv, zero, one) @ M
    x_T, v_T = interval_flight(p, t_iv, x_cur, v_cur, s, period)
    return IntervalVariational(M, tuple(times), tuple(kinds), (x_T, v_T))


def interval_variational(p: Params, fp_box, whole_box: bool = False) -> IntervalVariational:
    """Rigorous enclosure of the period-map derivative at a fixed-point box.

    By default the propagation starts from the degenerate center of the
    box, which gives near-point-width enclosures of the derivative there;
    ``whole_box=True`` propagates the full box (wider but valid uniformly
    over the box, as the Krawczyk derivative term requires).
    """
    x_iv, v_iv = (as_interval(c) for c in fp_box)
    if not whole_box:
        x_iv, v_iv = Interval(x_iv.mid), Interval(v_iv.mid)
    flow = _interval_flow(p, x_iv, v_iv)
    if not whole_box:
        for t_k in flow.event_times:
            if t_k.width >= EVENT_BISECT_TOL:
                raise ItineraryAmbiguous(
                    f"event bracket stalled at width {t_k.width:.3e} "
                    f"above the contract {EVENT_BISECT_TOL:.0e}")
    return flow


# ---------------------------------------------------------------------------
# Krawczyk certification

@dataclass(frozen=True)
class Certificate:
    """Result of a Krawczyk existence-and-uniqueness verification."""

    center: tuple
    radius: float
    C: tuple
    box: tuple
    krawczyk_image: tuple
    component_margins: tuple
    margin: float
    verdict: str

    @property
    def certified(self) -> bool:
        return self.verdict == VERDICT_UNIQUE

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "margin": _dec(self.margin),
            "component_margins": [_dec(m) for m in self.component_margins],
            "center": [_dec(c) for c in self.center],
            "radius": _dec(self.radius),
            "preconditioner": [[_dec(c) for c in row] for row in self.C],
            "box": [_iv_json(iv) for iv in self.box],
            "krawczyk_image": [_iv_json(iv) for iv in self.krawczyk_image],
        }


def _dec(x) -> str:
    return str(Decimal(float(x)))


def _iv_json(iv: Interval) -> dict:
    return {"lo": _dec(iv.lo), "hi": _dec(iv.hi)}


def _as_vector(z):
    if isinstance(z, (int, float)):
        return (float(z),)
    return tuple(float(c) for c in z)


def _as_matrix(C, n: int):
    arr = np.asarray(C, dtype=float)
    if arr.shape == () and n == 1:
        arr = arr.reshape(1, 1)
    if arr.shape != (n, n):
        raise ValidationError(f"preconditioner must be {n} x {n}")
    return tuple(tuple(float(c) for c in row) for row in arr)


def _call_vec(fn, box, n: int):
    out = fn(box)
    if isinstance(out, Interval):
        out = (out,)
    out = tuple(as_interval(c) for c in out)
    if len(out) != n:
        raise ValidationError(f"map returned {len(out)} components, expected {n}")
    return out


def _call_mat(fn, box, n: int):
    out = fn(box)
    if isinstance(out, Interval):
        out = ((out,),)
    return tuple(tuple(as_interval(c) for c in row) for row in out)


def krawczyk_certify(g, center, radius: float, C, g_jac) -> Certificate:
    """Certify a unique zero of g in the box center +/- radius.

    ``g`` and ``g_jac`` are interval extensions of the map and its Jacobian
    (called with a tuple of intervals; a scalar problem may return a bare
    interval).  The Krawczyk image
    K = center - C g(center) + (I - C g'(box)) (box - center)
    certifies a unique zero when it lands strictly inside the box; the
    margin is the smallest componentwise gap to the box boundary.  C is an
    ordinary float matrix treated as exact.
    """
    z_bar = _as_vector(center)
    n = len(z_bar)
    C_m = _as_matrix(C, n)
    box = tuple(Interval.around(c, radius) for c in z_bar)

    g_center = _call_vec(g, tuple(Interval(c) for c in z_bar), n)
    J = _call_mat(g_jac, box, n)
    if len(J) != n or any(len(row) != n for row in J):
        raise ValidationError(f"jacobian must be {n} x {n}")

    bmc = tuple(box[j] - z_bar[j] for j in range(n))
    image = []
    for i in range(n):
        k_i = Interval(z_bar[i])
        for j in range(n):
            k_i = k_i - Interval(C_m[i][j]) * g_center[j]
        for j in range(n):
            r_ij = Interval(1.0 if i == j else 0.0)
            for k in range(n):
                r_ij = r_ij - Interval(C_m[i][k]) * J[k][j]
            k_i = k_i + r_ij * bmc[j]
        image.append(k_i)

    margins = tuple(min(image[i].lo - box[i].lo, box[i].hi - image[i].hi)
                    for i in range(n))
    margin = min(margins)
    verdict = VERDICT_UNIQUE if margin > 0.0 else VERDICT_INCONCLUSIVE
    return Certificate(z_bar, float(radius), C_m, box, tuple(image),
                       margins, margin, verdict)


def certify_fixed_point(p: Params, z_bar, radius: float = 1e-9) -> Certificate:
    """Krawczyk certificate for a stroboscopic-map fixed point near z_bar.

    The preconditioner is the float inverse of (J - I) with J the
    saltation-product derivative at z_bar; the map residual is enclosed by
    interval propagation from the degenerate center, and the derivative
    over the box by whole-box interval propagation.
    """
    z_bar = _as_vector(z_bar)
    J_float, _ = jacobian_saltation(p, z_bar)
    C = np.linalg.inv(J_float - np.eye(2))

    def g(box):
        flow = _interval_flow(p, box[0], box[1])
        x_T, v_T = flow.final_state
        return (x_T - box[0], v_T - box[1])

    def g_jac(box):
        flow = _interval_flow(p, box[0], box[1])
        M = flow.matrix
        return ((M.a11 - 1.0, M.a12), (M.a21, M.a22 - 1.0))

    return krawczyk_certify(g, z_bar, radius, C, g_jac)


# ---------------------------------------------------------------------------
# non-resonance certificate

@dataclass(frozen=True)
class NonresonanceResult:
    """Interval rotation data and distance to low-order resonances."""

    theta: Interval
    rotation: Interval
    min_resonance_distance: float
    nearest_resonance: tuple
    certified: bool


def nonresonance_check(trace_interval) -> NonresonanceResult:
    """Certify that the rotation number avoids all resonances of order <= 4.

    The trace interval must lie strictly inside (-2, 2); the rotation
    enclosure arccos(tr/2) / 2pi is compared against each candidate
    resonance, and the certificate holds when the smallest rigorous
    distance exceeds the width of the rotation enclosure.
    """
    tr = as_interval(trace_interval)
    if tr.lo <= -2.0 or tr.hi >= 2.0:
        raise NotCertifiablyElliptic(
            f"trace interval [{tr.lo}, {tr.hi}] touches +/-2")
    theta = iarccos(tr / 2.0)
    rotation = theta / I_TAU
    min_dist = math.inf
    nearest = None
    for (num, den) in RESONANCES_ORDER4:
        r_iv = Interval(num) / Interval(den)
        if rotation.intersects(r_iv):
            dist = 0.0
        elif r_iv.lo > rotation.hi:
            dist = _down(r_iv.lo - rotation.hi)
        else:
            dist = _down(rotation.lo - r_iv.hi)
        if dist < min_dist:
            min_dist, nearest = dist, (num, den)
    certified = min_dist > rotation.width
    return NonresonanceResult(theta, rotation, min_dist, nearest, certified)


# ---------------------------------------------------------------------------
# JSON proof log

def proof_log(p: Params, cert: Certificate,
              variational: IntervalVariational | None = None,
              nonres: NonresonanceResult | None = None) -> dict:
    """Assemble a self-contained JSON-ready proof log.

    All interval endpoints are exact decimal expansions of their binary
    values, so the log reproduces the computed enclosures bit for bit.
    """
    log = {
        "parameters": {"F": _dec(p.F), "omega": _dec(p.omega), "f": _dec(p.f),
                       "l": _dec(p.l), "r": _dec(p.r)},
        "certificate": cert.to_json_dict(),
    }
    if variational is not None:
        M = variational.matrix
        log["variational"] = {
            "matrix": [[_iv_json(M.a11), _iv_json(M.a12)],
                       [_iv_json(M.a21), _iv_json(M.a22)]],
            "det": _iv_json(M.det()),
            "trace": _iv_json(M.trace()),
            "event_kinds": [k.value for k in variational.event_kinds],
            "event_times": [_iv_json(t) for t in variational.event_times],
        }
    if nonres is not None:
        log["nonresonance"] = {
            "theta": _iv_json(nonres.theta),
            "rotation": _iv_json(nonres.rotation),
            "min_resonance_distance": _dec(nonres.min_resonance_distance),
            "nearest_resonance": list(nonres.nearest_resonance),
            "resonances_checked": [f"{n}/{d}" for (n, d) in RESONANCES_ORDER4],
            "certified": nonres.certified,
        }
    return log
