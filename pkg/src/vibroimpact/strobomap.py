"""Stroboscopic (time-T) map of the oscillator and its linearization.

The period map is sampled at forcing phase zero.  Its derivative is computed
two independent ways: central finite differences with an event-itinerary
guard, and the exact product of flight shears and saltation matrices along
the event sequence.  Non-sticking orbits unfold to a monotone coordinate on
the triangular-wave lift, and symmetric walls admit a half-period square
root of the period map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    EventKind,
    OrbitTrace,
    classify_vzero,
    simulate,
)
from .errors import ItineraryMismatch, NotElliptic, NotNonSticking, StickingOnPath, ValidationError
from .params import Params

FD_STEP = 1e-6
FD_STEP_MIN = 1e-8

# rotation numbers p/q with q <= 4 (and their complements) inside (0, 1)
LOW_ORDER_RESONANCES = (0.25, 1.0 / 3.0, 0.4, 0.5, 0.6, 2.0 / 3.0, 0.75)


def strobo_map(p: Params, z, n_periods: int = 1):
    """Apply the time-T stroboscopic map n_periods times to z = (x, v)."""
    tr = simulate(p, z, n_periods * p.T)
    st = tr.final_state
    return (float(st.x), float(st.v))


def _flow_with_itinerary(p: Params, z):
    tr = simulate(p, z, p.T)
    st = tr.final_state
    return (float(st.x), float(st.v)), tr.itinerary()


def fd_jacobian_of(flow, z, h: float = FD_STEP, h_min: float = FD_STEP_MIN,
                   one_sided_fallback: bool = False):
    """Central-difference Jacobian of a planar map with an itinerary guard.

    ``flow(z) -> (z_image, itinerary)``.  The step is halved until all four
    stencil orbits share the center's event itinerary; if that never happens
    the guard either raises ItineraryMismatch or, with one_sided_fallback,
    falls back to one-sided differences on the side matching the center.
    """
    z0, it0 = flow(z)
    hh = h
    while hh >= h_min:
        stencil = {}
        for j, (dx, dv) in enumerate(((hh, 0.0), (0.0, hh))):
            stencil[(j, +1)] = flow((z[0] + dx, z[1] + dv))
            stencil[(j, -1)] = flow((z[0] - dx, z[1] - dv))
        if all(it == it0 for _, it in stencil.values()):
            J = np.empty((2, 2))
            for j in range(2):
                zp, _ = stencil[(j, +1)]
                zm, _ = stencil[(j, -1)]
                J[0, j] = (zp[0] - zm[0]) / (2.0 * hh)
                J[1, j] = (zp[1] - zm[1]) / (2.0 * hh)
            return J
        hh *= 0.5
    if not one_sided_fallback:
        raise ItineraryMismatch(
            "no finite-difference step preserved the event itinerary around z")
    # one-sided differences against the center on whichever side matches
    J = np.empty((2, 2))
    hh = h
    for j, (dx, dv) in enumerate(((hh, 0.0), (0.0, hh))):
        zp, itp = flow((z[0] + dx, z[1] + dv))
        zm, itm = flow((z[0] - dx, z[1] - dv))
        if itp == it0:
            J[0, j] = (zp[0] - z0[0]) / hh
            J[1, j] = (zp[1] - z0[1]) / hh
        elif itm == it0:
            J[0, j] = (z0[0] - zm[0]) / hh
            J[1, j] = (z0[1] - zm[1]) / hh
        else:
            J[0, j] = (zp[0] - zm[0]) / (2.0 * hh)
            J[1, j] = (zp[1] - zm[1]) / (2.0 * hh)
    return J


def jacobian_fd(p: Params, z, h: float = FD_STEP, one_sided_fallback: bool = False):
    """Finite-difference derivative of the stroboscopic map at z."""
    return fd_jacobian_of(lambda y: _flow_with_itinerary(p, y), z, h,
                          one_sided_fallback=one_sided_fallback)


def _shear(dt: float) -> np.ndarray:
    return np.array([[1.0, dt], [0.0, 1.0]])


def wall_saltation(p: Params, t_star: float, v_minus: float) -> np.ndarray:
    """Linearized impact correction at a wall crossed with speed v_minus.

    Valid at either wall; v_minus is the signed pre-impact velocity.
    """
    return np.array([
        [-1.0, 0.0],
        [2.0 * p.F * math.cos(p.omega * t_star) / v_minus, -1.0],
    ])


def turning_saltation(p: Params, t_star: float) -> np.ndarray:
    """Linearized correction at a transverse turning (velocity sign change)."""
    mag = abs(p.F * math.cos(p.omega * t_star))
    return np.array([[1.0, 0.0], [0.0, (mag - p.f) / (mag + p.f)]])


def jacobian_saltation(p: Params, z, trace: OrbitTrace | None = None):
    """Derivative of the period map as a product of shears and saltations.

    Returns (J, factors) where factors lists each event's contribution.
    Raises StickingOnPath when the period contains a sticking event, since
    the derivative is then rank-deficient rather than a clean product.
    """
    tr = trace if trace is not None else simulate(p, z, p.T)
    M = np.eye(2)
    t_prev = 0.0
    factors = []
    for e in tr.events:
        if e.kind in (EventKind.STICK_ONSET, EventKind.STICK_RELEASE, EventKind.TANGENTIAL_TOUCH):
            raise StickingOnPath("period contains a sticking event; derivative is singular")
        M = _shear(e.time - t_prev) @ M
        if e.kind in (EventKind.WALL_HIT_RIGHT, EventKind.WALL_HIT_LEFT):
            S = wall_saltation(p, e.time, e.state_before.v)
        else:
            S = turning_saltation(p, e.time)
        M = S @ M
        factors.append({
            "kind": e.kind.value,
            "time": e.time,
            "det_factor": float(np.linalg.det(S)),
        })
        t_prev = e.time
    M = _shear(tr.t_span - t_prev) @ M
    return M, factors


def rotation_number(J: np.ndarray):
    """Rotation angle theta and rotation number theta/2pi of an elliptic matrix."""
    tr = float(np.trace(J))
    if abs(tr) >= 2.0:
        raise NotElliptic(f"|trace| = {abs(tr):.6f} >= 2")
    theta = math.acos(tr / 2.0)
    return theta, theta / (2.0 * math.pi)


def resonance_distance(rot: float) -> float:
    """Distance from a rotation number to the nearest low-order resonance."""
    return min(abs(rot - r) for r in LOW_ORDER_RESONANCES)


@dataclass
class LiftResult:
    t: np.ndarray
    q: np.ndarray
    p_lift: np.ndarray
    max_residual: float
    monotone: bool


def lift_check(p: Params, trace: OrbitTrace) -> LiftResult:
    """Unfold a non-sticking trace onto the monotone triangular-wave coordinate.

    Positions map through x = R W(q) + l with W the period-2 triangular wave;
    the branch flips at each wall hit, so q increases monotonically along any
    non-sticking orbit.  Returns the lifted samples and the reconstruction
    residual max |R W(q) + l - x|.
    """
    wr, wl, tu, st = trace.counts()
    if tu > 0 or st > 0:
        raise NotNonSticking("lift defined only for orbits without turnings or sticking")
    R = p.R
    samples = trace.samples
    wall_times = [e.time for e in trace.events]
    wall_kinds = [e.kind for e in trace.events]

    v0 = samples[0, 2]
    if v0 > 0.0:
        up = True
    elif v0 < 0.0:
        up = False
    else:
        _, sgn = classify_vzero(p, float(samples[0, 0]))
        if sgn == 0:
            raise NotNonSticking("initial state is not departing transversally")
        up = sgn > 0

    qs = np.empty(len(samples))
    ps = np.empty(len(samples))
    k = 0       # index of the current period-2 cell of the wave
    ev = 0
    for i, (t, x, v) in enumerate(samples):
        while ev < len(wall_times) and wall_times[ev] <= t:
            if wall_kinds[ev] is EventKind.WALL_HIT_RIGHT:
                up = False                 # crossing q = 2k + 1
            else:
                up = True                  # crossing q = 2k + 2
                k += 1
            ev += 1
        w = (x - p.l) / R
        qs[i] = 2.0 * k + (w if up else 2.0 - w)
        ps[i] = abs(v) / R

    u = np.mod(qs, 2.0)
    wq = np.where(u <= 1.0, u, 2.0 - u)
    residual = float(np.max(np.abs(R * wq + p.l - samples[:, 1])))
    monotone = bool(np.all(np.diff(qs) > -1e-12))
    return LiftResult(samples[:, 0].copy(), qs, ps, residual, monotone)


def sigma_half_map(p: Params, z):
    """Half-period symmetry map sigma(z) = -flow_{T/2}(z) for symmetric walls.

    Because the forcing reverses sign after half a period while the friction
    and wall terms are odd, the full period map factors as sigma composed with
    itself on the non-sticking set.
    """
    if not p.symmetric():
        raise ValidationError("the half-period symmetry requires r = -l")
    tr = simulate(p, z, 0.5 * p.T)
    st = tr.final_state
    return (-float(st.x), -float(st.v))


def sigma_square_error(p: Params, z) -> float:
    """sup-norm discrepancy between sigma(sigma(z)) and the period map at z."""
    z2 = sigma_half_map(p, sigma_half_map(p, z))
    z1 = strobo_map(p, z)
    return max(abs(z2[0] - z1[0]), abs(z2[1] - z1[1]))
