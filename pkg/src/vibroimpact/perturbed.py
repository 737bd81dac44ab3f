"""Viscous damping and inelastic walls: the dissipative perturbation.

Flights obey x'' + mu_v x' + f sgn(x') = F cos(omega t), solved in closed
form with the exponential homogeneous part handled by expm1 and a short
series where the damping-time product is tiny.  Wall reflections retain a
fraction e = 1 - eps of the impact speed.  Each flight of duration dt
contracts phase-space area by exp(-mu_v dt) and each wall hit by e^2, so a
period-T orbit with n_w wall hits and no turning points has period-map
determinant exp(-mu_v T) (1-eps)^(2 n_w).  The module continues an elliptic
fixed point of the ideal model into the dissipative one and verifies that
contraction law spectrally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MAX_EVENTS,
    WALL_KINDS,
    EventKind,
    OrbitTrace,
    _Dynamics,
    _simulate,
    flight_propagate,
)
from .errors import (
    EigenvaluesReal,
    NoConvergence,
    NotElliptic,
    SingularJacobian,
    StickingOnPath,
    ValidationError,
)
from .params import PerturbedParams
from .strobomap import fd_jacobian_of, turning_saltation

# below this value of mu_v * dt the difference quotients of the exponential
# are evaluated by series to avoid cancellation
SERIES_THRESHOLD = 1e-4

CONTINUE_TOL = 1e-12
CONTINUE_MAX_ITER = 40
CONTINUE_BACKTRACKS = 8
SINGULAR_DET_TOL = 1e-12


def _g1_scalar(mu: float, dt: float) -> float:
    """(1 - exp(-mu dt)) / mu, the integral of the decay factor."""
    return -math.expm1(-mu * dt) / mu


def _g2_scalar(mu: float, dt: float) -> float:
    """(dt - g1) / mu, the double integral of the decay factor."""
    u = mu * dt
    if abs(u) < SERIES_THRESHOLD:
        return dt * dt * (0.5 - u / 6.0 + u * u / 24.0
                          - u ** 3 / 120.0 + u ** 4 / 720.0)
    return (dt - _g1_scalar(mu, dt)) / mu


def _g2_array(mu: float, dt: np.ndarray) -> np.ndarray:
    u = mu * dt
    with np.errstate(invalid="ignore"):
        out = (dt + np.expm1(-u) / mu) / mu
    small = np.abs(u) < SERIES_THRESHOLD
    if np.any(small):
        us = u[small]
        ds = dt[small]
        out[small] = ds * ds * (0.5 - us / 6.0 + us * us / 24.0
                                - us ** 3 / 120.0 + us ** 4 / 720.0)
    return out


def viscous_flight(pp: PerturbedParams, t0: float, x0: float, v0: float, s: int, t):
    """Damped flight state (x, v) at time t for constant velocity sign s.

    Solves x'' + mu_v x' = F cos(w t) - s f exactly.  ``t`` may be a scalar
    or an array.  At mu_v = 0 this is the undamped flight, evaluated by the
    same expressions as flight_propagate.
    """
    p = pp.base
    mu = pp.mu_v
    if mu == 0.0:
        return flight_propagate(p, t0, x0, v0, s, t)
    w = p.omega
    scalar = not isinstance(t, np.ndarray)
    if scalar:
        sin, cos, exp = math.sin, math.cos, math.exp
        g2 = _g2_scalar(mu, t - t0)
    else:
        sin, cos, exp = np.sin, np.cos, np.exp
        g2 = _g2_array(mu, t - t0)
    dt = t - t0
    K = p.F / (mu * mu + w * w)
    s0 = math.sin(w * t0)
    c0 = math.cos(w * t0)
    p0 = mu * c0 + w * s0
    sf = s * p.f
    st = sin(w * t)
    ct = cos(w * t)
    decay = exp(-mu * dt)
    g1 = -math.expm1(-mu * dt) / mu if scalar else -np.expm1(-mu * dt) / mu
    v = decay * v0 + K * ((mu * ct + w * st) - decay * p0) - sf * g1
    x = x0 + g1 * v0 + K * ((mu / w) * (st - s0) - (ct - c0) - p0 * g1) - sf * g2
    return x, v


def _viscous_dynamics(pp: PerturbedParams) -> _Dynamics:
    """Event-engine dynamics bundle for the damped, lossy-wall model.

    The friction and forcing terms entering event classification are those
    of the base parameters; the viscous force vanishes on the v = 0 surface,
    so sticking and grazing logic carries over unchanged.
    """
    p = pp.base
    if pp.mu_v == 0.0:
        elastic = _Dynamics.elastic(p)
        return _Dynamics(p, pp, 1.0 - pp.eps, elastic.flight, elastic.scalar_funs)
    mu = pp.mu_v
    w = p.omega
    K = p.F / (mu * mu + w * w)

    def flight(t0, x0, v0, s, t):
        return viscous_flight(pp, t0, x0, v0, s, t)

    def scalar_funs(t0, x0, v0, s):
        s0 = math.sin(w * t0)
        c0 = math.cos(w * t0)
        p0 = mu * c0 + w * s0
        sf = s * p.f

        def xfun(t):
            dt = t - t0
            g1 = -math.expm1(-mu * dt) / mu
            st = math.sin(w * t)
            ct = math.cos(w * t)
            return (x0 + g1 * v0 + K * ((mu / w) * (st - s0) - (ct - c0) - p0 * g1)
                    - sf * _g2_scalar(mu, dt))

        def vfun(t):
            dt = t - t0
            decay = math.exp(-mu * dt)
            st = math.sin(w * t)
            ct = math.cos(w * t)
            return (decay * v0 + K * ((mu * ct + w * st) - decay * p0)
                    + sf * math.expm1(-mu * dt) / mu)

        return xfun, vfun

    return _Dynamics(p, pp, 1.0 - pp.eps, flight, scalar_funs)


def perturbed_simulate(pp: PerturbedParams, z0, t_span: float, sample_dt=None,
                       max_events: int = MAX_EVENTS, stop_on=None) -> OrbitTrace:
    """Simulate the damped, lossy-wall oscillator from z0 at phase zero."""
    return _simulate(_viscous_dynamics(pp), z0, t_span, sample_dt, max_events, stop_on)


def perturbed_strobo(pp: PerturbedParams, z, n_periods: int = 1):
    """Apply the time-T map of the perturbed model n_periods times to z."""
    tr = perturbed_simulate(pp, z, n_periods * pp.base.T)
    st = tr.final_state
    return (float(st.x), float(st.v))


def perturbed_jacobian_fd(pp: PerturbedParams, z, h: float = 1e-6,
                          one_sided_fallback: bool = False):
    """Finite-difference derivative of the perturbed period map at z."""

    def flow(y):
        tr = perturbed_simulate(pp, y, pp.base.T)
        st = tr.final_state
        return (float(st.x), float(st.v)), tr.itinerary()

    return fd_jacobian_of(flow, z, h, one_sided_fallback=one_sided_fallback)


def flight_variational(pp: PerturbedParams, dt: float) -> np.ndarray:
    """Fundamental matrix of a damped flight of duration dt.

    [[1, g1], [0, exp(-mu_v dt)]] with g1 = (1 - exp(-mu_v dt)) / mu_v;
    its determinant is exp(-mu_v dt).  At mu_v = 0 this is the plain shear.
    """
    if dt < 0.0:
        raise ValidationError("flight duration must be nonnegative")
    mu = pp.mu_v
    if mu == 0.0:
        return np.array([[1.0, dt], [0.0, 1.0]])
    return np.array([[1.0, _g1_scalar(mu, dt)], [0.0, math.exp(-mu * dt)]])


def inelastic_saltation(t_star: float, v_minus: float, pp: PerturbedParams) -> np.ndarray:
    """Linearized correction at a lossy wall hit with pre-impact speed v_minus.

    Diagonal (-e, -e) with off-diagonal
    ((1+e) F cos(w t*) + (1-e) f sgn(v-)) / v-; the viscous force drops out
    of the jump in acceleration, and the determinant is e^2 = (1-eps)^2.
    At eps = 0 this is the elastic wall correction.
    """
    if v_minus == 0.0:
        raise ValidationError("wall saltation requires a nonzero impact speed")
    p = pp.base
    e = 1.0 - pp.eps
    c_star = p.F * math.cos(p.omega * t_star)
    alpha = ((1.0 + e) * c_star
             + (1.0 - e) * p.f * math.copysign(1.0, v_minus)) / v_minus
    return np.array([[-e, 0.0], [alpha, -e]])


def perturbed_jacobian(pp: PerturbedParams, z, trace: OrbitTrace | None = None):
    """Derivative of the perturbed period map as a product of exact factors.

    Chains damped-flight fundamental matrices with lossy-wall and turning
    corrections along the event sequence.  Returns (J, factors).  Raises
    StickingOnPath when the period contains a sticking event.
    """
    tr = trace if trace is not None else perturbed_simulate(pp, z, pp.base.T)
    M = np.eye(2)
    t_prev = 0.0
    factors = []
    for e in tr.events:
        if e.kind in (EventKind.STICK_ONSET, EventKind.STICK_RELEASE, EventKind.TANGENTIAL_TOUCH):
            raise StickingOnPath("period contains a sticking event; derivative is singular")
        M = flight_variational(pp, e.time - t_prev) @ M
        if e.kind in WALL_KINDS:
            S = inelastic_saltation(e.time, e.state_before.v, pp)
        else:
            S = turning_saltation(pp.base, e.time)
        M = S @ M
        factors.append({
            "kind": e.kind.value,
            "time": e.time,
            "det_factor": float(np.linalg.det(S)),
        })
        t_prev = e.time
    M = flight_variational(pp, tr.t_span - t_prev) @ M
    return M, factors


@dataclass(frozen=True)
class RhoLaw:
    """Leading-order and exact period-map contraction factors."""

    leading: float
    exact: float


def rho(pp: PerturbedParams, n_star: int, T: float) -> RhoLaw:
    """Contraction of the period-map determinant for n_star wall hits.

    leading = 1 - 2 n* eps - mu_v T; exact = exp(-mu_v T) (1-eps)^(2 n*).
    Valid for orbits without turning points (turnings contribute extra
    friction factors).
    """
    if n_star < 0:
        raise ValidationError("wall-hit count must be nonnegative")
    leading = 1.0 - 2.0 * n_star * pp.eps - pp.mu_v * T
    exact = math.exp(-pp.mu_v * T) * (1.0 - pp.eps) ** (2 * n_star)
    return RhoLaw(leading=leading, exact=exact)


@dataclass(frozen=True)
class PersistenceReport:
    """Spectral record of a fixed point continued into the perturbed model."""

    z_star: tuple
    n_star: int
    rho_predicted: float
    det_measured: float
    eigenvalue_moduli: tuple
    trace: float
    residual: float
    iterations: int


def continue_fixed_point(pp: PerturbedParams, seed, tol: float = CONTINUE_TOL,
                         max_iter: int = CONTINUE_MAX_ITER):
    """Newton-refine a fixed point of the perturbed period map from seed.

    Uses the exact variational product as the Jacobian and damps steps by
    backtracking on the residual.  Returns (z, residual, iterations).
    """
    z = np.array([float(seed[0]), float(seed[1])])
    tr = perturbed_simulate(pp, z, pp.base.T)
    st = tr.final_state
    G = np.array([st.x - z[0], st.v - z[1]])
    res = float(np.max(np.abs(G)))
    for it in range(1, max_iter + 1):
        if res < tol:
            return (float(z[0]), float(z[1])), res, it - 1
        J, _ = perturbed_jacobian(pp, z, tr)
        A = J - np.eye(2)
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) < SINGULAR_DET_TOL:
            raise SingularJacobian("period map derivative has an eigenvalue too close to 1")
        step = np.array([(A[1, 1] * G[0] - A[0, 1] * G[1]) / det,
                         (A[0, 0] * G[1] - A[1, 0] * G[0]) / det])
        lam = 1.0
        for _ in range(CONTINUE_BACKTRACKS + 1):
            z_new = z - lam * step
            try:
                tr_new = perturbed_simulate(pp, z_new, pp.base.T)
            except ValidationError:
                lam *= 0.5
                continue
            st = tr_new.final_state
            G_new = np.array([st.x - z_new[0], st.v - z_new[1]])
            res_new = float(np.max(np.abs(G_new)))
            if res_new < res or lam <= 1.0 / 2 ** CONTINUE_BACKTRACKS:
                z, tr, G, res = z_new, tr_new, G_new, res_new
                break
            lam *= 0.5
        else:
            raise NoConvergence("backtracking could not reduce the residual")
    if res < tol:
        return (float(z[0]), float(z[1])), res, max_iter
    raise NoConvergence(f"no fixed point within {max_iter} iterations (residual {res:.3e})")


def perturbed_spectrum(pp: PerturbedParams, seed) -> PersistenceReport:
    """Continue an elliptic fixed point into the perturbed model and measure it.

    The seed must converge to an elliptic fixed point of the ideal model;
    that point is then continued under (eps, mu_v), its period map derivative
    is evaluated as an exact variational product, and the determinant is
    compared with the contraction law.  Raises EigenvaluesReal when the
    continued point no longer carries a complex eigenvalue pair.
    """
    from .orbits import newton_fixed_point

    base_fp = newton_fixed_point(pp.base, seed)
    if abs(base_fp.trace) >= 2.0:
        raise NotElliptic("the unperturbed fixed point is not elliptic")
    z, res, iters = continue_fixed_point(pp, base_fp.z)
    tr = perturbed_simulate(pp, z, pp.base.T)
    J, _ = perturbed_jacobian(pp, z, tr)
    det = float(np.linalg.det(J))
    trace = float(J[0, 0] + J[1, 1])
    disc = trace * trace - 4.0 * det
    if disc >= 0.0:
        raise EigenvaluesReal("no complex eigenvalue pair at this perturbation strength")
    n_star = sum(1 for e in tr.events if e.kind in WALL_KINDS)
    law = rho(pp, n_star, pp.base.T)
    modulus = math.sqrt(det)
    return PersistenceReport(
        z_star=z,
        n_star=n_star,
        rho_predicted=law.exact,
        det_measured=det,
        eigenvalue_moduli=(modulus, modulus),
        trace=trace,
        residual=res,
        iterations=iters,
    )
