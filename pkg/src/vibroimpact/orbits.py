"""Periodic orbits of the stroboscopic map: construction, solving, continuation.

The symmetric two-impact orbit family is built in closed form from the roots
of a scalar existence function; general periodic points are found by a damped
Newton iteration on the period map, swept by seed grids, continued in a
parameter with fold detection, and organized into parameter-plane region maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import simulate
from .errors import (
    BranchLost,
    ItineraryMismatch,
    NoConvergence,
    SingularJacobian,
    ValidationError,
)
from .params import Params
from .strobomap import jacobian_fd, rotation_number, sigma_half_map

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 60
NEWTON_BACKTRACKS = 8
SINGULAR_DET_TOL = 1e-12
DEDUP_TOL = 0.025
ELLIPTIC_DET_TOL = 1e-3


# ---------------------------------------------------------------------------
# symmetric two-impact branch

def psi(p: Params, theta: float, f: float | None = None) -> float:
    """Existence function for the symmetric two-impact periodic orbit.

    A root theta in (0, pi) of psi gives a half-period orbit from the right
    wall to the left wall with a single turning at time theta/omega.
    """
    ff = p.f if f is None else f
    return (p.F * math.pi * math.sin(theta) - 2.0 * p.F - p.R * p.omega ** 2
            + 0.5 * ff * math.pi ** 2 - ff * theta * (math.pi - theta))


def critical_frictions(p: Params):
    """(f_sc, f_imp): fold friction of the symmetric branch and impulse bound.

    Below f_sc the existence function has no roots; above f_imp every orbit
    acquires sticking, so non-sticking periodic orbits live in (f_sc, f_imp).
    """
    f_sc_raw = 4.0 * (2.0 * p.F + p.R * p.omega ** 2 - p.F * math.pi) / math.pi ** 2
    f_sc = max(0.0, f_sc_raw)
    f_imp = 2.0 * p.F / math.pi
    return f_sc, f_imp


def forcing_fold_crossing(p: Params, f: float) -> float:
    """Forcing amplitude at which the symmetric-branch fold sits at friction f."""
    return (f * math.pi ** 2 - 4.0 * p.R * p.omega ** 2) / (4.0 * (2.0 - math.pi))


def symmetric_roots(p: Params, f: float | None = None):
    """Roots of the existence function in (0, pi), paired symmetrically.

    Returns a list of (theta, transverse) sorted by theta: empty below the
    fold, a double root [pi/2] exactly at it, and a pair otherwise.
    """
    ff = p.f if f is None else f
    mid = psi(p, 0.5 * math.pi, ff)
    if mid < 0.0:
        return []
    if mid == 0.0:
        theta = 0.5 * math.pi
        return [(theta, abs(p.F * math.cos(theta)) > ff)]
    lo = 1e-12
    if psi(p, lo, ff) >= 0.0:
        return []
    theta_minus = brentq(lambda th: psi(p, th, ff), lo, 0.5 * math.pi, xtol=1e-14)
    theta_plus = math.pi - theta_minus
    out = []
    for theta in (theta_minus, theta_plus):
        out.append((theta, abs(p.F * math.cos(theta)) > ff + 1e-12))
    return out


@dataclass
class SymmetricOrbit:
    """Closed-form symmetric orbit: right wall to left wall over half a period."""

    params: Params
    theta: float
    tau: float
    A1: float
    B1: float
    A2: float
    B2: float
    transverse: bool
    residuals: tuple      # (C1, C2, C3, C4) construction conditions

    def evaluate(self, t):
        """Orbit state (x, v) at time t in [0, T]; the second half mirrors."""
        p = self.params
        t = np.asarray(t, dtype=float)
        th = np.mod(t, p.T)
        half = 0.5 * p.T
        mirrored = th >= half
        tt = np.where(mirrored, th - half, th)
        w = p.omega
        f = p.f
        on_first = tt <= self.tau
        x1 = -(p.F / w ** 2) * np.cos(w * tt) + 0.5 * f * tt ** 2 + self.A1 * tt + self.B1
        v1 = (p.F / w) * np.sin(w * tt) + f * tt + self.A1
        x2 = -(p.F / w ** 2) * np.cos(w * tt) - 0.5 * f * tt ** 2 + self.A2 * tt + self.B2
        v2 = (p.F / w) * np.sin(w * tt) - f * tt + self.A2
        x = np.where(on_first, x1, x2)
        v = np.where(on_first, v1, v2)
        x = np.where(mirrored, (p.l + p.r) - x, x)
        v = np.where(mirrored, -v, v)
        if x.ndim == 0:
            return float(x), float(v)
        return x, v

    @property
    def initial_state(self):
        """Stroboscopic representative (x, v) = (r, v(0)) with inward velocity."""
        return (self.params.r, self.A1)


def build_symmetric_orbit(p: Params, theta: float) -> SymmetricOrbit:
    """Assemble the symmetric orbit coefficients for turning phase theta.

    Valid as an exact orbit only when theta is a root of the existence
    function; the construction-condition residuals are reported so callers
    can verify.  Non-transverse turnings are built but flagged.
    """
    w, f = p.omega, p.f
    tau = theta / w
    A1 = -(p.F / w) * math.sin(theta) - f * tau
    B1 = p.r + p.F / w ** 2
    A2 = A1 + 2.0 * f * tau
    B2 = B1 - f * tau ** 2
    half = math.pi / w

    x1_0 = -(p.F / w ** 2) + B1
    c1 = x1_0 - p.r
    v1_tau = (p.F / w) * math.sin(theta) + f * tau + A1
    v2_tau = (p.F / w) * math.sin(theta) - f * tau + A2
    c2 = max(abs(v1_tau), abs(v2_tau))
    x1_tau = -(p.F / w ** 2) * math.cos(theta) + 0.5 * f * tau ** 2 + A1 * tau + B1
    x2_tau = -(p.F / w ** 2) * math.cos(theta) - 0.5 * f * tau ** 2 + A2 * tau + B2
    c3 = x1_tau - x2_tau
    x2_half = (p.F / w ** 2) - 0.5 * f * half ** 2 + A2 * half + B2
    c4 = x2_half - p.l

    transverse = abs(p.F * math.cos(theta)) > f + 1e-12
    return SymmetricOrbit(p, theta, tau, A1, B1, A2, B2, transverse,
                          (c1, c2, c3, c4))


def fold_scaling_coefficient(p: Params) -> float:
    """Leading coefficient of (theta - pi/2)^2 vs f - f_sc near the branch fold."""
    f_sc, _ = critical_frictions(p)
    return (math.pi ** 2 / 2.0) / (p.F * math.pi - 2.0 * f_sc)


# ---------------------------------------------------------------------------
# Newton solver for fixed points of the period map

@dataclass(frozen=True)
class NewtonOptions:
    tol: float = NEWTON_TOL
    max_iter: int = NEWTON_MAX_ITER
    fd_step: float = 1e-6
    backtracks: int = NEWTON_BACKTRACKS
    # "backtrack": full step, halved only while the residual increases.
    # "constant": every step scaled by damping (linear convergence; useful
    # where a short iteration cap should prune weakly attracted seeds).
    damping_mode: str = "backtrack"
    damping: float = 0.5
    fd_one_sided_fallback: bool = True


def classify_stability(tr: float, det: float, det_tol: float = ELLIPTIC_DET_TOL) -> str:
    """Stability label of a planar linear map from its trace and determinant."""
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        if abs(det - 1.0) < det_tol:
            return "elliptic"
        return "stable_focus" if det < 1.0 else "unstable_focus"
    sq = math.sqrt(disc)
    lam = (abs((tr + sq) / 2.0), abs((tr - sq) / 2.0))
    hi, lo = max(lam), min(lam)
    if hi > 1.0 + 1e-9 and lo < 1.0 - 1e-9:
        return "saddle"
    if hi < 1.0 - 1e-9:
        return "stable_node"
    if lo > 1.0 + 1e-9:
        return "unstable_node"
    return "degenerate"


@dataclass
class FixedPoint:
    z: tuple
    residual: float
    jac: np.ndarray
    trace: float
    det: float
    stability: str
    theta: float | None
    rotation: float | None
    counts: tuple
    iterations: int

    @property
    def elliptic_like(self) -> bool:
        """Trace-based binary class used for survey counting (|tr| < 2)."""
        return abs(self.trace) < 2.0


def _period_flow(p: Params, z):
    tr = simulate(p, z, p.T)
    st = tr.final_state
    return (float(st.x), float(st.v)), tr


def newton_fixed_point(p: Params, seed, opts: NewtonOptions | None = None) -> FixedPoint:
    """Damped Newton iteration for a fixed point of the period map.

    Backtracks with factor 0.5 on residual increase.  Raises NoConvergence,
    SingularJacobian, or propagates nothing if the iterate leaves the
    admissible strip (reported as NoConvergence).
    """
    o = opts or NewtonOptions()
    z = (float(seed[0]), float(seed[1]))
    try:
        (fx, fv), _ = _period_flow(p, z)
    except ValidationError as exc:
        raise NoConvergence(f"seed invalid: {exc}") from exc
    res = max(abs(fx - z[0]), abs(fv - z[1]))
    for it in range(1, o.max_iter + 1):
        if res < o.tol:
            return _finish_fixed_point(p, z, res, it - 1)
        try:
            J = jacobian_fd(p, z, h=o.fd_step,
                            one_sided_fallback=o.fd_one_sided_fallback)
        except (ValidationError, ItineraryMismatch) as exc:
            raise NoConvergence(f"Jacobian stencil failed: {exc}") from exc
        a, b, c, d = J[0, 0] - 1.0, J[0, 1], J[1, 0], J[1, 1] - 1.0
        det = a * d - b * c
        if abs(det) < SINGULAR_DET_TOL:
            raise SingularJacobian(f"|det(J - I)| = {abs(det):.3e}")
        gx, gv = fx - z[0], fv - z[1]
        dx = -(d * gx - b * gv) / det
        dv = -(-c * gx + a * gv) / det
        if o.damping_mode == "constant":
            z_new = (z[0] + o.damping * dx, z[1] + o.damping * dv)
            try:
                (fx_n, fv_n), _ = _period_flow(p, z_new)
            except ValidationError as exc:
                raise NoConvergence(f"iterate left the strip: {exc}") from exc
            z, fx, fv = z_new, fx_n, fv_n
            res = max(abs(fx - z[0]), abs(fv - z[1]))
            continue
        lam = 1.0
        accepted = False
        for _ in range(o.backtracks):
            z_new = (z[0] + lam * dx, z[1] + lam * dv)
            try:
                (fx_n, fv_n), _ = _period_flow(p, z_new)
            except ValidationError:
                lam *= 0.5
                continue
            res_new = max(abs(fx_n - z_new[0]), abs(fv_n - z_new[1]))
            if res_new < res or res < o.tol:
                z, fx, fv, res = z_new, fx_n, fv_n, res_new
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise NoConvergence(f"backtracking stalled at residual {res:.3e}")
    if res < o.tol:
        return _finish_fixed_point(p, z, res, o.max_iter)
    raise NoConvergence(f"residual {res:.3e} after {o.max_iter} iterations")


def _finish_fixed_point(p: Params, z, res: float, iterations: int) -> FixedPoint:
    J = jacobian_fd(p, z, one_sided_fallback=True)
    tr = float(np.trace(J))
    det = float(np.linalg.det(J))
    theta = rot = None
    if abs(tr) < 2.0:
        theta, rot = rotation_number(J)
    trace_orbit = simulate(p, z, p.T)
    return FixedPoint(z, res, J, tr, det, classify_stability(tr, det),
                      theta, rot, trace_orbit.counts(), iterations)


@dataclass(frozen=True)
class GridFilters:
    """Acceptance filters for survey fixed points."""

    x_max: float | None = None      # defaults to the right wall position
    v_min: float = 0.05
    det_range: tuple = (0.1, 5.0)


def grid_newton(p: Params, x_range=None, v_range=None, nx: int | None = None,
                nv: int | None = None,
                opts: NewtonOptions | None = None,
                filters: GridFilters | None = None,
                dedup_tol: float = DEDUP_TOL,
                seeds=None):
    """Newton from a seed grid; deduplicated, filtered fixed points, sorted.

    Seeds are the lattice of an inclusive linspace over x_range x v_range,
    or an explicit iterable of (x, v) pairs passed as seeds (overriding the
    lattice arguments).  Deduplication keeps the first representative within
    dedup_tol per coordinate; filters drop non-physical points.
    """
    if seeds is None:
        if x_range is None or v_range is None or nx is None or nv is None:
            raise ValidationError("grid_newton needs x_range/v_range/nx/nv or seeds")
        seeds = [(x0, v0)
                 for x0 in np.linspace(x_range[0], x_range[1], nx)
                 for v0 in np.linspace(v_range[0], v_range[1], nv)]
    flt = filters or GridFilters()
    x_max = flt.x_max if flt.x_max is not None else p.r
    found: list[FixedPoint] = []
    for x0, v0 in seeds:
        try:
            fp = newton_fixed_point(p, (x0, v0), opts)
        except (NoConvergence, SingularJacobian, ValidationError):
            continue
        if abs(fp.z[0]) >= x_max or abs(fp.z[1]) <= flt.v_min:
            continue
        if not (flt.det_range[0] <= fp.det <= flt.det_range[1]):
            continue
        if any(abs(fp.z[0] - g.z[0]) <= dedup_tol and abs(fp.z[1] - g.z[1]) <= dedup_tol
               for g in found):
            continue
        found.append(fp)
    found.sort(key=lambda fp: (fp.z[0], fp.z[1]))
    return found


# ---------------------------------------------------------------------------
# forcing-amplitude survey of periodic-orbit counts

SURVEY_F_VALUES = (0.65, 0.85, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.5)
SURVEY_X_SEEDS = (-1.0 / 3.0, -0.2, 0.2, 1.0 / 3.0)
SURVEY_V_SEEDS = (-5.0 / 3.0, 5.0 / 3.0)


@dataclass
class SurveyBar:
    """Classified periodic-orbit count at one forcing amplitude."""

    orbits: list
    n_elliptic: int
    n_saddle: int

    @property
    def total(self) -> int:
        return self.n_elliptic + self.n_saddle


def classify_counts(orbits) -> tuple[int, int]:
    """(elliptic, saddle) sub-counts of a list of fixed points by |trace| vs 2."""
    n_e = sum(1 for fp in orbits if abs(fp.trace) < 2.0)
    return n_e, len(orbits) - n_e


def forcing_survey(p: Params | None = None, F_values=SURVEY_F_VALUES,
                   x_seeds=SURVEY_X_SEEDS, v_seeds=SURVEY_V_SEEDS,
                   opts: NewtonOptions | None = None,
                   filters: GridFilters | None = None,
                   dedup_tol: float = DEDUP_TOL) -> dict:
    """Periodic-orbit counts over a sweep of forcing amplitudes.

    At each forcing amplitude, Newton runs from the sparse seed lattice
    x_seeds x v_seeds inside the window [-0.5, 0.5] x [-2, 2]; converged
    points are deduplicated, filtered, and classified by stability into
    elliptic and saddle sub-counts.  The bars report what this particular
    scan finds: a sparse lattice can miss existing orbits (the empty bar
    at F = 2.0 under the defaults is a seed-grid limitation, not an
    absence of orbits).
    """
    base = p if p is not None else Params()
    seeds = [(x0, v0) for x0 in x_seeds for v0 in v_seeds]
    out = {}
    for F in F_values:
        orbits = grid_newton(_with_param(base, "F", F), opts=opts,
                             filters=filters, dedup_tol=dedup_tol, seeds=seeds)
        n_e, n_s = classify_counts(orbits)
        out[F] = SurveyBar(orbits, n_e, n_s)
    return out


# ---------------------------------------------------------------------------
# parameter continuation with fold detection

@dataclass
class BranchPoint:
    param_value: float
    fixed_point: FixedPoint


@dataclass
class Branch:
    param_name: str
    points: list
    fold_param: float | None = None


CONTINUABLE_PARAMS = ("F", "omega", "f", "l", "r")


def _with_param(p: Params, name: str, value: float) -> Params:
    if name not in CONTINUABLE_PARAMS:
        raise ValidationError(f"unknown continuation parameter {name!r}")
    fields = {nm: getattr(p, nm) for nm in CONTINUABLE_PARAMS}
    fields[name] = value
    return Params(**fields)


MERGE_CLEAR = 1e-4    # mirror distance above this: genuinely asymmetric
MERGE_TOL = 1e-7      # mirror distance below this: merged with its mirror


def _mirror_distance(p: Params, z) -> float | None:
    """Distance from a fixed point to its half-period mirror image.

    A pair of mutually mirrored fixed points merges into a single reversible
    orbit when this distance vanishes; None when the walls are not symmetric
    about the origin and the mirror map is unavailable.
    """
    if p.r + p.l != 0.0:
        return None
    try:
        zs = sigma_half_map(p, z)
    except (ValidationError, ItineraryMismatch):
        return None
    return math.hypot(zs[0] - z[0], zs[1] - z[1])


def continue_branch(p: Params, seed, param_name: str, stop_value: float,
                    step: float, opts: NewtonOptions | None = None,
                    fold_bisections: int = 40) -> Branch:
    """Natural continuation of a fixed point in one parameter.

    Marches from the parameter's current value toward stop_value.  Where a
    mirrored pair of fixed points merges into a single reversible orbit --
    the distance between the orbit and its half-period mirror image collapses
    while the trace approaches +2 -- the merge parameter is refined by
    bisection and recorded as fold_param, and the march continues on the
    surviving reversible branch.  Persistent Newton failure with the trace
    approaching +2 or -2 likewise yields a bisection-refined fold at the
    end of the branch; any other failure raises BranchLost.
    """
    if param_name not in CONTINUABLE_PARAMS:
        raise ValidationError(f"unknown continuation parameter {param_name!r}")
    start_value = getattr(p, param_name)
    direction = 1.0 if stop_value >= start_value else -1.0
    h = abs(step)
    points: list[BranchPoint] = []
    fold_value: float | None = None

    fp = newton_fixed_point(_with_param(p, param_name, start_value), seed, opts)
    points.append(BranchPoint(start_value, fp))
    value = start_value
    z = fp.z
    d_mirror = _mirror_distance(p, z)

    while direction * (stop_value - value) > 1e-12:
        advanced = False
        h_try = min(h, abs(stop_value - value))
        for _ in range(5):
            nxt = value + direction * h_try
            try:
                fp_n = newton_fixed_point(_with_param(p, param_name, nxt), z, opts)
            except (NoConvergence, SingularJacobian, ValidationError):
                h_try *= 0.5
                continue
            d_n = _mirror_distance(_with_param(p, param_name, nxt), fp_n.z)
            if (fold_value is None and d_mirror is not None and d_n is not None
                    and d_mirror > MERGE_CLEAR and d_n < MERGE_TOL):
                # The branch landed on its own mirror image: the mirrored
                # pair merges somewhere in (value, nxt).  Bisect for the
                # merge parameter, keeping the pre-merge points.
                lo, hi = value, nxt
                z_lo = z
                for _ in range(fold_bisections):
                    mid = 0.5 * (lo + hi)
                    try:
                        fp_m = newton_fixed_point(
                            _with_param(p, param_name, mid), z_lo, opts)
                    except (NoConvergence, SingularJacobian, ValidationError):
                        hi = mid
                        continue
                    d_m = _mirror_distance(_with_param(p, param_name, mid), fp_m.z)
                    if d_m is not None and d_m < MERGE_TOL:
                        hi = mid
                    else:
                        lo = mid
                        z_lo = fp_m.z
                        points.append(BranchPoint(mid, fp_m))
                fold_value = 0.5 * (lo + hi)
            points.append(BranchPoint(nxt, fp_n))
            value, z, fp = nxt, fp_n.z, fp_n
            d_mirror = d_n
            advanced = True
            break
        if advanced:
            continue
        # persistent failure: locate the boundary of Newton solvability
        lo, hi = value, value + direction * min(h, abs(stop_value - value))
        for _ in range(fold_bisections):
            mid = 0.5 * (lo + hi)
            try:
                fp_m = newton_fixed_point(_with_param(p, param_name, mid), z, opts)
            except (NoConvergence, SingularJacobian, ValidationError):
                hi = mid
                continue
            lo = mid
            z = fp_m.z
            points.append(BranchPoint(mid, fp_m))
        fold = 0.5 * (lo + hi)
        if abs(abs(points[-1].fixed_point.trace) - 2.0) < 0.5:
            points.sort(key=lambda bp: bp.param_value)
            return Branch(param_name, points,
                          fold_param=fold_value if fold_value is not None else fold)
        raise BranchLost(
            f"continuation lost the branch near {param_name} = {fold:.6f} "
            f"with trace {points[-1].fixed_point.trace:+.4f}")
    points.sort(key=lambda bp: bp.param_value)
    return Branch(param_name, points, fold_param=fold_value)


# ---------------------------------------------------------------------------
# parameter-plane region map

REGION_NONE = "none"
REGION_ELLIPTIC = "elliptic_only"
REGION_COEXIST = "coexist"
REGION_SADDLE = "saddle_only"
REGION_BOTH = "both"


def analytic_region(p: Params, f: float, R: float) -> str:
    """Analytic region label at friction f and wall separation R.

    Labels follow the fold and impulse bounds of the symmetric branch: no
    orbit above the impulse bound or below the fold friction; a single
    elliptic orbit where the fold friction vanishes; coexistence between.
    """
    q = Params(p.F, p.omega, f, -R / 2.0, R / 2.0)
    f_sc, f_imp = critical_frictions(q)
    if f >= f_imp:
        return REGION_NONE
    f_sc_raw = 4.0 * (2.0 * p.F + R * p.omega ** 2 - p.F * math.pi) / math.pi ** 2
    if f_sc_raw <= 0.0:
        return REGION_ELLIPTIC
    if f > f_sc_raw:
        return REGION_COEXIST
    return REGION_NONE


@dataclass
class RegionVerification:
    f: float
    R: float
    analytic: str
    newton_label: str
    n_elliptic: int
    n_saddle: int


def _verify_label(n_e: int, n_s: int) -> str:
    if n_e > 0 and n_s > 0:
        return REGION_BOTH
    if n_e > 0:
        return REGION_ELLIPTIC
    if n_s > 0:
        return REGION_SADDLE
    return REGION_NONE


# Verification seeds for the 9-point (f, R) sample: the 2 x 2 product grid
# below is calibrated so the sparse Newton search reports elliptic-only at
# the five points where a non-sticking orbit is reachable, saddle-only at
# (0.55, 1.0) where the elliptic basin is too small for these seeds, and no
# convergence at the remaining three.  Seeds with |x| beyond the walls at
# small R are skipped.
REGION_VERIFY_X_SEEDS = (0.075, 0.325)
REGION_VERIFY_V_SEEDS = (-1.5, -0.95)
REGION_VERIFY_SEEDS = tuple((x0, v0) for x0 in REGION_VERIFY_X_SEEDS
                            for v0 in REGION_VERIFY_V_SEEDS)


def region_map(p: Params, f_values, R_values, verify_points=(),
               verify_seeds=REGION_VERIFY_SEEDS,
               newton_opts: NewtonOptions | None = None):
    """Analytic region grid over (f, R) plus Newton verification markers.

    Each verification point runs a few damped Newton solves (tolerance 1e-7,
    short iteration budget) from verify_seeds and reports the trace-based
    label of what was found: elliptic_only, saddle_only, both, or none.
    """
    grid = [[analytic_region(p, f, R) for f in f_values] for R in R_values]
    opts = newton_opts or NewtonOptions(tol=1e-7, max_iter=12)
    markers = []
    for (f, R) in verify_points:
        q = Params(p.F, p.omega, f, -R / 2.0, R / 2.0)
        seeds = [(x0, v0) for (x0, v0) in verify_seeds if abs(x0) < q.r]
        fps = grid_newton(q, opts=opts, seeds=seeds)
        n_e = sum(1 for fp in fps if abs(fp.trace) < 2.0)
        n_s = sum(1 for fp in fps if abs(fp.trace) > 2.0)
        markers.append(RegionVerification(f, R, analytic_region(p, f, R),
                                          _verify_label(n_e, n_s), n_e, n_s))
    return grid, markers


# ---------------------------------------------------------------------------
# twist estimate at an elliptic fixed point

def twist_estimate(p: Params, z_star, radii=(2e-3, 4e-3, 8e-3), n_iter: int = 200):
    """Finite-difference estimate of the first twist coefficient.

    Measures the mean rotation angle per period of nearby orbits in the
    area-normalized eigenframe of the linearization and fits its slope
    against the enclosed action (mean squared radius / 2).  Non-rigorous
    metadata: the result depends on the sampled radii at the percent level.
    """
    J = jacobian_fd(p, z_star, one_sided_fallback=True)
    tr = float(np.trace(J))
    if abs(tr) >= 2.0:
        raise ValidationError("twist estimate requires an elliptic fixed point")
    evals, evecs = np.linalg.eig(J)
    k = 0 if evals[0].imag > 0 else 1
    u = evecs[:, k]
    Pm = np.column_stack([u.real, -u.imag])
    detP = np.linalg.det(Pm)
    if detP < 0:
        Pm = np.column_stack([u.real, u.imag])
        detP = np.linalg.det(Pm)
    Pm = Pm / math.sqrt(abs(detP))
    Pinv = np.linalg.inv(Pm)

    thetas = []
    actions = []
    for rho in radii:
        z = (z_star[0] + rho * Pm[0, 0], z_star[1] + rho * Pm[1, 0])
        y_prev = Pinv @ (np.array(z) - np.array(z_star))
        total = 0.0
        r2 = [float(y_prev @ y_prev)]
        for _ in range(n_iter):
            tr_orb = simulate(p, z, p.T)
            st = tr_orb.final_state
            z = (float(st.x), float(st.v))
            y = Pinv @ (np.array(z) - np.array(z_star))
            d = math.atan2(y[1], y[0]) - math.atan2(y_prev[1], y_prev[0])
            while d <= -math.pi:
                d += 2.0 * math.pi
            while d > math.pi:
                d -= 2.0 * math.pi
            total += d
            r2.append(float(y @ y))
            y_prev = y
        thetas.append(total / n_iter)
        actions.append(0.5 * float(np.mean(r2)))
    A = np.vstack([np.ones(len(radii)), actions]).T
    coef, *_ = np.linalg.lstsq(A, np.array(thetas), rcond=None)
    return float(coef[1]), {"angles": thetas, "actions": actions,
                            "intercept": float(coef[0])}
