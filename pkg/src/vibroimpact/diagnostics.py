"""Chaos and basin diagnostics for the stroboscopic map.

SALI tracks two deviation vectors through the linearized period map and
measures their alignment: on regular orbits the smaller of the aligned and
anti-aligned norms decays at most polynomially, on chaotic orbits it
collapses exponentially, and orbits that stick are reported as such.  A
basin grid labels cells by whether the orbit stays on the wall-to-wall
(non-sticking, area-preserving) branch or picks up turning or sticking
events (dissipative branch), and the basin entropy quantifies how finely
the two labels interleave.  The Benettin pair estimates both Lyapunov
exponents with per-step QR reorthonormalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import EventKind, simulate
from .errors import UndefinedDiagnostic
from .params import Params
from .strobomap import fd_jacobian_of

SALI_THRESHOLD = -2.5   # log10 alignment index separating regular from chaotic
SALI_FLOOR = 1e-300     # guards the logarithm when the vectors fully align

# any of these events removes the orbit from the non-sticking branch
DISSIPATIVE_KINDS = (
    EventKind.TURNING_TRANSVERSE,
    EventKind.STICK_ONSET,
    EventKind.STICK_RELEASE,
    EventKind.TANGENTIAL_TOUCH,
)

STICKING_KINDS = (
    EventKind.STICK_ONSET,
    EventKind.STICK_RELEASE,
    EventKind.TANGENTIAL_TOUCH,
)


class SaliCategory(Enum):
    REGULAR = "regular"
    CHAOTIC = "chaotic"
    STICKING = "sticking"


@dataclass(frozen=True)
class SaliResult:
    """Alignment-index record for one initial condition."""

    log10_sali: float | None
    category: SaliCategory
    history: tuple

    @property
    def defined(self) -> bool:
        return self.log10_sali is not None


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid of initial conditions centered on a reference point."""

    center: tuple
    half_width_x: float
    half_width_v: float
    nx: int
    nv: int

    def points(self):
        xs = np.linspace(self.center[0] - self.half_width_x,
                         self.center[0] + self.half_width_x, self.nx)
        vs = np.linspace(self.center[1] - self.half_width_v,
                         self.center[1] + self.half_width_v, self.nv)
        return xs, vs


def _orthonormal_pair(rng) -> np.ndarray:
    ang = rng.uniform(0.0, 2.0 * math.pi)
    w1 = np.array([math.cos(ang), math.sin(ang)])
    w2 = np.array([-math.sin(ang), math.cos(ang)])
    return np.column_stack([w1, w2])


def sali(p: Params, z0, n_periods: int, rng_seed=0) -> SaliResult:
    """Smaller alignment index of two deviation vectors after n_periods.

    The deviation pair starts orthonormal at a random angle, is propagated
    through the finite-difference period-map Jacobian along the orbit, and
    is renormalized each period.  If the orbit encounters a sticking event
    within the window the index is undefined and the point is classified as
    sticking.
    """
    if n_periods < 1:
        raise ValueError("n_periods must be at least 1")
    rng = np.random.default_rng(rng_seed)
    W = _orthonormal_pair(rng)
    z = (float(z0[0]), float(z0[1]))
    history = []
    for _ in range(n_periods):
        tr = simulate(p, z, p.T)
        if any(e.kind in STICKING_KINDS for e in tr.events):
            return SaliResult(None, SaliCategory.STICKING, tuple(history))
        J = fd_jacobian_of(lambda y: _flow_state_itin(p, y), z, one_sided_fallback=True)
        W = J @ W
        for j in range(2):
            norm = float(np.hypot(W[0, j], W[1, j]))
            if norm == 0.0:
                W[:, j] = 0.0
            else:
                W[:, j] /= norm
        plus = float(np.hypot(*(W[:, 0] + W[:, 1])))
        minus = float(np.hypot(*(W[:, 0] - W[:, 1])))
        history.append(min(plus, minus))
        st = tr.final_state
        z = (float(st.x), float(st.v))
    value = max(history[-1], SALI_FLOOR)
    log10_sali = math.log10(value)
    category = SaliCategory.REGULAR if log10_sali > SALI_THRESHOLD else SaliCategory.CHAOTIC
    return SaliResult(log10_sali, category, tuple(history))


def _flow_state_itin(p: Params, z):
    tr = simulate(p, z, p.T)
    st = tr.final_state
    return (float(st.x), float(st.v)), tr.itinerary()


@dataclass(frozen=True)
class SaliMap:
    """Per-cell alignment results over a grid with category counts."""

    grid: GridSpec
    results: tuple
    n_regular: int
    n_chaotic: int
    n_sticking: int

    @property
    def counts(self):
        return (self.n_regular, self.n_chaotic, self.n_sticking)


def sali_map(p: Params, grid: GridSpec, n_periods: int, rng_seed=0) -> SaliMap:
    """SALI over a grid; each cell uses its own deterministic RNG stream."""
    xs, vs = grid.points()
    results = []
    counts = {SaliCategory.REGULAR: 0, SaliCategory.CHAOTIC: 0, SaliCategory.STICKING: 0}
    idx = 0
    for x0 in xs:
        for v0 in vs:
            res = sali(p, (x0, v0), n_periods, rng_seed=(rng_seed, idx))
            results.append(res)
            counts[res.category] += 1
            idx += 1
    return SaliMap(grid, tuple(results), counts[SaliCategory.REGULAR],
                   counts[SaliCategory.CHAOTIC], counts[SaliCategory.STICKING])


@dataclass(frozen=True)
class BasinGrid:
    """Two-color basin labeling with box-averaged entropies (natural log)."""

    grid: GridSpec
    labels: np.ndarray      # shape (nx, nv), True where non-sticking
    box_size: int
    s_b: float
    s_bb: float

    @property
    def ns_fraction(self) -> float:
        return float(np.mean(self.labels))


def _box_entropy(labels: np.ndarray, box_size: int):
    nx, nv = labels.shape
    entropies = []
    boundary = []
    for i0 in range(0, nx, box_size):
        for j0 in range(0, nv, box_size):
            box = labels[i0:i0 + box_size, j0:j0 + box_size]
            n = box.size
            n_ns = int(np.count_nonzero(box))
            s = 0.0
            for count in (n_ns, n - n_ns):
                if 0 < count < n:
                    pr = count / n
                    s -= pr * math.log(pr)
            entropies.append(s)
            if 0 < n_ns < n:
                boundary.append(s)
    s_b = float(np.mean(entropies)) if entropies else 0.0
    s_bb = float(np.mean(boundary)) if boundary else 0.0
    return s_b, s_bb


def basin_entropy(p: Params, grid: GridSpec, n_iter: int, box_size: int) -> BasinGrid:
    """Label cells non-sticking vs dissipative and average box entropies.

    A cell is dissipative when its orbit meets any turning or sticking
    event within n_iter periods; otherwise it stays on the area-preserving
    wall-to-wall branch.  Entropies use natural logarithm; boxes tile the
    grid with true (possibly smaller) edge boxes.
    """
    if box_size < 1:
        raise ValueError("box_size must be at least 1")
    xs, vs = grid.points()
    labels = np.zeros((len(xs), len(vs)), dtype=bool)
    horizon = n_iter * p.T
    for i, x0 in enumerate(xs):
        for j, v0 in enumerate(vs):
            tr = simulate(p, (x0, v0), horizon, stop_on=DISSIPATIVE_KINDS)
            labels[i, j] = not any(e.kind in DISSIPATIVE_KINDS for e in tr.events)
    s_b, s_bb = _box_entropy(labels, box_size)
    return BasinGrid(grid, labels, box_size, s_b, s_bb)


def benettin_pair(step, z0, n_steps: int):
    """Benettin Lyapunov estimates for a generic linearizable planar map.

    ``step(z) -> (z_next, J)`` supplies the map and its derivative.  The
    deviation frame is QR-reorthonormalized each step and the exponents are
    the averaged logarithms of the triangular diagonal.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    z = (float(z0[0]), float(z0[1]))
    Q = np.eye(2)
    sums = np.zeros(2)
    for _ in range(n_steps):
        z, J = step(z)
        Q, R = np.linalg.qr(J @ Q)
        sums += np.log(np.abs(np.diag(R)))
    lam = sums / n_steps
    return float(lam[0]), float(lam[1])


def lyapunov_pair(p: Params, z0, n_periods: int):
    """Both Lyapunov exponents of the period map along a non-sticking orbit.

    Raises UndefinedDiagnostic when the orbit sticks inside the window.
    """

    def step(z):
        tr = simulate(p, z, p.T)
        if any(e.kind in STICKING_KINDS for e in tr.events):
            raise UndefinedDiagnostic("orbit sticks inside the averaging window")
        J = fd_jacobian_of(lambda y: _flow_state_itin(p, y), z, one_sided_fallback=True)
        st = tr.final_state
        return (float(st.x), float(st.v)), J

    return benettin_pair(step, z0, n_periods)
