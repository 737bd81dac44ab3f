"""Event-driven analysis toolkit for a forced dry-friction impact oscillator.

The model is a unit-mass particle obeying x'' + f sgn(x') = F cos(w t)
between rigid walls at x = l and x = r, with velocity reversal at impact.
The package provides exact event-driven simulation, periodic-orbit solvers
and continuation, chaos diagnostics, a dissipatively perturbed variant, a
slow-manifold (Melnikov) layer analysis, an N-particle extension, and
interval-arithmetic certification of computed orbits.
"""

__version__ = "0.1.0"

from .params import Params, PerturbedParams
from .core import (
    Event,
    EventKind,
    MotionRegime,
    OrbitTrace,
    State,
    classify_orbit,
    classify_vzero,
    flight_propagate,
    next_event,
    simulate,
    stick_release_time,
)
