"""Model parameters for the forced dry-friction oscillator between rigid walls.

The free motion obeys  x'' + f sgn(x') = F cos(w t)  for l < x < r, with
elastic velocity reversal at the walls.  The perturbed variant adds viscous
damping mu_v x' and an inelastic restitution coefficient e = 1 - eps at the
walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class Params:
    """Parameters of the ideal (elastic, dry-friction) oscillator."""

    F: float = 1.0
    omega: float = 1.0
    f: float = 0.4
    l: float = -1.0
    r: float = 1.0

    def __post_init__(self):
        if not (self.F > 0.0) or not math.isfinite(self.F):
            raise ValidationError("forcing amplitude F must be positive and finite")
        if not (self.omega > 0.0) or not math.isfinite(self.omega):
            raise ValidationError("forcing frequency omega must be positive and finite")
        if self.f < 0.0 or not math.isfinite(self.f):
            raise ValidationError("friction coefficient f must be nonnegative and finite")
        if not (self.l < self.r):
            raise ValidationError("wall positions must satisfy l < r")

    @property
    def R(self) -> float:
        """Wall separation r - l."""
        return self.r - self.l

    @property
    def T(self) -> float:
        """Forcing period 2 pi / omega."""
        return 2.0 * math.pi / self.omega

    def symmetric(self) -> bool:
        """True when the walls are symmetric about the origin."""
        return self.l == -self.r


@dataclass(frozen=True)
class PerturbedParams:
    """Ideal parameters plus viscous damping mu_v and impact loss eps = 1 - e."""

    base: Params
    mu_v: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if self.mu_v < 0.0 or not math.isfinite(self.mu_v):
            raise ValidationError("viscous coefficient mu_v must be nonnegative and finite")
        if not (0.0 <= self.eps < 1.0):
            raise ValidationError("impact loss eps must lie in [0, 1)")

    @property
    def e(self) -> float:
        """Restitution coefficient 1 - eps."""
        return 1.0 - self.eps
