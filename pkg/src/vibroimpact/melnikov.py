"""Separatrix splitting of the slow pendulum layer above the saddle-center.

Just above the saddle-center threshold the slow dynamics reduce to a
pendulum-like Hamiltonian whose saddle carries a homoclinic loop.  This
module evaluates the closed forms attached to that loop: the saddle rate
lambda* with its quarter-power scaling in the distance mu above threshold,
the homoclinic profile, and the splitting function M(t0) = A cos(w t0) + B
whose amplitude A is exponentially small in 1/lambda* while the friction
offset B is algebraic.  Transverse homoclinic points (and with them a
Bernoulli shift) exist precisely when |A| > |B|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import Params


@dataclass(frozen=True)
class SlowCoeffs:
    """Prefactors of the slow Hamiltonian w0 I + mu^(1/2) (a0 I^2 - b0 cos phi).

    ``mu`` is the distance of the friction above its saddle-center value;
    ``alpha_M`` is the bounded positive amplitude factor of the splitting
    integral, exposed as a constant (default 1) since only its positivity
    and boundedness are structural.
    """

    omega0: float
    alpha0: float
    beta0: float
    mu: float
    alpha_M: float = 1.0

    def __post_init__(self):
        for name in ("omega0", "alpha0", "beta0", "mu", "alpha_M"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValidationError(f"{name} must be strictly positive, got {value}")


def lambda_star(coeffs: SlowCoeffs) -> float:
    """Leading-order saddle eigenvalue mu^(1/4) sqrt(4 alpha0 beta0)."""
    return coeffs.mu ** 0.25 * math.sqrt(4.0 * coeffs.alpha0 * coeffs.beta0)


def homoclinic_profile(coeffs: SlowCoeffs, s):
    """Pendulum separatrix (phi, delta_I) at slow time s (scalar or array).

    phi runs from 2 pi to 0 through pi at s = 0; delta_I is the action dip
    -2 mu^(1/2) alpha0 sech(lambda* s) below the saddle level.
    """
    lam = lambda_star(coeffs)
    if isinstance(s, np.ndarray):
        sinh, arctan, cosh = np.sinh, np.arctan, np.cosh
    else:
        sinh, arctan, cosh = math.sinh, math.atan, math.cosh
    phi = math.pi - 2.0 * arctan(sinh(lam * s))
    delta_I = -2.0 * math.sqrt(coeffs.mu) * coeffs.alpha0 / cosh(lam * s)
    return phi, delta_I


@dataclass(frozen=True)
class MelnikovResult:
    """Splitting function data M(t0) = A cos(w t0) + B."""

    lambda_star: float
    A: float
    B: float
    J0: float
    has_transverse_zeros: bool
    zero_phases: tuple

    def M(self, t0, omega: float = 1.0):
        return self.A * np.cos(omega * np.asarray(t0)) + self.B


def melnikov_AB(p: Params, coeffs: SlowCoeffs) -> MelnikovResult:
    """Amplitude A, offset B, and the zeros of the splitting function.

    A = (2 pi F / R) (w / lambda*) / sinh(pi w / (2 lambda*)) alpha_M decays
    exponentially as lambda* -> 0; B = -(2 f / R) J0 with J0 = pi / lambda*.
    The two zero phases per forcing period solve A cos(w t0) = -B and exist
    when |A| >= |B|; they are transverse (simple) exactly when |A| > |B|.
    """
    R = p.r - p.l
    lam = lambda_star(coeffs)
    J0 = math.pi / lam
    w = p.omega
    A = (2.0 * math.pi * p.F / R) * (w / lam) / math.sinh(
        math.pi * w / (2.0 * lam)) * coeffs.alpha_M
    B = -(2.0 * p.f / R) * J0
    has_transverse = abs(A) > abs(B)
    zero_phases = ()
    if A != 0.0 and abs(B) <= abs(A):
        theta = math.acos(-B / A)
        t1 = theta / w
        t2 = (2.0 * math.pi - theta) / w
        zero_phases = (t1,) if t1 == t2 else (t1, t2)
    return MelnikovResult(lam, A, B, J0, has_transverse, zero_phases)
