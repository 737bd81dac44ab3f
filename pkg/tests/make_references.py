"""Regenerate the frozen reference values in reference_values.py.

Every value here is computed by a method independent of the library code:
adaptive Runge-Kutta integration of the equations of motion, brute-force
sign-change scans, numerical quadrature, or high-precision arithmetic.
Run:  python tests/make_references.py
"""

import math

import mpmath
import numpy as np
from scipy.integrate import quad, solve_ivp


def rk_flight(F, w, f, mu, t0, x0, v0, s, t1):
    """Reference flight state by adaptive RK integration at tight tolerance."""

    def rhs(t, y):
        return [y[1], F * math.cos(w * t) - s * f - mu * y[1]]

    sol = solve_ivp(rhs, (t0, t1), [x0, v0], method="RK45", rtol=1e-12, atol=1e-14,
                    dense_output=True)
    x, v = sol.sol(t1)
    return float(x), float(v)


def brute_release(F, w, f, t_onset, step=1e-6, horizon=10.0):
    """First time after t_onset where |F cos(w t)| - f changes sign, by scan."""
    g0 = abs(F * math.cos(w * t_onset)) - f
    t = t_onset
    while t < t_onset + horizon:
        t_next = t + step
        g1 = abs(F * math.cos(w * t_next)) - f
        if g0 == 0.0 or (g0 < 0.0) != (g1 < 0.0):
            lo, hi = t, t_next
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                gm = abs(F * math.cos(w * mid)) - f
                if (gm < 0.0) == (g0 < 0.0):
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        t, g0 = t_next, g1
    raise RuntimeError("no sign change found")


def main():
    refs = {}

    # free flight with fixed sliding sign, reference by RK45
    refs["flight_rk45"] = rk_flight(1.0, 1.0, 0.4, 0.0, 0.0, 0.1003, 0.5419, +1, 0.5)

    # viscously damped flight, reference by RK45
    refs["viscous_flight_rk45"] = rk_flight(1.0, 1.0, 0.4, 0.01, 0.0, 0.1003, 0.5419, +1, 1.0)

    # stick release instants by brute scan of |F cos t| - 0.4
    refs["release_after_1p16"] = brute_release(1.0, 1.0, 0.4, 1.16)
    refs["release_after_4p31"] = brute_release(1.0, 1.0, 0.4, 4.31)

    # slow-layer forcing coefficient pi/sinh(pi/2) at 50 digits
    mpmath.mp.dps = 50
    refs["pi_over_sinh_half_pi"] = float(mpmath.pi / mpmath.sinh(mpmath.pi / 2))

    # sech integral against the closed form pi/lambda
    lam = 0.7
    val, err = quad(lambda s: 1.0 / math.cosh(lam * s), -60.0, 60.0, epsabs=1e-13)
    refs["sech_integral_lam_0p7"] = (val, math.pi / lam)

    print("# Generated by make_references.py; do not edit by hand.")
    print("REFS = {")
    for k, v in refs.items():
        print(f"    {k!r}: {v!r},")
    print("}")


if __name__ == "__main__":
    main()
