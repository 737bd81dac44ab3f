"""Tests for the separatrix-splitting layer."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from reference_values import REFS
from vibroimpact.errors import ValidationError
from vibroimpact.melnikov import (
    MelnikovResult,
    SlowCoeffs,
    homoclinic_profile,
    lambda_star,
    melnikov_AB,
)
from vibroimpact.params import Params

P = Params()


def coeffs_for_lambda(lam, omega0=1.0, alpha_M=1.0):
    """alpha0 = beta0 = 1/2 makes lambda* = mu^(1/4); powers of two are exact."""
    return SlowCoeffs(omega0, 0.5, 0.5, lam ** 4, alpha_M)


class TestSlowCoeffs:
    @pytest.mark.parametrize("field", ["omega0", "alpha0", "beta0", "mu", "alpha_M"])
    def test_positivity_enforced(self, field):
        good = {"omega0": 1.0, "alpha0": 1.0, "beta0": 1.0, "mu": 0.1, "alpha_M": 1.0}
        for bad in (0.0, -1.0):
            kw = dict(good)
            kw[field] = bad
            with pytest.raises(ValidationError):
                SlowCoeffs(**kw)

    def test_alpha_M_defaults_to_one(self):
        assert SlowCoeffs(1.0, 1.0, 1.0, 0.1).alpha_M == 1.0


class TestLambdaStar:
    def test_unit_coefficients(self):
        assert lambda_star(SlowCoeffs(1.0, 1.0, 1.0, 1.0)) == 2.0

    def test_quarter_power_scaling(self):
        lo = lambda_star(SlowCoeffs(1.0, 1.0, 1.0, 0.0625))
        hi = lambda_star(SlowCoeffs(1.0, 1.0, 1.0, 1.0))
        assert hi / lo == 2.0
        generic = lambda_star(SlowCoeffs(1.0, 0.7, 1.3, 1e-4))
        scaled = lambda_star(SlowCoeffs(1.0, 0.7, 1.3, 16e-4))
        assert abs(scaled / generic - 2.0) < 1e-12

    def test_plugin_value(self):
        lam = lambda_star(SlowCoeffs(1.0, 0.5, 2.0, 1e-4))
        assert abs(lam - 0.2) < 1e-15


class TestHomoclinicProfile:
    def test_at_zero(self):
        c = SlowCoeffs(1.0, 0.75, 1.0, 0.04)
        phi, dI = homoclinic_profile(c, 0.0)
        assert phi == math.pi
        assert dI == -2.0 * math.sqrt(0.04) * 0.75

    def test_asymptotic_limits(self):
        c = coeffs_for_lambda(0.5)
        lam = lambda_star(c)
        phi_plus, dI_plus = homoclinic_profile(c, 80.0 / lam)
        phi_minus, _ = homoclinic_profile(c, -80.0 / lam)
        assert 0.0 <= phi_plus < 1e-10
        assert 2.0 * math.pi - 1e-10 < phi_minus <= 2.0 * math.pi
        assert abs(dI_plus) < 1e-10

    def test_monotone_decreasing(self):
        c = coeffs_for_lambda(1.0)
        s = np.linspace(-6.0, 6.0, 200)
        phi, _ = homoclinic_profile(c, s)
        assert isinstance(phi, np.ndarray)
        assert np.all(np.diff(phi) < 0.0)

    def test_array_matches_scalar(self):
        c = coeffs_for_lambda(0.5)
        s = np.array([-1.3, 0.0, 0.4, 2.2])
        phi_arr, dI_arr = homoclinic_profile(c, s)
        for i, si in enumerate(s):
            phi_i, dI_i = homoclinic_profile(c, float(si))
            assert phi_arr[i] == phi_i
            assert dI_arr[i] == dI_i

    def test_sech_quadrature_matches_J0(self):
        val, err = quad(lambda s: 1.0 / math.cosh(0.7 * s), -90.0, 90.0, limit=200)
        assert abs(val - REFS["sech_integral_lam_0p7"][0]) < 1e-10
        assert abs(math.pi / 0.7 - REFS["sech_integral_lam_0p7"][1]) < 1e-14

    def test_profile_quadrature_matches_result_J0(self):
        c = coeffs_for_lambda(0.5)
        lam = lambda_star(c)
        scale = -2.0 * math.sqrt(c.mu) * c.alpha0
        val, _ = quad(lambda s: homoclinic_profile(c, s)[1] / scale,
                      -120.0 / lam, 120.0 / lam, limit=200)
        res = melnikov_AB(P, c)
        assert abs(val - res.J0) < 1e-9


class TestMelnikovAB:
    def test_amplitude_reference_value(self):
        res = melnikov_AB(P, coeffs_for_lambda(1.0))
        assert res.lambda_star == 1.0
        assert abs(res.A - REFS["pi_over_sinh_half_pi"]) < 1e-15

    @pytest.mark.parametrize("lam", [0.3, 0.7, 1.0, 1.6])
    def test_offset_closed_form(self, lam):
        res = melnikov_AB(P, coeffs_for_lambda(lam))
        R = P.r - P.l
        expected = -2.0 * P.f * math.pi / (R * res.lambda_star)
        assert abs(res.B - expected) < 1e-14
        assert abs(res.J0 - math.pi / res.lambda_star) < 1e-14

    def test_transverse_zeros_at_unit_lambda(self):
        res = melnikov_AB(P, coeffs_for_lambda(1.0))
        assert res.has_transverse_zeros
        assert len(res.zero_phases) == 2
        for t0 in res.zero_phases:
            assert abs(res.A * math.cos(P.omega * t0) + res.B) < 1e-12
            # simple root: the derivative -A w sin(w t0) stays away from zero
            assert abs(math.sin(P.omega * t0)) > 1e-6

    def test_no_zeros_when_offset_dominates(self):
        res = melnikov_AB(P, coeffs_for_lambda(0.25))
        assert not res.has_transverse_zeros
        assert res.zero_phases == ()
        assert abs(res.A) < abs(res.B)

    @pytest.mark.parametrize("lam", [0.3, 0.5, 0.8, 1.0, 1.2, 1.5, 2.0])
    def test_zero_existence_law(self, lam):
        res = melnikov_AB(P, coeffs_for_lambda(lam))
        assert (len(res.zero_phases) > 0) == (abs(res.A) >= abs(res.B))
        assert res.has_transverse_zeros == (abs(res.A) > abs(res.B))

    def test_exponential_smallness(self):
        A = {lam: melnikov_AB(P, coeffs_for_lambda(lam)).A
             for lam in (0.5, 0.25, 0.125)}
        assert A[0.5] > A[0.25] > A[0.125] > 0.0
        ratio1 = A[0.25] / A[0.5]
        ratio2 = A[0.125] / A[0.25]
        # superpolynomial decay: successive ratios collapse, unlike any power law
        assert ratio2 < ratio1 ** 1.5

    def test_zero_symmetry_about_pi(self):
        res = melnikov_AB(P, coeffs_for_lambda(1.0))
        assert res.B / res.A < 0.0
        t1, t2 = res.zero_phases
        assert abs((P.omega * t1 + P.omega * t2) - 2.0 * math.pi) < 1e-12

    def test_amplitude_linear_in_alpha_M(self):
        base = melnikov_AB(P, coeffs_for_lambda(0.8))
        doubled = melnikov_AB(P, coeffs_for_lambda(0.8, alpha_M=2.0))
        assert abs(doubled.A - 2.0 * base.A) < 1e-15
        assert doubled.B == base.B

    def test_M_evaluation(self):
        res = melnikov_AB(P, coeffs_for_lambda(1.0))
        assert abs(float(res.M(0.0, P.omega)) - (res.A + res.B)) < 1e-15
        vals = res.M(np.array(res.zero_phases), P.omega)
        assert np.all(np.abs(vals) < 1e-12)
