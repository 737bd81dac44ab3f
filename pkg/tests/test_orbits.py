"""Tests for periodic-orbit machinery: symmetric branch, Newton, surveys,
continuation with fold detection, region maps, and the twist estimate."""

import math
from collections import Counter

import numpy as np
import pytest

from vibroimpact import Params
from vibroimpact.errors import NoConvergence, ValidationError
from vibroimpact.orbits import (
    Branch,
    GridFilters,
    NewtonOptions,
    REGION_COEXIST,
    REGION_ELLIPTIC,
    REGION_NONE,
    REGION_SADDLE,
    SURVEY_F_VALUES,
    build_symmetric_orbit,
    classify_counts,
    classify_stability,
    continue_branch,
    critical_frictions,
    fold_scaling_coefficient,
    forcing_fold_crossing,
    forcing_survey,
    grid_newton,
    newton_fixed_point,
    psi,
    region_map,
    symmetric_roots,
    twist_estimate,
)

P = Params()
P_STAR = (0.1002798898441954, 0.5419433067664584)


class TestCriticalFrictions:
    def test_fold_friction_closed_form(self):
        f_sc, _ = critical_frictions(P)
        assert f_sc == (16.0 - 4.0 * math.pi) / math.pi ** 2

    def test_impulse_bound_closed_form(self):
        _, f_imp = critical_frictions(P)
        assert f_imp == 2.0 / math.pi

    def test_fold_forcing_at_default_friction(self):
        assert abs(forcing_fold_crossing(P, 0.4) - 0.887) < 1e-3

    def test_fold_friction_clamped_at_zero_for_narrow_walls(self):
        q = Params(F=1.0, omega=1.0, f=0.4, l=-0.5, r=0.5)
        f_sc, _ = critical_frictions(q)
        assert f_sc == 0.0


class TestSymmetricBranch:
    @pytest.mark.parametrize("mu", [1e-4, 1e-3])
    def test_two_roots_above_fold_with_square_root_scaling(self, mu):
        f_sc, _ = critical_frictions(P)
        roots = symmetric_roots(P, f_sc + mu)
        assert len(roots) == 2
        coef = fold_scaling_coefficient(P)
        for theta, _ in roots:
            ratio = (theta - 0.5 * math.pi) ** 2 / mu
            assert abs(ratio - coef) < 0.25 * coef

    def test_no_roots_below_fold(self):
        f_sc, _ = critical_frictions(P)
        assert symmetric_roots(P, f_sc - 1e-4) == []

    def test_roots_straddle_midpoint_symmetrically(self):
        th_minus, th_plus = (th for th, _ in symmetric_roots(P))
        assert th_minus < 0.5 * math.pi < th_plus
        assert abs((th_plus - 0.5 * math.pi) - (0.5 * math.pi - th_minus)) < 1e-12

    def test_existence_function_vanishes_at_roots(self):
        for theta, _ in symmetric_roots(P):
            assert abs(psi(P, theta)) < 1e-12

    @pytest.mark.parametrize("mu", [1e-4, 1e-3])
    def test_rebuild_residuals_near_fold(self, mu):
        f_sc, _ = critical_frictions(P)
        q = Params(F=1.0, omega=1.0, f=f_sc + mu, l=-1.0, r=1.0)
        for theta, _ in symmetric_roots(q):
            orbit = build_symmetric_orbit(q, theta)
            assert max(abs(c) for c in orbit.residuals) < 1e-12

    def test_rebuild_residuals_at_default_friction(self):
        for theta, _ in symmetric_roots(P):
            orbit = build_symmetric_orbit(P, theta)
            assert max(abs(c) for c in orbit.residuals) < 1e-12


class TestNewtonFixedPoint:
    def test_reference_fixed_point(self):
        fp = newton_fixed_point(P, (0.1, 0.54))
        assert abs(fp.z[0] - P_STAR[0]) < 1e-6
        assert abs(fp.z[1] - P_STAR[1]) < 1e-6
        assert fp.residual < 1e-10
        assert abs(fp.det - 1.0) < 1e-7
        assert abs(fp.trace - (-0.4602868346)) < 1e-7
        assert fp.counts == (1, 1, 0, 0)

    def test_moderate_forcing_fixed_point(self):
        q = Params(F=1.5)
        fp = newton_fixed_point(q, (0.63, -0.12))
        assert abs(fp.z[0] - 0.6276) < 1e-3
        assert abs(fp.z[1] - (-0.1184)) < 1e-3
        assert abs(fp.trace - (-1.324)) < 1e-2
        assert abs(fp.det - 0.578) < 5e-3

    def test_iteration_cap_raises(self):
        with pytest.raises(NoConvergence):
            newton_fixed_point(P, (0.4, 1.2), NewtonOptions(max_iter=1))


class TestGridNewton:
    def test_high_forcing_coexisting_pair(self):
        q = Params(F=3.0)
        fps = grid_newton(q, (-0.5, 0.5), (-2.0, 2.0), 5, 5)
        elliptic = [fp for fp in fps
                    if abs(fp.z[0] - 0.4064) < 1e-3 and abs(fp.z[1] + 0.6708) < 1e-3]
        saddle = [fp for fp in fps
                  if abs(fp.z[0] - 0.1992) < 1e-3 and abs(fp.z[1] + 1.4002) < 1e-3]
        assert len(elliptic) == 1 and len(saddle) == 1
        assert abs(elliptic[0].trace - (-0.968)) < 0.02
        assert abs(elliptic[0].det - 0.578) < 0.005
        assert abs(saddle[0].trace - 11.765) < 0.05
        assert abs(saddle[0].det - 0.555) < 0.005

    def test_deduplicated_points_are_distinct(self):
        fps = grid_newton(P, (-0.3, 0.3), (-1.5, 1.5), 4, 4)
        for i, a in enumerate(fps):
            for b in fps[i + 1:]:
                assert max(abs(a.z[0] - b.z[0]), abs(a.z[1] - b.z[1])) > 0.025

    def test_velocity_filter(self):
        fps = grid_newton(P, (-0.3, 0.3), (-1.5, 1.5), 3, 3,
                          filters=GridFilters(v_min=1e9))
        assert fps == []

    def test_explicit_seed_override(self):
        fps = grid_newton(P, seeds=[(0.1, 0.54)])
        assert len(fps) == 1
        assert abs(fps[0].z[0] - P_STAR[0]) < 1e-8

    def test_missing_grid_arguments(self):
        with pytest.raises(ValidationError):
            grid_newton(P, (-0.5, 0.5), (-2.0, 2.0))


class TestForcingSurvey:
    # Frozen behavior of the default sparse seed lattice; each bar is
    # (elliptic, saddle).  The F = 2.0 bar is empty because the sparse
    # lattice misses the orbits there, not because none exist.
    EXPECTED = {
        0.65: (1, 0), 0.85: (1, 0), 1.0: (1, 0),
        1.5: (2, 1), 2.0: (0, 0), 2.5: (0, 1),
        3.0: (1, 1), 3.5: (0, 3), 4.5: (1, 3),
    }

    def test_default_bars(self):
        bars = forcing_survey()
        assert set(bars) == set(SURVEY_F_VALUES)
        got = {F: (bar.n_elliptic, bar.n_saddle) for F, bar in bars.items()}
        assert got == self.EXPECTED

    def test_totals_consistent(self):
        bars = forcing_survey(F_values=(1.5,))
        bar = bars[1.5]
        assert bar.total == bar.n_elliptic + bar.n_saddle == 3

    def test_classify_counts_empty(self):
        assert classify_counts([]) == (0, 0)


class TestContinuation:
    def test_friction_branch_fold(self):
        br = continue_branch(P, (0.1, 0.54), "f", 0.55, 0.005)
        assert br.fold_param is not None
        assert abs(br.fold_param - 0.467) <= 0.005
        pre = [bp for bp in br.points if bp.param_value < br.fold_param]
        thetas = [bp.fixed_point.theta for bp in pre if bp.fixed_point.theta is not None]
        assert thetas[-1] < 0.01
        assert thetas[-1] < thetas[0]

    def test_forcing_branch_persists_through_merge(self):
        br = continue_branch(P, (0.1, 0.54), "F", 0.85, -0.005)
        assert isinstance(br, Branch)
        assert min(bp.param_value for bp in br.points) <= 0.85 + 1e-12
        by_param = {round(bp.param_value, 3): bp.fixed_point for bp in br.points}
        assert abs(by_param[0.95].rotation - 0.152) < 1e-3
        assert abs(by_param[0.85].rotation - 0.207) < 1e-3

    def test_zero_width_range_returns_seed(self):
        br = continue_branch(P, (0.1, 0.54), "f", 0.4, 0.005)
        assert len(br.points) == 1
        assert br.fold_param is None
        assert abs(br.points[0].fixed_point.z[0] - P_STAR[0]) < 1e-8

    def test_unknown_parameter_name(self):
        with pytest.raises(ValidationError):
            continue_branch(P, (0.1, 0.54), "zeta", 1.0, 0.1)


class TestRegionMap:
    POINTS = [(f, R) for R in (1.0, 2.0, 3.0) for f in (0.15, 0.35, 0.55)]

    def test_nine_point_verification_labels(self):
        _, markers = region_map(P, (0.15, 0.35, 0.55), (1.0, 2.0, 3.0), self.POINTS)
        labels = Counter(m.newton_label for m in markers)
        assert labels == {REGION_ELLIPTIC: 5, REGION_SADDLE: 1, REGION_NONE: 3}
        saddle_at = [(m.f, m.R) for m in markers if m.newton_label == REGION_SADDLE]
        assert saddle_at == [(0.55, 1.0)]
        none_at = {(m.f, m.R) for m in markers if m.newton_label == REGION_NONE}
        assert none_at == {(0.15, 1.0), (0.35, 1.0), (0.15, 2.0)}

    def test_analytic_shading_transitions(self):
        grid, _ = region_map(P, (0.30, 0.36, 0.64), (1.0, 2.0), ())
        assert grid[0] == [REGION_ELLIPTIC, REGION_ELLIPTIC, REGION_NONE]
        assert grid[1] == [REGION_NONE, REGION_COEXIST, REGION_NONE]

    def test_all_none_above_impulse_bound(self):
        grid, _ = region_map(P, (0.7, 0.9), (1.0, 2.0, 3.0), ())
        assert all(cell == REGION_NONE for row in grid for cell in row)


class TestTwistEstimate:
    def test_intercept_recovers_rotation_angle(self):
        fp = newton_fixed_point(P, (0.1, 0.54))
        tau1, meta = twist_estimate(P, fp.z)
        assert abs(meta["intercept"] - 1.8030213804) < 5e-4
        assert abs(tau1) > 1.0

    def test_requires_elliptic_point(self):
        q = Params(F=3.0)
        fp = newton_fixed_point(q, (0.2, -1.4))
        with pytest.raises(ValidationError):
            twist_estimate(q, fp.z)


class TestStabilityClassification:
    @pytest.mark.parametrize("tr,det,label", [
        (-0.4602868, 1.0, "elliptic"),
        (-1.324, 0.578, "stable_focus"),
        (11.765, 0.555, "saddle"),
        (0.9, 0.2, "stable_node"),
    ])
    def test_labels(self, tr, det, label):
        assert classify_stability(tr, det) == label
