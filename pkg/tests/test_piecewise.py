"""Piecewise-model tests.

The coefficient solve is verified against the six defining constraints
directly; inversions are verified by round-trip through the forward map;
the nesting property is verified against an independently evaluated single
quadratic model.
"""

import numpy as np
import pytest

from radialcal import (
    DegenerateKnot,
    NegativeRadius,
    PiecewiseParams,
    PolyQuad,
    solve_coeffs,
)
from radialcal.piecewise import (
    constraint_residuals,
    distort_radius,
    evaluate,
    undistort_radius,
)

from conftest import PW_FITS

COLLAPSED_LINE = PiecewiseParams(f1=0.9, d1=-0.2, f2=0.8, r2=1.0)


class TestSolveCoeffs:
    def test_neutral_parameters_give_identity(self):
        c = solve_coeffs(PiecewiseParams(1.0, 0.0, 1.0, 1.0))
        assert (c.a0, c.a1, c.a2) == (1.0, 0.0, 0.0)
        assert (c.b0, c.b1, c.b2) == (1.0, 0.0, 0.0)

    def test_collapsed_line_fixture(self):
        # f1, d1, f2 all sampled from the line 1 - 0.2 r, so both segments
        # must collapse onto it: a = b = (1, -0.2, 0).
        c = solve_coeffs(COLLAPSED_LINE)
        np.testing.assert_allclose([c.a0, c.a1, c.a2], [1.0, -0.2, 0.0], atol=1e-12)
        np.testing.assert_allclose([c.b0, c.b1, c.b2], [1.0, -0.2, 0.0], atol=1e-12)

    @pytest.mark.parametrize("cam", sorted(PW_FITS))
    def test_camera_fixtures_satisfy_all_constraints(self, cam):
        params = PiecewiseParams(*PW_FITS[cam], r2=1.0)
        c = solve_coeffs(params)
        assert np.abs(constraint_residuals(c, params)).max() < 1e-12

    def test_constraints_hold_over_random_parameters(self, rng):
        for _ in range(1000):
            params = PiecewiseParams(
                f1=rng.uniform(0.5, 1.5),
                d1=rng.uniform(-1.0, 1.0),
                f2=rng.uniform(0.5, 1.5),
                r2=1.0,
            )
            c = solve_coeffs(params)
            assert np.abs(constraint_residuals(c, params)).max() < 1e-12

    def test_degenerate_knot(self):
        with pytest.raises(DegenerateKnot):
            solve_coeffs(PiecewiseParams(1.0, 0.0, 1.0, 1e-13))

    def test_knot_is_half_the_range(self):
        c = solve_coeffs(PiecewiseParams(0.95, -0.1, 0.9, 0.8))
        assert c.r1 == 0.4
        assert c.r2 == 0.8


class TestEvaluate:
    def test_identity_constant_one(self):
        c = solve_coeffs(PiecewiseParams(1.0, 0.0, 1.0, 1.0))
        assert evaluate(c, 0.73) == 1.0

    def test_segments_agree_at_knot(self):
        c = solve_coeffs(PiecewiseParams(0.93, -0.31, 0.81, 1.2))
        inner = c.a0 + c.a1 * c.r1 + c.a2 * c.r1**2
        outer = c.b0 + c.b1 * c.r1 + c.b2 * c.r1**2
        assert abs(inner - outer) < 1e-12
        assert evaluate(c, c.r1) == pytest.approx(inner, abs=1e-15)

    def test_collapsed_line_values(self):
        c = solve_coeffs(COLLAPSED_LINE)
        assert evaluate(c, 0.25) == pytest.approx(0.95, abs=1e-12)
        assert evaluate(c, 0.75) == pytest.approx(0.85, abs=1e-12)

    def test_knot_value_and_end_value_match_parameters(self):
        f1, d1, f2 = PW_FITS["cam_c"]
        c = solve_coeffs(PiecewiseParams(f1, d1, f2, r2=1.0))
        assert evaluate(c, c.r1) == pytest.approx(f1, abs=1e-12)
        assert evaluate(c, c.r2) == pytest.approx(f2, abs=1e-12)

    def test_extrapolation_continues_outer_quadratic(self):
        c = solve_coeffs(PiecewiseParams(0.9, -0.3, 0.8, 1.0))
        r = 1.3  # beyond r2
        assert evaluate(c, r) == pytest.approx(c.b0 + c.b1 * r + c.b2 * r**2, abs=1e-15)

    def test_smoothness_across_knot(self):
        # central finite difference across the knot ~ the shared slope d1
        f1, d1, f2 = 0.94, -0.26, 0.84
        c = solve_coeffs(PiecewiseParams(f1, d1, f2, r2=1.0))
        h = 1e-6
        fd = (evaluate(c, c.r1 + h) - evaluate(c, c.r1 - h)) / (2.0 * h)
        assert abs(fd - d1) < 1e-5

    def test_negative_radius_rejected(self):
        c = solve_coeffs(COLLAPSED_LINE)
        with pytest.raises(NegativeRadius):
            evaluate(c, -0.1)

    def test_nesting_contains_every_quad_model(self, rng):
        # Sampling (f1, d1, f2) from any single quadratic g reproduces g on
        # the whole range: the piecewise family nests the single family.
        grid = np.linspace(0.0, 1.0, 257)
        for _ in range(50):
            k1, k2 = rng.uniform(-0.5, 0.5, 2)
            g = PolyQuad(k1, k2)
            r2 = 1.0
            r1 = r2 / 2.0
            params = PiecewiseParams(
                f1=g.factor(r1),
                d1=k1 + 2.0 * k2 * r1,
                f2=g.factor(r2),
                r2=r2,
            )
            c = solve_coeffs(params)
            assert np.abs(evaluate(c, grid) - g.factor(grid)).max() < 1e-12


class TestForwardMap:
    def test_identity(self):
        c = solve_coeffs(PiecewiseParams(1.0, 0.0, 1.0, 1.0))
        assert distort_radius(c, 0.4) == 0.4

    def test_collapsed_line_value(self):
        c = solve_coeffs(COLLAPSED_LINE)
        assert distort_radius(c, 0.5) == pytest.approx(0.45, abs=1e-12)

    def test_continuity_of_forward_map_at_knot(self):
        c = solve_coeffs(PiecewiseParams(0.92, -0.4, 0.78, 1.0))
        below = distort_radius(c, c.r1 - 1e-12)
        above = distort_radius(c, c.r1 + 1e-12)
        assert abs(above - below) < 1e-11


class TestUndistort:
    def test_identity(self):
        c = solve_coeffs(PiecewiseParams(1.0, 0.0, 1.0, 1.0))
        assert undistort_radius(c, 0.8) == pytest.approx(0.8, abs=1e-12)

    def test_collapsed_line_inner_boundary(self):
        # 0.45 = 0.5 * 0.9 is exactly the knot image; inner segment owns it.
        c = solve_coeffs(COLLAPSED_LINE)
        assert undistort_radius(c, 0.45) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("cam", sorted(PW_FITS))
    def test_round_trip_200_grid(self, cam):
        c = solve_coeffs(PiecewiseParams(*PW_FITS[cam], r2=1.0))
        grid = np.linspace(0.0, c.r2, 200)
        back = undistort_radius(c, distort_radius(c, grid))
        assert np.abs(back - grid).max() < 1e-9

    def test_outer_segment_linear_fallback(self):
        # The collapsed-line fixture has b2 = 0, so outer inversion takes
        # the quadratic branch of r * (b0 + b1 r) = r_d.
        c = solve_coeffs(COLLAPSED_LINE)
        assert c.b2 == pytest.approx(0.0, abs=1e-15)
        r = 0.75
        r_d = distort_radius(c, r)
        assert r_d > c.r1 * evaluate(c, c.r1)
        assert undistort_radius(c, r_d) == pytest.approx(r, abs=1e-10)

    def test_negative_radius_rejected(self):
        c = solve_coeffs(COLLAPSED_LINE)
        with pytest.raises(NegativeRadius):
            undistort_radius(c, -0.5)

    def test_array_round_trip(self, rng):
        c = solve_coeffs(PiecewiseParams(0.95, -0.18, 0.88, 1.4))
        radii = rng.uniform(0.0, 1.4, 500)
        back = undistort_radius(c, distort_radius(c, radii))
        assert np.abs(back - radii).max() < 1e-9
