"""Distortion-model tests.

Expected values are direct polynomial evaluations written out literally, or
round-trips against the forward map (the forward map is trivial to
evaluate, making it the oracle for every inversion path).
"""

import numpy as np
import pytest

from radialcal import (
    CubicSolution,
    Direction,
    Intrinsics,
    NegativeRadius,
    NoValidRoot,
    NormalizedPoint,
    PixelPoint,
    PolyEven2,
    PolyQuad,
    UnsupportedModel,
    apply_direction,
    distort_pixel,
    distort_point,
    distort_radius,
    forward_map_monotone,
    invert_direction,
    normalized_to_pixel,
    pixel_to_normalized,
    solve_depressed_cubic,
    undistort_pixel,
    undistort_radius_approx,
    undistort_radius_exact,
)

from conftest import CAM_A_INTRINSICS, EVEN_FITS, QUAD_FITS


class TestDistortRadius:
    def test_identity_model(self):
        assert distort_radius(PolyQuad(0.0, 0.0), 0.7) == 0.7
        assert distort_radius(PolyEven2(0.0, 0.0), 0.7) == 0.7

    def test_even_pair_direct_evaluation(self):
        k1, k2 = EVEN_FITS["cam_a"]
        expected = 0.3 * (1.0 + k1 * 0.09 + k2 * 0.0081)
        assert distort_radius(PolyEven2(k1, k2), 0.3) == pytest.approx(expected, abs=1e-15)

    def test_quad_pair_direct_evaluation(self):
        k1, k2 = QUAD_FITS["cam_a"]
        expected = 0.2 * (1.0 + k1 * 0.2 + k2 * 0.04)  # = 0.1978872
        assert distort_radius(PolyQuad(k1, k2), 0.2) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.1978872, abs=1e-7)

    def test_negative_radius_rejected(self):
        with pytest.raises(NegativeRadius):
            distort_radius(PolyQuad(-0.1, -0.1), -0.2)

    def test_array_input(self):
        m = PolyQuad(-0.1, -0.15)
        r = np.array([0.0, 0.25, 0.5])
        np.testing.assert_allclose(distort_radius(m, r), r * m.factor(r), atol=0)


class TestDistortPoint:
    def test_origin_fixed(self):
        for m in (PolyQuad(-0.3, 0.2), PolyEven2(0.4, -0.1)):
            assert distort_point(m, NormalizedPoint(0.0, 0.0)) == (0.0, 0.0)

    def test_direct_evaluation(self):
        # r = hypot(0.3, 0.4) = 0.5; f = 1 - 0.1*0.5 - 0.15*0.25 = 0.9125
        p = distort_point(PolyQuad(-0.1, -0.15), NormalizedPoint(0.3, 0.4))
        assert p.x == pytest.approx(0.3 * 0.9125, abs=1e-15)
        assert p.y == pytest.approx(0.4 * 0.9125, abs=1e-15)

    def test_odd_symmetry(self, rng):
        m = PolyQuad(-0.08, -0.12)
        for _ in range(100):
            x, y = rng.uniform(-1.0, 1.0, 2)
            pos = distort_point(m, NormalizedPoint(x, y))
            neg = distort_point(m, NormalizedPoint(-x, -y))
            assert abs(neg.x + pos.x) < 1e-12
            assert abs(neg.y + pos.y) < 1e-12


class TestDistortPixel:
    def test_principal_point_fixed(self):
        intr = Intrinsics(**CAM_A_INTRINSICS)
        p = PixelPoint(intr.u0, intr.v0)
        for m in (PolyQuad(-0.5, 0.4), PolyEven2(0.3, 0.3)):
            assert distort_pixel(m, intr, p) == p

    def test_identity_intrinsics_reduce_to_distort_point(self):
        intr = Intrinsics(alpha=1.0, beta=1.0, gamma=0.0, u0=0.0, v0=0.0)
        m = PolyQuad(-0.1, -0.15)
        p = PixelPoint(0.3, -0.2)
        via_point = distort_point(m, NormalizedPoint(p.u, p.v))
        np.testing.assert_allclose(distort_pixel(m, intr, p), via_point, atol=1e-15)

    def test_matches_composed_normalized_path(self, rng):
        intr = Intrinsics(alpha=832.5, beta=831.8, gamma=0.21, u0=304.0, v0=206.6)
        m = PolyQuad(-0.1, -0.15)
        for _ in range(1000):
            p = PixelPoint(*rng.uniform(0.0, 600.0, 2))
            direct = distort_pixel(m, intr, p)
            composed = normalized_to_pixel(
                intr, distort_point(m, pixel_to_normalized(intr, p))
            )
            assert abs(direct.u - composed.u) < 1e-10
            assert abs(direct.v - composed.v) < 1e-10


class TestUndistortApprox:
    def test_identity_model(self):
        assert undistort_radius_approx(PolyEven2(0.0, 0.0), 0.4) == 0.4

    def test_direct_evaluation(self):
        k1, k2 = EVEN_FITS["cam_a"]
        expected = 0.3 * (1.0 - k1 * 0.09 - k2 * 0.0081)
        assert undistort_radius_approx(PolyEven2(k1, k2), 0.3) == pytest.approx(
            expected, abs=1e-15
        )

    def test_negative_radius_rejected(self):
        with pytest.raises(NegativeRadius):
            undistort_radius_approx(PolyEven2(0.1, 0.1), -1.0)

    @pytest.mark.parametrize("cam", sorted(EVEN_FITS))
    def test_approx_error_exceeds_exact_error(self, cam):
        # Round-trip error of the approximate inverse (even pair, distorted
        # radii straight off a [0, 1] grid) vs the exact cubic inverse
        # (quad pair, distorted radii attainable by its own forward map).
        grid = np.linspace(0.0, 1.0, 101)
        even = PolyEven2(*EVEN_FITS[cam])
        quad = PolyQuad(*QUAD_FITS[cam])
        approx_err = np.abs(
            distort_radius(even, undistort_radius_approx(even, grid)) - grid
        ).max()
        quad_rd = distort_radius(quad, grid)
        exact_err = np.abs(
            distort_radius(quad, undistort_radius_exact(quad, quad_rd)) - quad_rd
        ).max()
        assert approx_err > exact_err


class TestSolveDepressedCubic:
    def test_zero_radius_selects_zero(self):
        for k2 in (-0.15, 0.15):
            sol = solve_depressed_cubic(0.0, k2, 0.0)
            assert sol.selected == pytest.approx(0.0, abs=1e-12)

    def test_round_trip_middle_root(self):
        # r_d = 0.5 * (1 - 0.05 - 0.0375) = 0.45625
        r_d = distort_radius(PolyQuad(-0.1, -0.15), 0.5)
        assert r_d == pytest.approx(0.45625, abs=1e-15)
        sol = solve_depressed_cubic(-0.1, -0.15, r_d)
        assert len(sol.roots) == 3
        assert sol.discriminant < 0
        assert list(sol.roots) == sorted(sol.roots)
        assert sol.selected == sol.roots[1]
        assert sol.selected == pytest.approx(0.5, abs=1e-10)

    def test_round_trip_cam_c(self):
        k1, k2 = QUAD_FITS["cam_c"]
        r_d = distort_radius(PolyQuad(k1, k2), 0.8)
        sol = solve_depressed_cubic(k1, k2, r_d)
        assert sol.selected == pytest.approx(0.8, abs=1e-10)

    def test_repeated_root_limit(self):
        # k1=0, k2=-1/3, r_d=2/3 gives the shifted cubic t^3 - 3t + 2 =
        # (t - 1)^2 (t + 2): discriminant exactly zero, double root at 1.
        sol = solve_depressed_cubic(0.0, -1.0 / 3.0, 2.0 / 3.0)
        assert abs(sol.discriminant) <= 1e-14
        np.testing.assert_allclose(sol.roots, [-2.0, 1.0, 1.0], atol=1e-9)
        # The repeated-root limit is the double root, not zero.
        assert sol.selected == pytest.approx(1.0, abs=1e-9)
        assert distort_radius(PolyQuad(0.0, -1.0 / 3.0), 1.0) == pytest.approx(2.0 / 3.0)

    def test_root_residuals_random_models(self, rng):
        for _ in range(300):
            k1 = rng.uniform(-0.5, 0.5)
            k2 = rng.uniform(-0.5, 0.5)
            if k2 == 0.0:
                continue
            r_d = rng.uniform(0.0, 1.0)
            sol = solve_depressed_cubic(k1, k2, r_d)
            a, b, c = k1 / k2, 1.0 / k2, -r_d / k2
            for root in sol.roots:
                assert abs(((root + a) * root + b) * root + c) < 1e-9 * max(1.0, abs(c))

    def test_degenerate_k2_rejected(self):
        with pytest.raises(ValueError):
            solve_depressed_cubic(-0.1, 0.0, 0.5)


class TestUndistortExact:
    def test_identity_model(self):
        assert undistort_radius_exact(PolyQuad(0.0, 0.0), 0.9) == 0.9

    def test_cam_a_round_trip_grid(self):
        m = PolyQuad(*QUAD_FITS["cam_a"])
        radii = np.linspace(0.0, 0.5, 50)
        back = undistort_radius_exact(m, distort_radius(m, radii))
        assert np.abs(back - radii).max() < 1e-9

    def test_quadratic_branch(self):
        # k2 = 0: 0.5 * (1 - 0.3*0.5) = 0.425 must invert to 0.5
        assert undistort_radius_exact(PolyQuad(-0.3, 0.0), 0.425) == pytest.approx(
            0.5, abs=1e-12
        )

    def test_quadratic_branch_continuous_with_identity(self):
        # The chosen quadratic root tends to r_d as k1 -> 0.
        for k1 in (1e-12, -1e-12):
            assert undistort_radius_exact(PolyQuad(k1, 0.0), 0.6) == pytest.approx(
                0.6, abs=1e-9
            )

    def test_pincushion_with_negative_middle_root(self):
        # k1, k2 > 0: the cubic has two negative roots, so the middle root
        # is negative, yet the map is monotone and the true preimage exists.
        m = PolyQuad(0.5, 0.05)
        r_d = distort_radius(m, 0.3)
        sol = solve_depressed_cubic(m.k1, m.k2, r_d)
        assert sol.selected < 0.0  # the literal middle-root rule misfires here
        assert undistort_radius_exact(m, r_d) == pytest.approx(0.3, abs=1e-12)

    def test_mixed_signs_with_positive_wrong_middle_root(self):
        # k1 < 0 < k2 can give three nonnegative roots; only the smallest
        # lies inside the monotone working range.
        m = PolyQuad(-0.5, 0.05)
        assert forward_map_monotone(m, 1.0)
        r_d = distort_radius(m, 0.79)
        sol = solve_depressed_cubic(m.k1, m.k2, r_d)
        assert len(sol.roots) == 3 and all(r > 0 for r in sol.roots)
        assert undistort_radius_exact(m, r_d) == pytest.approx(0.79, abs=1e-12)

    def test_no_valid_root_beyond_turning_point(self):
        # Forward map of (-0.1, -0.15) peaks at ~0.8016; r_d above that has
        # no nonnegative real preimage.
        with pytest.raises(NoValidRoot):
            undistort_radius_exact(PolyQuad(-0.1, -0.15), 0.9)

    def test_no_valid_root_quadratic_branch(self):
        # k2=0, k1=-0.3: 1 + 4*k1*r_d < 0 for r_d = 1.
        with pytest.raises(NoValidRoot):
            undistort_radius_exact(PolyQuad(-0.3, 0.0), 1.0)

    def test_monotone_family_round_trip(self, rng):
        # Spec-level invariant on a random monotone sample.
        grid = np.linspace(0.0, 1.0, 64)
        tested = 0
        while tested < 200:
            k1, k2 = rng.uniform(-0.5, 0.5, 2)
            m = PolyQuad(k1, k2)
            if np.min(1.0 + 2.0 * k1 * grid + 3.0 * k2 * grid**2) <= 0.0:
                continue
            if np.any(np.asarray(m.factor(grid)) <= 0.0):
                continue
            back = undistort_radius_exact(m, distort_radius(m, grid))
            assert np.abs(back - grid).max() < 1e-9
            tested += 1


class TestUndistortPixel:
    def test_principal_point_fixed(self):
        intr = Intrinsics(**CAM_A_INTRINSICS)
        m = PolyQuad(*QUAD_FITS["cam_a"])
        p = PixelPoint(intr.u0, intr.v0)
        assert undistort_pixel(m, intr, p) == p

    def test_identity_model_is_identity_map(self):
        intr = Intrinsics(**CAM_A_INTRINSICS)
        p = PixelPoint(100.0, 50.0)
        back = undistort_pixel(PolyQuad(0.0, 0.0), intr, p)
        np.testing.assert_allclose(back, p, atol=1e-12)

    @pytest.mark.parametrize("cam", sorted(QUAD_FITS))
    def test_full_pixel_round_trip(self, cam, rng):
        intr = Intrinsics(**CAM_A_INTRINSICS)
        m = PolyQuad(*QUAD_FITS[cam])
        uv = rng.uniform([0.0, 0.0], [608.0, 414.0], (1000, 2))
        for u, v in uv:
            ideal = PixelPoint(u, v)
            distorted = distort_pixel(m, intr, ideal)
            back = undistort_pixel(m, intr, distorted)
            assert abs(back.u - ideal.u) < 1e-8
            assert abs(back.v - ideal.v) < 1e-8

    def test_even_pair_refused(self):
        intr = Intrinsics(**CAM_A_INTRINSICS)
        with pytest.raises(UnsupportedModel):
            undistort_pixel(PolyEven2(-0.2, 0.1), intr, PixelPoint(10.0, 10.0))


class TestDirections:
    def test_identity_coefficients(self):
        m = PolyQuad(0.0, 0.0)
        assert apply_direction(m, Direction.DISTORTED_TO_UNDISTORTED, 0.6) == 0.6

    def test_d_u_forward_then_exact_inverse(self):
        m = PolyQuad(-0.1, -0.1)
        for r_d in np.linspace(0.0, 1.0, 21):
            r = apply_direction(m, Direction.DISTORTED_TO_UNDISTORTED, r_d)
            back = invert_direction(m, Direction.DISTORTED_TO_UNDISTORTED, r)
            assert abs(back - r_d) < 1e-9

    def test_u_d_and_d_u_are_not_mutual_inverses(self):
        m = PolyQuad(-0.1, -0.15)
        r = 0.8
        r_d = apply_direction(m, Direction.UNDISTORTED_TO_DISTORTED, r)
        # Feeding the U-D output through the D-U map does not return r.
        r_back = apply_direction(m, Direction.DISTORTED_TO_UNDISTORTED, r_d)
        assert abs(r_back - r) > 1e-4

    def test_direction_type_checked(self):
        with pytest.raises(TypeError):
            apply_direction(PolyQuad(0.0, 0.0), "u-d", 0.5)


class TestMonotonicityGuard:
    def test_monotone_inside_working_range(self):
        assert forward_map_monotone(PolyQuad(-0.1, -0.15), 1.0)

    def test_violation_detected_beyond_turning_point(self):
        # d(r f)/dr = 1 - 0.2 r - 0.45 r^2 turns negative before r = 2.
        assert not forward_map_monotone(PolyQuad(-0.1, -0.15), 2.0)

    def test_zero_range_is_trivially_monotone(self):
        assert forward_map_monotone(PolyQuad(-0.1, -0.15), 0.0)
