"""Ground-truth synthetic scene generation and recovery scoring.

A scene fixes true intrinsics, a handful of tilted poses of one planar
grid, a true radial model, and a pixel noise level.  Observations are the
forward path only (ideal projection, then radial distortion, then seeded
Gaussian noise), so generated datasets are independent of all inversion
and fitting code and can serve as the oracle for calibration recovery.

Generation is deterministic: the same scene (including its seed) always
reproduces identical observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import CalibrationDataset, ImageObservations
from .errors import DegenerateConfiguration, InsufficientViews, NonPositiveDepth
from .geometry import (
    Extrinsics,
    Intrinsics,
    axis_angle_from_rotation,
    camera_to_normalized,
    normalized_to_pixel_array,
    plane_to_camera,
    rotation_from_axis_angle,
)
from .optimize import CalibrationResult, ModelFamily, build_model

# Realistic intrinsics used as the default fixture camera.
DEFAULT_INTRINSICS = Intrinsics(
    alpha=832.4860, beta=832.5157, gamma=0.2042, u0=303.9605, v0=206.5811
)


@dataclass(frozen=True)
class SyntheticScene:
    truth_intrinsics: Intrinsics
    truth_extrinsics: tuple[Extrinsics, ...]
    truth_model: object
    grid: np.ndarray
    noise_sigma: float
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "truth_extrinsics", tuple(self.truth_extrinsics))
        g = np.asarray(self.grid, dtype=float).copy()
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)


def square_grid(n: int = 8, width: float = 1.0) -> np.ndarray:
    """n x n planar grid centered on the origin, covering width x width."""
    axis = np.linspace(-width / 2.0, width / 2.0, n)
    xx, yy = np.meshgrid(axis, axis)
    return np.column_stack([xx.ravel(), yy.ravel()])


def _sample_poses(rng: np.random.Generator, n_views: int) -> tuple[Extrinsics, ...]:
    """Tilted views of the plane: tilt 10-40 degrees, distance 2-4 plane widths.

    Lateral offsets up to 0.6 plane widths move the target around the field
    of view, which is what pins down the principal point and gives the
    larger radii that make distortion observable.
    """
    poses = []
    for _ in range(n_views):
        tilt = math.radians(rng.uniform(10.0, 40.0))
        azimuth = rng.uniform(0.0, 2.0 * math.pi)
        roll = math.radians(rng.uniform(-30.0, 30.0))
        axis = np.array([math.cos(azimuth), math.sin(azimuth), 0.0])
        rot = rotation_from_axis_angle(axis * tilt) @ rotation_from_axis_angle(
            np.array([0.0, 0.0, roll])
        )
        t = np.array(
            [rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(2.0, 4.0)]
        )
        poses.append(Extrinsics(rotation=rot, translation=t))
    return tuple(poses)


def default_scene(
    seed: int = 0,
    noise_sigma: float = 0.5,
    model: object | None = None,
    n_views: int = 5,
    grid_n: int = 8,
    intrinsics: Intrinsics = DEFAULT_INTRINSICS,
) -> SyntheticScene:
    """Standard fixture: grid_n x grid_n target, n_views tilted views."""
    from .distortion import PolyQuad

    rng = np.random.default_rng(seed)
    poses = _sample_poses(rng, n_views)
    return SyntheticScene(
        truth_intrinsics=intrinsics,
        truth_extrinsics=poses,
        truth_model=model if model is not None else PolyQuad(-0.1, -0.15),
        grid=square_grid(grid_n),
        noise_sigma=float(noise_sigma),
        seed=int(seed),
    )


def max_ideal_radius(
    intrinsics: Intrinsics, extrinsics: tuple[Extrinsics, ...], grid: np.ndarray
) -> float:
    """Largest undistorted normalized radius over all poses and grid points."""
    best = 0.0
    for extr in extrinsics:
        xy, z = camera_to_normalized(plane_to_camera(extr.rotation, extr.translation, grid))
        if np.any(z <= 1e-12):
            raise NonPositiveDepth("a grid point is at or behind the camera")
        best = max(best, float(np.hypot(xy[:, 0], xy[:, 1]).max()))
    return best


def piecewise_scene(
    f1: float,
    d1: float,
    f2: float,
    seed: int = 0,
    noise_sigma: float = 0.0,
    n_views: int = 5,
    grid_n: int = 8,
    intrinsics: Intrinsics = DEFAULT_INTRINSICS,
) -> SyntheticScene:
    """Scene whose truth is a piecewise model with r2 locked to the scene's
    own maximum radius.

    Undistorted radii depend only on the geometry, so r2 can be computed
    before the distortion model exists; a fit of the piecewise family to
    this scene then shares the knot placement with the truth.
    """
    from .piecewise import PiecewiseParams, solve_coeffs

    rng = np.random.default_rng(seed)
    poses = _sample_poses(rng, n_views)
    grid = square_grid(grid_n)
    r2 = max_ideal_radius(intrinsics, poses, grid)
    coeffs = solve_coeffs(PiecewiseParams(f1, d1, f2, r2))
    return SyntheticScene(
        truth_intrinsics=intrinsics,
        truth_extrinsics=poses,
        truth_model=coeffs,
        grid=grid,
        noise_sigma=float(noise_sigma),
        seed=int(seed),
    )


def generate(scene: SyntheticScene) -> CalibrationDataset:
    """Observations through the forward path only, plus seeded pixel noise."""
    if len(scene.truth_extrinsics) < 3:
        raise InsufficientViews(
            f"a calibration scene needs >= 3 poses, got {len(scene.truth_extrinsics)}"
        )
    if scene.grid.shape[0] < 4:
        raise DegenerateConfiguration("grid needs >= 4 points")
    centered = scene.grid - scene.grid.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[1] <= 1e-9 * max(s[0], 1e-300):
        raise DegenerateConfiguration("grid points are collinear")

    rng = np.random.default_rng(scene.seed)
    intr = scene.truth_intrinsics
    images = []
    for i, extr in enumerate(scene.truth_extrinsics):
        xy, z = camera_to_normalized(
            plane_to_camera(extr.rotation, extr.translation, scene.grid)
        )
        if np.any(z <= 1e-12):
            raise NonPositiveDepth(f"pose {i} puts grid points at or behind the camera")
        fac = scene.truth_model.factor(np.hypot(xy[:, 0], xy[:, 1]))
        uv = normalized_to_pixel_array(intr, xy * fac[:, None])
        if scene.noise_sigma > 0.0:
            uv = uv + rng.normal(0.0, scene.noise_sigma, uv.shape)
        images.append(ImageObservations(name=f"view{i:02d}", points=uv))
    return CalibrationDataset(model_points=scene.grid, images=tuple(images))


@dataclass(frozen=True)
class RecoveryReport:
    """Errors of a fitted calibration against the generating scene.

    Intrinsic errors are |estimate - truth| / max(1, |truth|), except the
    skew, which is normalized by the true alpha: gamma enters the
    projection as gamma * y next to alpha * x, so the focal scale is its
    natural unit and a near-zero true skew would otherwise make the ratio
    meaningless.  Translation errors are relative to the true baseline.
    """

    intrinsic_errors: dict[str, float]
    rotation_angle_errors_deg: tuple[float, ...]
    translation_errors: tuple[float, ...]
    curve_sup_error: float


def recovery_report(scene: SyntheticScene, result: CalibrationResult) -> RecoveryReport:
    truth = scene.truth_intrinsics
    est = result.intrinsics
    intrinsic_errors = {
        name: abs(getattr(est, name) - getattr(truth, name)) / max(1.0, abs(getattr(truth, name)))
        for name in ("alpha", "beta", "u0", "v0")
    }
    intrinsic_errors["gamma"] = abs(est.gamma - truth.gamma) / max(1.0, abs(truth.alpha))

    rot_errors = []
    t_errors = []
    for e_true, e_est in zip(scene.truth_extrinsics, result.extrinsics):
        rel = e_est.rotation @ e_true.rotation.T
        angle = float(np.linalg.norm(axis_angle_from_rotation(rel)))
        rot_errors.append(math.degrees(angle))
        t_errors.append(
            float(
                np.linalg.norm(e_est.translation - e_true.translation)
                / max(np.linalg.norm(e_true.translation), 1e-300)
            )
        )

    r_hi = max_ideal_radius(truth, scene.truth_extrinsics, scene.grid)
    grid = np.linspace(0.0, r_hi, 512)
    fitted = build_model(result.model_family, result.distortion_coefficients, r2=result.r2)
    sup = float(np.max(np.abs(np.asarray(fitted.factor(grid)) - np.asarray(scene.truth_model.factor(grid)))))
    return RecoveryReport(
        intrinsic_errors=intrinsic_errors,
        rotation_angle_errors_deg=tuple(rot_errors),
        translation_errors=tuple(t_errors),
        curve_sup_error=sup,
    )
