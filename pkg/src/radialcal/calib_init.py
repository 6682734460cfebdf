"""Linear calibration bootstrap: homographies, closed-form intrinsics,
per-image extrinsics, and a least-squares distortion initialization.

These closed-form estimates start the nonlinear refinement.  The chain is
the classic single-plane recipe: a normalized DLT homography per view, the
image-of-the-absolute-conic linear system for the shared intrinsics, pose
recovery from A^-1 H, and a linear fit of the radial coefficients (both
two-coefficient families are linear in their coefficients once ideal
projections are known).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import CalibrationDataset
from .errors import DegenerateConfiguration, IllConditioned, InsufficientViews
from .geometry import (
    Extrinsics,
    Intrinsics,
    camera_to_normalized,
    nearest_rotation,
    normalized_to_pixel_array,
    plane_to_camera,
)

_RANK_TOL = 1e-9


@dataclass(frozen=True)
class Homography:
    """Plane-to-image projective map, scale-normalized so h33 = 1 when possible."""

    h: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.h, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("homography must be a finite 3x3 matrix")
        if abs(m[2, 2]) > 1e-12:
            m = m / m[2, 2]
        s = np.linalg.svd(m, compute_uv=False)
        if s[-1] <= 1e-10 * s[0]:
            raise DegenerateConfiguration(
                f"homography is rank-deficient (singular values {s})"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "h", m)

    def apply(self, xy: np.ndarray) -> np.ndarray:
        """Map (n, 2) plane points through the homography to (n, 2) pixels."""
        xy = np.asarray(xy, dtype=float)
        ones = np.ones((xy.shape[0], 1))
        q = np.hstack([xy, ones]) @ self.h.T
        return q[:, :2] / q[:, 2:3]


@dataclass(frozen=True)
class InitialEstimate:
    """Starting point for nonlinear refinement."""

    intrinsics: Intrinsics
    extrinsics_per_image: tuple[Extrinsics, ...]
    distortion_init: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "extrinsics_per_image", tuple(self.extrinsics_per_image))
        k = np.asarray(self.distortion_init, dtype=float).copy()
        k.setflags(write=False)
        object.__setattr__(self, "distortion_init", k)


def _collinear(pts: np.ndarray) -> bool:
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[1] <= 1e-9 * max(s[0], 1e-300)


def _normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity transform taking the centroid to the origin, RMS radius to sqrt(2)."""
    mean = pts.mean(axis=0)
    rms = float(np.sqrt(np.mean(np.sum((pts - mean) ** 2, axis=1))))
    s = np.sqrt(2.0) / rms if rms > 1e-300 else 1.0
    return np.array([[s, 0.0, -s * mean[0]], [0.0, s, -s * mean[1]], [0.0, 0.0, 1.0]])


def estimate_homography(model_pts: np.ndarray, image_pts: np.ndarray) -> Homography:
    """Normalized DLT homography from >= 4 plane/pixel correspondences."""
    model_pts = np.asarray(model_pts, dtype=float)
    image_pts = np.asarray(image_pts, dtype=float)
    if model_pts.shape != image_pts.shape or model_pts.ndim != 2 or model_pts.shape[1] != 2:
        raise DegenerateConfiguration(
            f"need matching (n, 2) point arrays, got {model_pts.shape} and {image_pts.shape}"
        )
    n = model_pts.shape[0]
    if n < 4:
        raise DegenerateConfiguration(f"homography needs >= 4 point pairs, got {n}")
    if _collinear(model_pts) or _collinear(image_pts):
        raise DegenerateConfiguration("points are collinear; homography is underdetermined")

    t_model = _normalization(model_pts)
    t_image = _normalization(image_pts)
    mh = np.hstack([model_pts, np.ones((n, 1))]) @ t_model.T
    ih = np.hstack([image_pts, np.ones((n, 1))]) @ t_image.T

    a = np.zeros((2 * n, 9))
    a[0::2, 0:3] = -mh
    a[0::2, 6:9] = ih[:, 0:1] * mh
    a[1::2, 3:6] = -mh
    a[1::2, 6:9] = ih[:, 1:2] * mh
    _, _, vt = np.linalg.svd(a)
    hn = vt[-1].reshape(3, 3)
    return Homography(np.linalg.inv(t_image) @ hn @ t_model)


def _conic_row(h: np.ndarray, i: int, j: int) -> np.ndarray:
    return np.array(
        [
            h[0, i] * h[0, j],
            h[0, i] * h[1, j] + h[1, i] * h[0, j],
            h[1, i] * h[1, j],
            h[2, i] * h[0, j] + h[0, i] * h[2, j],
            h[2, i] * h[1, j] + h[1, i] * h[2, j],
            h[2, i] * h[2, j],
        ]
    )


def intrinsics_from_homographies(
    hs: Sequence[Homography], zero_skew: bool = False
) -> Intrinsics:
    """Closed-form intrinsics from the absolute-conic constraints of >= 3 views.

    Two views suffice only with the skew constrained to zero.  Raises
    IllConditioned when the stacked system has no unique solution (e.g.
    repeated views) or when the recovered conic is not positive definite.
    """
    n = len(hs)
    if n < 3 and not (n == 2 and zero_skew):
        raise InsufficientViews(
            f"need >= 3 views ({n} given); 2 views are allowed only with zero skew"
        )
    v = np.zeros((2 * n, 6))
    for k, hom in enumerate(hs):
        h = hom.h
        v[2 * k] = _conic_row(h, 0, 1)
        v[2 * k + 1] = _conic_row(h, 0, 0) - _conic_row(h, 1, 1)

    if zero_skew:
        # Eliminate B12 instead of adding a weak penalty row.
        v = np.delete(v, 1, axis=1)
    s = np.linalg.svd(v, compute_uv=False)
    if s[-2] <= _RANK_TOL * s[0]:
        raise IllConditioned("conic system is rank-deficient; views give no unique solution")
    _, _, vt = np.linalg.svd(v)
    b = vt[-1]
    if zero_skew:
        b = np.insert(b, 1, 0.0)
    b11, b12, b22, b13, b23, b33 = b
    if b11 < 0.0:
        b11, b12, b22, b13, b23, b33 = -b
    denom = b11 * b22 - b12 * b12
    if b11 <= 0.0 or denom <= 0.0:
        raise IllConditioned("recovered conic is not positive definite")
    v0 = (b12 * b13 - b11 * b23) / denom
    lam = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11
    if lam <= 0.0:
        raise IllConditioned("recovered conic is not positive definite")
    alpha = float(np.sqrt(lam / b11))
    beta = float(np.sqrt(lam * b11 / denom))
    gamma = float(-b12 * alpha * alpha * beta / lam)
    u0 = float(gamma * v0 / beta - b13 * alpha * alpha / lam)
    return Intrinsics(alpha=alpha, beta=beta, gamma=gamma, u0=u0, v0=float(v0))


def extrinsics_from_homography(intr: Intrinsics, hom: Homography) -> Extrinsics:
    """Pose from A^-1 H with the scale fixed by the first rotation column."""
    inv_a = np.linalg.inv(intr.matrix)
    r1p = inv_a @ hom.h[:, 0]
    r2p = inv_a @ hom.h[:, 1]
    norm1 = float(np.linalg.norm(r1p))
    if norm1 <= 1e-12:
        raise IllConditioned("degenerate homography column; cannot fix the pose scale")
    s = 1.0 / norm1
    r1 = s * r1p
    r2 = s * r2p
    t = s * (inv_a @ hom.h[:, 2])
    if t[2] < 0.0:
        # The plane must sit in front of the camera.
        r1, r2, t = -r1, -r2, -t
    rot = nearest_rotation(np.column_stack([r1, r2, np.cross(r1, r2)]))
    return Extrinsics(rotation=rot, translation=t)


def init_distortion_linear(
    model_family,
    intr: Intrinsics,
    extrs: Sequence[Extrinsics],
    dataset: CalibrationDataset,
) -> np.ndarray:
    """Least-squares radial coefficients given ideal projections.

    Both two-coefficient families are linear in (k1, k2) once the ideal
    pixel predictions are known: the observed-minus-ideal pixel offsets
    stack into a 2Nn x 2 system.  The piecewise family starts from the
    neutral values (1, 0, 1) instead.
    """
    from .optimize import ModelFamily  # local import to avoid a cycle

    family = ModelFamily(model_family)
    if family is ModelFamily.PIECEWISE:
        return np.array([1.0, 0.0, 1.0])

    rows = []
    rhs = []
    for extr, img in zip(extrs, dataset.images):
        xy, z = camera_to_normalized(
            plane_to_camera(extr.rotation, extr.translation, dataset.model_points)
        )
        valid = z > 1e-12
        r = np.hypot(xy[:, 0], xy[:, 1])
        ideal = normalized_to_pixel_array(intr, xy)
        if family is ModelFamily.POLY_EVEN2:
            p1, p2 = r**2, r**4
        else:
            p1, p2 = r, r**2
        offset = ideal - np.array([intr.u0, intr.v0])
        for col in (0, 1):
            rows.append(np.stack([offset[valid, col] * p1[valid], offset[valid, col] * p2[valid]], axis=1))
            rhs.append(img.points[valid, col] - ideal[valid, col])
    design = np.vstack(rows)
    target = np.concatenate(rhs)
    s = np.linalg.svd(design, compute_uv=False)
    if s.size < 2 or s[-1] <= 1e-10 * max(s[0], 1e-300):
        raise IllConditioned(
            "distortion design matrix is rank-deficient (points span too few radii)"
        )
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coeffs


def linear_init_base(dataset: CalibrationDataset) -> tuple[Intrinsics, tuple[Extrinsics, ...]]:
    """Steps 1-2 of the bootstrap: shared intrinsics and per-image poses.

    If the full five-parameter conic solve lands outside the positive
    definite cone (noise plus unmodeled distortion can push it out), the
    better-conditioned zero-skew solve is tried before giving up; the
    nonlinear refinement restores the skew afterwards.
    """
    if dataset.n_images < 3:
        raise InsufficientViews(
            f"calibration needs >= 3 images, got {dataset.n_images}"
        )
    hs = [estimate_homography(dataset.model_points, img.points) for img in dataset.images]
    try:
        intr = intrinsics_from_homographies(hs)
    except IllConditioned:
        intr = intrinsics_from_homographies(hs, zero_skew=True)
    extrs = tuple(extrinsics_from_homography(intr, h) for h in hs)
    return intr, extrs


def linear_init(
    dataset: CalibrationDataset,
    model_family,
    base: tuple[Intrinsics, tuple[Extrinsics, ...]] | None = None,
) -> InitialEstimate:
    """Full linear bootstrap for one model family.

    ``base`` lets callers reuse the intrinsics/extrinsics across families so
    that objective differences isolate the distortion model.
    """
    if base is None:
        base = linear_init_base(dataset)
    intr, extrs = base
    coeffs = init_distortion_linear(model_family, intr, extrs, dataset)
    return InitialEstimate(intr, extrs, coeffs)
