"""Pinhole camera geometry: intrinsics, rigid poses, ideal projection.

The camera applies the rigid transform ``X_cam = R @ X_world + t`` followed
by perspective division and the upper-triangular intrinsic matrix

    A = [[alpha, gamma, u0],
         [0,     beta,  v0],
         [0,     0,     1 ]]

so that for a planar target point (x, y) with world Z = 0:

    u = alpha * xn + gamma * yn + u0,   v = beta * yn + v0,

with (xn, yn) = (X_cam/Z_cam, Y_cam/Z_cam) the normalized image
coordinates.  All values are float64; geometry objects are immutable after
construction and every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NonPositiveDepth

# Depths below this are treated as "at or behind the camera" rather than
# roundoff on a valid pose.
MIN_DEPTH = 1e-12

_ORTHONORMAL_TOL = 1e-9


class ModelPoint(NamedTuple):
    """Point on the planar calibration target, world units, Z = 0."""

    x: float
    y: float


class PixelPoint(NamedTuple):
    u: float
    v: float


class NormalizedPoint(NamedTuple):
    """Image point with the intrinsic matrix removed (dimensionless)."""

    x: float
    y: float


@dataclass(frozen=True)
class Intrinsics:
    """The five pinhole parameters (alpha, beta, gamma, u0, v0) of A."""

    alpha: float
    beta: float
    gamma: float
    u0: float
    v0: float

    def __post_init__(self) -> None:
        vals = (self.alpha, self.beta, self.gamma, self.u0, self.v0)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"intrinsics must be finite, got {vals}")
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError(
                f"focal scales must be positive, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def matrix(self) -> np.ndarray:
        """The 3x3 intrinsic matrix A."""
        return np.array(
            [
                [self.alpha, self.gamma, self.u0],
                [0.0, self.beta, self.v0],
                [0.0, 0.0, 1.0],
            ]
        )


def _as_rotation(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("rotation must be a finite 3x3 matrix")
    err = np.abs(m.T @ m - np.eye(3)).max()
    if err > _ORTHONORMAL_TOL:
        raise ValueError(f"rotation is not orthonormal (max |R'R - I| = {err:.3e})")
    det = float(np.linalg.det(m))
    if abs(det - 1.0) > _ORTHONORMAL_TOL:
        raise ValueError(f"rotation must have det +1, got {det!r}")
    m = m.copy()
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Extrinsics:
    """Rigid world-to-camera transform: X_cam = rotation @ X_world + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _as_rotation(self.rotation))
        t = np.asarray(self.translation, dtype=float)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError("translation must be a finite 3-vector")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_axis_angle(cls, rvec: np.ndarray, tvec: np.ndarray) -> "Extrinsics":
        return cls(rotation_from_axis_angle(rvec), np.asarray(tvec, dtype=float))

    def axis_angle(self) -> np.ndarray:
        return axis_angle_from_rotation(self.rotation)


def rotation_from_axis_angle(rvec: np.ndarray) -> np.ndarray:
    """Rodrigues formula: 3-vector (axis * angle) to rotation matrix."""
    rvec = np.asarray(rvec, dtype=float).reshape(3)
    theta = float(np.linalg.norm(rvec))
    kx, ky, kz = rvec
    k = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    if theta < 1e-7:
        # Series in theta^2 keeps orthonormality to O(theta^6).
        c1 = 1.0 - theta**2 / 6.0
        c2 = 0.5 - theta**2 / 24.0
    else:
        c1 = np.sin(theta) / theta
        c2 = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + c1 * k + c2 * (k @ k)


def axis_angle_from_rotation(rot: np.ndarray) -> np.ndarray:
    """Inverse Rodrigues: rotation matrix to axis * angle 3-vector."""
    rot = np.asarray(rot, dtype=float)
    vee = 0.5 * np.array(
        [rot[2, 1] - rot[1, 2], rot[0, 2] - rot[2, 0], rot[1, 0] - rot[0, 1]]
    )
    cos_theta = float(np.clip((np.trace(rot) - 1.0) * 0.5, -1.0, 1.0))
    sin_theta = float(np.linalg.norm(vee))
    theta = float(np.arctan2(sin_theta, cos_theta))
    if sin_theta > 1e-7:
        return vee * (theta / sin_theta)
    if cos_theta > 0.0:
        # theta ~ 0: vee already equals axis * sin(theta) ~ axis * theta.
        return vee
    # theta ~ pi: recover the axis from the diagonal of R = 2aa' - I.
    axis = np.sqrt(np.maximum(np.diag(rot) + 1.0, 0.0) / 2.0)
    i = int(np.argmax(axis))
    for j in range(3):
        if j != i:
            axis[j] = rot[i, j] / (2.0 * axis[i])
    n = float(np.linalg.norm(axis))
    if n == 0.0:
        return np.zeros(3)
    return axis / n * theta


def nearest_rotation(m: np.ndarray) -> np.ndarray:
    """Orthogonal-Procrustes projection of a 3x3 matrix onto SO(3)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    if np.linalg.det(u @ vt) < 0.0:
        u = u.copy()
        u[:, -1] *= -1.0
    return u @ vt


# -- array kernels (shared by the optimizer and the synthetic generator) --

def plane_to_camera(rotation: np.ndarray, translation: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """Map (n, 2) planar target points (Z_world = 0) to (n, 3) camera coordinates."""
    xy = np.asarray(xy, dtype=float)
    return xy @ np.asarray(rotation)[:, :2].T + np.asarray(translation)


def camera_to_normalized(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Perspective division; returns ((n, 2) normalized points, (n,) depths).

    Depths are returned unchecked so callers can mask invalid points.
    Division uses a clamped depth to avoid spurious warnings on masked rows.
    """
    xyz = np.asarray(xyz, dtype=float)
    z = xyz[..., 2]
    safe = np.where(np.abs(z) < MIN_DEPTH, 1.0, z)
    return xyz[..., :2] / safe[..., None], z


def normalized_to_pixel_array(intr: Intrinsics, xy: np.ndarray) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    u = intr.alpha * xy[..., 0] + intr.gamma * xy[..., 1] + intr.u0
    v = intr.beta * xy[..., 1] + intr.v0
    return np.stack([u, v], axis=-1)


def pixel_to_normalized_array(intr: Intrinsics, uv: np.ndarray) -> np.ndarray:
    uv = np.asarray(uv, dtype=float)
    y = (uv[..., 1] - intr.v0) / intr.beta
    x = (uv[..., 0] - intr.u0 - intr.gamma * y) / intr.alpha
    return np.stack([x, y], axis=-1)


# -- point-level operations --

def project_ideal(intr: Intrinsics, extr: Extrinsics, p: ModelPoint) -> PixelPoint:
    """Distortion-free projection of a planar target point.

    Raises NonPositiveDepth when the camera-frame depth is <= 1e-12 (point
    at or behind the camera).
    """
    xc = extr.rotation[:, 0] * p[0] + extr.rotation[:, 1] * p[1] + extr.translation
    z = float(xc[2])
    if z <= MIN_DEPTH:
        raise NonPositiveDepth(f"camera-frame depth {z!r} for point {tuple(p)!r}")
    return normalized_to_pixel(intr, NormalizedPoint(xc[0] / z, xc[1] / z))


def pixel_to_normalized(intr: Intrinsics, p: PixelPoint) -> NormalizedPoint:
    """Apply A^-1 to a pixel point."""
    y = (p[1] - intr.v0) / intr.beta
    x = (p[0] - intr.u0 - intr.gamma * y) / intr.alpha
    return NormalizedPoint(float(x), float(y))


def normalized_to_pixel(intr: Intrinsics, p: NormalizedPoint) -> PixelPoint:
    """Apply A to a normalized point; exact inverse of pixel_to_normalized."""
    return PixelPoint(
        float(intr.alpha * p[0] + intr.gamma * p[1] + intr.u0),
        float(intr.beta * p[1] + intr.v0),
    )
