"""In-memory calibration data: planar target points plus per-image observations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


def _as_points(arr, what: str) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim != 2 or out.shape[1] != 2 or out.shape[0] < 1:
        raise ShapeError(f"{what} must be an (n, 2) array with n >= 1, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ShapeError(f"{what} must be finite")
    out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ImageObservations:
    """Observed pixel points for one image, aligned index-wise with the target."""

    name: str
    points: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _as_points(self.points, f"image {self.name!r} points"))


@dataclass(frozen=True)
class CalibrationDataset:
    """Planar model points shared across images, plus per-image pixel observations."""

    model_points: np.ndarray
    images: tuple[ImageObservations, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "model_points", _as_points(self.model_points, "model_points"))
        object.__setattr__(self, "images", tuple(self.images))
        if len(self.images) < 1:
            raise ShapeError("dataset needs at least one image")
        n = self.model_points.shape[0]
        for img in self.images:
            if img.points.shape[0] != n:
                raise ShapeError(
                    f"image {img.name!r} has {img.points.shape[0]} points "
                    f"but the target defines {n}"
                )

    @property
    def n_points(self) -> int:
        return int(self.model_points.shape[0])

    @property
    def n_images(self) -> int:
        return len(self.images)
