"""File formats: datasets, calibration results, curve tables, point lists.

Everything is human-readable structured text (JSON with decimal numbers;
no binary).  Floats serialize through Python's shortest round-trip repr,
so every emitted file re-parses into a value equal to the in-memory
original, and identical inputs produce byte-identical outputs.

Dataset schema::

    {
      "model_points": [[x, y], ...],              # world units, planar target
      "images": [
        {"name": "view00", "points": [[u, v], ...]},   # pixels, aligned with
        ...                                            # model_points by index
      ]
    }

Result schema::

    {
      "model_family": "poly-even2" | "poly-quad" | "piecewise",
      "distortion_coefficients": [...],           # (k1, k2) or (f1, d1, f2)
      "intrinsics": {"alpha": ..., "gamma": ..., "u0": ..., "beta": ..., "v0": ...},
      "extrinsics": [{"rotation": [9 row-major], "translation": [3]}, ...],
      "objective": {"J": ..., "per_image_rms": [...], "iterations": ...,
                    "converged": ..., "termination_reason": "..."},
      "r_max": ...,                               # max predicted undistorted radius
      "r2": ...                                   # piecewise only
    }

Point-list schema (for undistortion)::

    {"points": [[u, v], ...]}

Curve output is two-column comma-separated text with the header line "r,f".
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .dataset import CalibrationDataset, ImageObservations
from .errors import ParseError, ShapeError
from .geometry import Extrinsics, Intrinsics
from .optimize import CalibrationResult, ModelFamily, ObjectiveReport, build_model


def _load_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _dump_json(path, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n")


def _field(mapping: Any, key: str, where: str) -> Any:
    if not isinstance(mapping, dict):
        raise ParseError(f"{where}: expected an object, got {type(mapping).__name__}")
    if key not in mapping:
        raise ParseError(f"{where}: missing field {key!r}")
    return mapping[key]


def _point_array(raw: Any, where: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: points must be numeric pairs ({exc})") from exc
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParseError(f"{where}: points must be an array of [x, y] pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{where}: points must be finite")
    return arr


def load_dataset(path) -> CalibrationDataset:
    """Parse and validate a dataset file."""
    raw = _load_json(path)
    where = str(path)
    model_points = _point_array(_field(raw, "model_points", where), f"{where}: model_points")
    images_raw = _field(raw, "images", where)
    if not isinstance(images_raw, list) or not images_raw:
        raise ParseError(f"{where}: 'images' must be a non-empty array")
    images = []
    for idx, entry in enumerate(images_raw):
        name = _field(entry, "name", f"{where}: images[{idx}]")
        pts = _point_array(
            _field(entry, "points", f"{where}: images[{idx}]"),
            f"{where}: images[{idx}] ({name!r})",
        )
        if pts.shape[0] != model_points.shape[0]:
            raise ShapeError(
                f"{where}: images[{idx}] ({name!r}) has {pts.shape[0]} points "
                f"but model_points defines {model_points.shape[0]}"
            )
        images.append(ImageObservations(name=str(name), points=pts))
    return CalibrationDataset(model_points=model_points, images=tuple(images))


def save_dataset(path, dataset: CalibrationDataset) -> None:
    payload = {
        "model_points": dataset.model_points.tolist(),
        "images": [
            {"name": img.name, "points": img.points.tolist()} for img in dataset.images
        ],
    }
    _dump_json(path, payload)


def result_to_dict(result: CalibrationResult) -> dict:
    intr = result.intrinsics
    out = {
        "model_family": result.model_family.value,
        "distortion_coefficients": list(result.distortion_coefficients),
        "intrinsics": {
            "alpha": intr.alpha,
            "gamma": intr.gamma,
            "u0": intr.u0,
            "beta": intr.beta,
            "v0": intr.v0,
        },
        "extrinsics": [
            {
                "rotation": [float(x) for x in e.rotation.ravel()],
                "translation": [float(x) for x in e.translation],
            }
            for e in result.extrinsics
        ],
        "objective": {
            "J": result.objective.J,
            "per_image_rms": list(result.objective.per_image_rms),
            "iterations": result.objective.iterations,
            "converged": result.objective.converged,
            "termination_reason": result.objective.termination_reason,
        },
        "r_max": result.r_max,
    }
    if result.r2 is not None:
        out["r2"] = result.r2
    return out


def save_result(path, result: CalibrationResult) -> None:
    _dump_json(path, result_to_dict(result))


def load_result(path) -> CalibrationResult:
    raw = _load_json(path)
    where = str(path)
    try:
        family = ModelFamily(_field(raw, "model_family", where))
    except ValueError as exc:
        raise ParseError(f"{where}: unknown model_family") from exc
    coeffs = tuple(float(c) for c in _field(raw, "distortion_coefficients", where))
    intr_raw = _field(raw, "intrinsics", where)
    try:
        intr = Intrinsics(
            alpha=float(_field(intr_raw, "alpha", f"{where}: intrinsics")),
            beta=float(_field(intr_raw, "beta", f"{where}: intrinsics")),
            gamma=float(_field(intr_raw, "gamma", f"{where}: intrinsics")),
            u0=float(_field(intr_raw, "u0", f"{where}: intrinsics")),
            v0=float(_field(intr_raw, "v0", f"{where}: intrinsics")),
        )
    except ValueError as exc:
        raise ParseError(f"{where}: invalid intrinsics ({exc})") from exc
    extrinsics = []
    for idx, entry in enumerate(_field(raw, "extrinsics", where)):
        rot = np.asarray(
            _field(entry, "rotation", f"{where}: extrinsics[{idx}]"), dtype=float
        ).reshape(3, 3)
        t = np.asarray(
            _field(entry, "translation", f"{where}: extrinsics[{idx}]"), dtype=float
        )
        try:
            extrinsics.append(Extrinsics(rotation=rot, translation=t))
        except ValueError as exc:
            raise ParseError(f"{where}: extrinsics[{idx}] invalid ({exc})") from exc
    obj_raw = _field(raw, "objective", where)
    report = ObjectiveReport(
        J=float(_field(obj_raw, "J", f"{where}: objective")),
        per_image_rms=tuple(float(x) for x in _field(obj_raw, "per_image_rms", f"{where}: objective")),
        iterations=int(_field(obj_raw, "iterations", f"{where}: objective")),
        converged=bool(_field(obj_raw, "converged", f"{where}: objective")),
        termination_reason=str(_field(obj_raw, "termination_reason", f"{where}: objective")),
    )
    r_max = float(_field(raw, "r_max", where))
    r2 = float(raw["r2"]) if "r2" in raw else None
    return CalibrationResult(
        model_family=family,
        distortion_coefficients=coeffs,
        intrinsics=intr,
        extrinsics=tuple(extrinsics),
        objective=report,
        r_max=r_max,
        r2=r2,
    )


def curve_rows(result: CalibrationResult, samples: int) -> list[tuple[float, float]]:
    """(r, f(r)) pairs on a uniform grid over the model's working range."""
    if samples < 2:
        raise ParseError(f"curve needs >= 2 samples, got {samples}")
    hi = result.r2 if result.r2 is not None else result.r_max
    model = build_model(result.model_family, result.distortion_coefficients, r2=result.r2)
    grid = np.linspace(0.0, hi, int(samples))
    f = np.asarray(model.factor(grid), dtype=float)
    return [(float(r), float(v)) for r, v in zip(grid, f)]


def save_curve(path, result: CalibrationResult, samples: int) -> None:
    rows = curve_rows(result, samples)
    lines = ["r,f"] + [f"{r!r},{v!r}" for r, v in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def load_points(path) -> np.ndarray:
    """Read a point-list file ({"points": [[u, v], ...]})."""
    raw = _load_json(path)
    return _point_array(_field(raw, "points", str(path)), f"{path}: points")


def save_points(path, points: np.ndarray) -> None:
    arr = np.asarray(points, dtype=float)
    _dump_json(path, {"points": arr.tolist()})
