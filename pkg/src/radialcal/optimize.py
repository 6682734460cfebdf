"""Full-scale nonlinear refinement of intrinsics, poses, and distortion.

The objective is the reprojection functional

    J = sum_i sum_j || m_ij - mhat(A, k, R_i, t_i, M_j) ||^2

over N images and n target points, with mhat the ideal projection followed
by radial distortion.  A damped least-squares (Levenberg-Marquardt) loop
minimizes the stacked residual vector; the Jacobian is forward-difference
so new radial factor families need no analytic derivatives.

Poses are parameterized as axis-angle 3-vectors plus translations; the
packed parameter vector is

    [alpha, beta, gamma, u0, v0,  rvec_1, t_1, ..., rvec_N, t_N,  k...]

with 2 distortion coefficients for the single-function families and the
3-vector (f1, d1, f2) for the piecewise model.  The piecewise working-range
bound r2 is not a parameter: it is recomputed as the maximum predicted
undistorted radius inside every residual evaluation, which keeps the
objective a pure function of the parameter vector (so accepted steps are
monotone in J and the reported optimum is exactly reproducible).

Points whose predicted depth is non-positive during a trial step are
excluded from the residual (zeroed and counted) rather than aborting the
whole refinement on a transient bad pose.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import piecewise
from .calib_init import InitialEstimate
from .dataset import CalibrationDataset
from .distortion import PolyEven2, PolyQuad, forward_map_monotone
from .errors import CalibrationError, DivergedObjective
from .geometry import (
    Extrinsics,
    Intrinsics,
    camera_to_normalized,
    normalized_to_pixel_array,
    plane_to_camera,
    rotation_from_axis_angle,
)

logger = logging.getLogger(__name__)

N_INTRINSICS = 5
POSE_SIZE = 6


class ModelFamily(enum.Enum):
    POLY_EVEN2 = "poly-even2"
    POLY_QUAD = "poly-quad"
    PIECEWISE = "piecewise"

    @property
    def n_coefficients(self) -> int:
        return 3 if self is ModelFamily.PIECEWISE else 2


def build_model(family: ModelFamily, coefficients, r2: float | None = None):
    """Instantiate the radial model for a coefficient vector.

    The piecewise family additionally needs the working-range bound r2.
    """
    family = ModelFamily(family)
    c = [float(x) for x in np.asarray(coefficients).ravel()]
    if len(c) != family.n_coefficients:
        raise ValueError(
            f"{family.value} expects {family.n_coefficients} coefficients, got {len(c)}"
        )
    if family is ModelFamily.POLY_EVEN2:
        return PolyEven2(c[0], c[1])
    if family is ModelFamily.POLY_QUAD:
        return PolyQuad(c[0], c[1])
    if r2 is None:
        raise ValueError("the piecewise family needs r2 to build its segments")
    return piecewise.solve_coeffs(piecewise.PiecewiseParams(c[0], c[1], c[2], float(r2)))


@dataclass(frozen=True)
class RefineOptions:
    """Stopping tolerances for the damped least-squares loop."""

    tol_x: float = 1e-5
    tol_fun: float = 1e-5
    max_iter: int = 120
    max_fun_evals: int = 8000


@dataclass(frozen=True)
class ObjectiveReport:
    """Final objective value and loop bookkeeping.

    ``per_image_rms`` holds the per-image residual 2-norms in pixels, so
    their squares sum exactly to J.
    """

    J: float
    per_image_rms: tuple[float, ...]
    iterations: int
    converged: bool
    termination_reason: str


@dataclass(frozen=True)
class CalibrationResult:
    model_family: ModelFamily
    distortion_coefficients: tuple[float, ...]
    intrinsics: Intrinsics
    extrinsics: tuple[Extrinsics, ...]
    objective: ObjectiveReport
    r_max: float
    r2: float | None = None


def pack_parameters(
    intr: Intrinsics, rvecs: np.ndarray, tvecs: np.ndarray, coefficients: np.ndarray
) -> np.ndarray:
    """Pack (intrinsics, N axis-angle poses, distortion coefficients) into one vector."""
    rvecs = np.asarray(rvecs, dtype=float).reshape(-1, 3)
    tvecs = np.asarray(tvecs, dtype=float).reshape(-1, 3)
    if rvecs.shape != tvecs.shape:
        raise ValueError("rvecs and tvecs must both be (N, 3)")
    head = np.array([intr.alpha, intr.beta, intr.gamma, intr.u0, intr.v0])
    poses = np.hstack([rvecs, tvecs]).ravel()
    return np.concatenate([head, poses, np.asarray(coefficients, dtype=float).ravel()])


def unpack_parameters(
    v: np.ndarray, n_images: int
) -> tuple[Intrinsics, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of pack_parameters; pure copies, so the round-trip is exact."""
    v = np.asarray(v, dtype=float)
    expected_min = N_INTRINSICS + POSE_SIZE * n_images
    if v.size < expected_min + 2:
        raise ValueError(f"parameter vector too short: {v.size} < {expected_min + 2}")
    intr = Intrinsics(
        alpha=float(v[0]), beta=float(v[1]), gamma=float(v[2]), u0=float(v[3]), v0=float(v[4])
    )
    poses = v[N_INTRINSICS : N_INTRINSICS + POSE_SIZE * n_images].reshape(n_images, POSE_SIZE)
    return intr, poses[:, :3].copy(), poses[:, 3:].copy(), v[expected_min:].copy()


def _ideal_projections(
    intr: Intrinsics, rvecs: np.ndarray, tvecs: np.ndarray, model_xy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-image ideal normalized points, radii, and validity masks.

    Returns (xy (N, n, 2), radii (N, n), valid (N, n)); invalid rows carry
    a clamped depth so downstream arithmetic stays finite.
    """
    n_images = rvecs.shape[0]
    xy = np.empty((n_images, model_xy.shape[0], 2))
    valid = np.empty((n_images, model_xy.shape[0]), dtype=bool)
    for i in range(n_images):
        rot = rotation_from_axis_angle(rvecs[i])
        pts, z = camera_to_normalized(plane_to_camera(rot, tvecs[i], model_xy))
        xy[i] = pts
        valid[i] = z > 1e-12
    radii = np.hypot(xy[..., 0], xy[..., 1])
    return xy, radii, valid


def update_r2(params: np.ndarray, dataset: CalibrationDataset) -> float:
    """Maximum predicted undistorted radius over every image and point.

    This is the piecewise model's working-range bound; the knot follows as
    r1 = r2/2.  Points with non-positive predicted depth do not contribute.
    """
    intr, rvecs, tvecs, _ = unpack_parameters(np.asarray(params, dtype=float), dataset.n_images)
    _, radii, valid = _ideal_projections(intr, rvecs, tvecs, dataset.model_points)
    if not np.any(valid):
        return 0.0
    return float(np.max(radii[valid]))


def _evaluate_residuals(
    v: np.ndarray, dataset: CalibrationDataset, family: ModelFamily
) -> tuple[np.ndarray, int]:
    """Stacked (2Nn,) residual vector (predicted - observed) and exclusion count."""
    intr, rvecs, tvecs, coeffs = unpack_parameters(v, dataset.n_images)
    xy, radii, valid = _ideal_projections(intr, rvecs, tvecs, dataset.model_points)
    if family is ModelFamily.PIECEWISE:
        if not np.any(valid):
            raise DivergedObjective("no point has positive predicted depth")
        model = build_model(family, coeffs, r2=float(np.max(radii[valid])))
    else:
        model = build_model(family, coeffs)

    fac = model.factor(radii)
    distorted = normalized_to_pixel_array(intr, xy * fac[..., None])
    observed = np.stack([img.points for img in dataset.images])
    res = distorted - observed
    res[~valid] = 0.0
    return res.ravel(), int(np.count_nonzero(~valid))


def objective(
    params: np.ndarray, dataset: CalibrationDataset, model_family
) -> tuple[float, np.ndarray]:
    """Reprojection objective J and the stacked residual vector."""
    res, _ = _evaluate_residuals(
        np.asarray(params, dtype=float), dataset, ModelFamily(model_family)
    )
    return float(res @ res), res


def jacobian(params: np.ndarray, dataset: CalibrationDataset, model_family) -> np.ndarray:
    """Forward-difference Jacobian of the residual vector.

    Step per column: max(1e-7, 1e-7 * |parameter|).
    """
    family = ModelFamily(model_family)
    v = np.asarray(params, dtype=float).copy()
    base, _ = _evaluate_residuals(v, dataset, family)
    out = np.empty((base.size, v.size))
    for j in range(v.size):
        h = max(1e-7, 1e-7 * abs(float(v[j])))
        vj = v.copy()
        vj[j] += h
        shifted, _ = _evaluate_residuals(vj, dataset, family)
        out[:, j] = (shifted - base) / h
    return out


@dataclass
class _LoopState:
    v: np.ndarray
    res: np.ndarray
    J: float
    n_evals: int = 1
    iterations: int = 0
    excluded: int = 0
    reason: str = "max_iter"
    converged: bool = False


def _try_evaluate(
    v: np.ndarray, dataset: CalibrationDataset, family: ModelFamily
) -> tuple[np.ndarray, int] | None:
    """Residuals for a trial point, or None when the point is unusable."""
    try:
        res, excluded = _evaluate_residuals(v, dataset, family)
    except (CalibrationError, ValueError):
        return None
    if not np.all(np.isfinite(res)):
        return None
    return res, excluded


def refine(
    init: InitialEstimate,
    dataset: CalibrationDataset,
    model_family,
    options: RefineOptions | None = None,
) -> CalibrationResult:
    """Levenberg-Marquardt refinement of all parameters from a linear init.

    Termination mirrors the published tolerances: accepted step below
    tol_x (infinity norm), relative J decrease below tol_fun, max_iter
    iterations, or max_fun_evals residual evaluations.  Accepted steps
    never increase J, so the final J is at most the initial one.
    """
    family = ModelFamily(model_family)
    opts = options or RefineOptions()
    if len(init.extrinsics_per_image) != dataset.n_images:
        raise ValueError(
            f"init has {len(init.extrinsics_per_image)} poses for "
            f"{dataset.n_images} images"
        )
    if init.distortion_init.size != family.n_coefficients:
        raise ValueError(
            f"{family.value} needs {family.n_coefficients} initial coefficients, "
            f"got {init.distortion_init.size}"
        )

    rvecs = np.stack([e.axis_angle() for e in init.extrinsics_per_image])
    tvecs = np.stack([e.translation for e in init.extrinsics_per_image])
    v = pack_parameters(init.intrinsics, rvecs, tvecs, init.distortion_init)

    first = _try_evaluate(v, dataset, family)
    if first is None:
        raise DivergedObjective("objective is not finite at the initial estimate")
    res, excluded = first
    with np.errstate(over="ignore"):
        J0 = float(res @ res)
    if not np.isfinite(J0):
        raise DivergedObjective(f"objective is not finite at the initial estimate (J = {J0!r})")
    state = _LoopState(v=v, res=res, J=J0, excluded=excluded)

    lam = 1e-3
    n_params = v.size
    while state.iterations < opts.max_iter:
        if state.n_evals + n_params >= opts.max_fun_evals:
            state.reason = "max_fun_evals"
            break
        state.iterations += 1
        jac = np.empty((state.res.size, n_params))
        for j in range(n_params):
            h = max(1e-7, 1e-7 * abs(float(state.v[j])))
            vj = state.v.copy()
            vj[j] += h
            trial = _try_evaluate(vj, dataset, family)
            if trial is None:
                jac[:, j] = 0.0
            else:
                jac[:, j] = (trial[0] - state.res) / h
            state.n_evals += 1

        grad = jac.T @ state.res
        hess = jac.T @ jac
        identity = np.eye(n_params)
        stop_outer = False
        while True:
            try:
                step = np.linalg.solve(hess + lam * identity, -grad)
            except np.linalg.LinAlgError:
                step, *_ = np.linalg.lstsq(hess + lam * identity, -grad, rcond=None)
            if state.n_evals + 1 > opts.max_fun_evals:
                state.reason = "max_fun_evals"
                stop_outer = True
                break
            trial = _try_evaluate(state.v + step, dataset, family)
            state.n_evals += 1
            trial_J = float(trial[0] @ trial[0]) if trial is not None else np.inf
            if trial_J < state.J:
                prev_J = state.J
                state.v = state.v + step
                state.res, step_excluded = trial  # type: ignore[misc]
                state.J = trial_J
                state.excluded += step_excluded
                lam = max(lam * 0.1, 1e-15)
                if float(np.max(np.abs(step))) < opts.tol_x:
                    state.reason = "xtol"
                    state.converged = True
                    stop_outer = True
                elif prev_J - trial_J <= opts.tol_fun * prev_J:
                    state.reason = "ftol"
                    state.converged = True
                    stop_outer = True
                break
            lam = lam * 10.0
            if float(np.max(np.abs(step))) < opts.tol_x or lam > 1e14:
                # No acceptable step remains at this scale.
                state.reason = "xtol"
                state.converged = True
                stop_outer = True
                break
        if stop_outer:
            break
        if not np.isfinite(state.J):
            raise DivergedObjective(f"objective became non-finite (J = {state.J!r})")

    if state.excluded > 0:
        logger.warning(
            "%d point evaluation(s) had non-positive predicted depth and were excluded",
            state.excluded,
        )

    intr, rvecs, tvecs, coeffs = unpack_parameters(state.v, dataset.n_images)
    extrinsics = tuple(
        Extrinsics(rotation_from_axis_angle(rvecs[i]), tvecs[i])
        for i in range(dataset.n_images)
    )
    r_max = update_r2(state.v, dataset)
    r2 = r_max if family is ModelFamily.PIECEWISE else None
    model = build_model(family, coeffs, r2=r2 if r2 is not None else None)
    check_range = r2 if r2 is not None else r_max
    if check_range > 0.0 and not forward_map_monotone(model, check_range):
        logger.warning(
            "fitted %s forward map is not strictly increasing on [0, %.6g]",
            family.value,
            check_range,
        )

    per_image = state.res.reshape(dataset.n_images, -1)
    rms = tuple(float(np.linalg.norm(row)) for row in per_image)
    report = ObjectiveReport(
        J=state.J,
        per_image_rms=rms,
        iterations=state.iterations,
        converged=state.converged,
        termination_reason=state.reason,
    )
    return CalibrationResult(
        model_family=family,
        distortion_coefficients=tuple(float(c) for c in coeffs),
        intrinsics=intr,
        extrinsics=extrinsics,
        objective=report,
        r_max=r_max,
        r2=r2,
    )
