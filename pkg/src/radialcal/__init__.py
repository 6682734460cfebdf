"""Planar camera calibration with analytically invertible radial distortion.

Three radial model families share one calibration pipeline:

* ``PolyEven2`` — the conventional even-order pair f(r) = 1 + k1 r^2 + k2 r^4
  (approximate inverse only),
* ``PolyQuad`` — the quadratic-term pair f(r) = 1 + k1 r + k2 r^2 with an
  exact closed-form (cubic) inverse,
* the two-segment smooth piecewise model built from (f1, d1, f2), exactly
  invertible per segment through the same cubic machinery.

The pipeline estimates homographies per view, closed-form intrinsics and
poses, a linear distortion initialization, and then refines everything with
damped least squares on the reprojection objective.
"""

from . import piecewise
from .calib_init import (
    Homography,
    InitialEstimate,
    estimate_homography,
    extrinsics_from_homography,
    init_distortion_linear,
    intrinsics_from_homographies,
    linear_init,
    linear_init_base,
)
from .dataset import CalibrationDataset, ImageObservations
from .distortion import (
    CubicSolution,
    Direction,
    PolyEven2,
    PolyQuad,
    apply_direction,
    distort_pixel,
    distort_point,
    distort_radius,
    forward_map_monotone,
    invert_direction,
    monic_cubic_real_roots,
    solve_depressed_cubic,
    undistort_pixel,
    undistort_pixel_approx,
    undistort_radius_approx,
    undistort_radius_exact,
)
from .errors import (
    CalibrationError,
    DegenerateConfiguration,
    DegenerateKnot,
    DivergedObjective,
    IllConditioned,
    InputError,
    InsufficientViews,
    NegativeRadius,
    NoValidRoot,
    NonPositiveDepth,
    NumericalBreakdown,
    NumericalError,
    ParseError,
    ShapeError,
    UnsupportedModel,
)
from .fileio import (
    curve_rows,
    load_dataset,
    load_points,
    load_result,
    save_curve,
    save_dataset,
    save_points,
    save_result,
)
from .geometry import (
    Extrinsics,
    Intrinsics,
    ModelPoint,
    NormalizedPoint,
    PixelPoint,
    normalized_to_pixel,
    pixel_to_normalized,
    project_ideal,
)
from .optimize import (
    CalibrationResult,
    ModelFamily,
    ObjectiveReport,
    RefineOptions,
    build_model,
    jacobian,
    objective,
    pack_parameters,
    refine,
    unpack_parameters,
    update_r2,
)
from .piecewise import PiecewiseCoeffs, PiecewiseParams, solve_coeffs
from .synth import (
    RecoveryReport,
    SyntheticScene,
    default_scene,
    generate,
    max_ideal_radius,
    piecewise_scene,
    recovery_report,
    square_grid,
)

__version__ = "0.1.0"
