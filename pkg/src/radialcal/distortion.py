"""Single-function radial distortion models and their analytical inverses.

With r the radius of a point in normalized image coordinates, the distorted
radius is r_d = r * f(r), where the two model families here are

    even-order pair:   f(r) = 1 + k1 r**2 + k2 r**4
    quadratic pair:    f(r) = 1 + k1 r  + k2 r**2

Both coordinates of a point scale by the same factor, so in pixels the
distortion acts on the offset from the principal point:

    u_d - u0 = (u - u0) * f(r),   v_d - v0 = (v - v0) * f(r).

The quadratic pair is exactly invertible: r_d = r + k1 r**2 + k2 r**3 is a
cubic in r, solved in closed form (Cardano radicals when the shifted
discriminant is positive, the trigonometric triple-root form when it is
negative) followed by one Newton polish step.  The even-order pair has no
closed-form inverse; only the first-order approximation
r ~ r_d * (1 - k1 r_d**2 - k2 r_d**4) is provided, and it is approximate by
construction.

Radius arguments may be scalars or numpy arrays; scalar in, scalar out.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NegativeRadius,
    NoValidRoot,
    NumericalBreakdown,
    UnsupportedModel,
)
from .geometry import (
    Intrinsics,
    NormalizedPoint,
    PixelPoint,
    normalized_to_pixel,
    pixel_to_normalized,
)

# |shifted-cubic discriminant| at or below this is treated as a repeated root.
DELTA_TOL = 1e-14
# Residual alarm threshold for polished roots, relative to max(1, |constant term|).
ROOT_RESIDUAL_TOL = 1e-9


class Direction(enum.Enum):
    """Which way the parametric radial function maps.

    UNDISTORTED_TO_DISTORTED (the default throughout calibration) evaluates
    r_d = r * f(r); DISTORTED_TO_UNDISTORTED evaluates r = r_d * f(r_d).
    """

    UNDISTORTED_TO_DISTORTED = "u-d"
    DISTORTED_TO_UNDISTORTED = "d-u"


def _check_finite_pair(k1: float, k2: float) -> None:
    if not (math.isfinite(k1) and math.isfinite(k2)):
        raise ValueError(f"distortion coefficients must be finite, got ({k1}, {k2})")


@dataclass(frozen=True)
class PolyEven2:
    """Even-order two-coefficient model: f(r) = 1 + k1 r^2 + k2 r^4."""

    k1: float
    k2: float

    def __post_init__(self) -> None:
        _check_finite_pair(self.k1, self.k2)

    def factor(self, r):
        r = np.asarray(r, dtype=float)
        r2 = r * r
        out = 1.0 + self.k1 * r2 + self.k2 * r2 * r2
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class PolyQuad:
    """Quadratic-term two-coefficient model: f(r) = 1 + k1 r + k2 r^2."""

    k1: float
    k2: float

    def __post_init__(self) -> None:
        _check_finite_pair(self.k1, self.k2)

    def factor(self, r):
        r = np.asarray(r, dtype=float)
        out = 1.0 + self.k1 * r + self.k2 * r * r
        return out if out.ndim else float(out)

    def invert_radius(self, r_d):
        return undistort_radius_exact(self, r_d)


@dataclass(frozen=True)
class CubicSolution:
    """Real roots of the undistortion cubic for one distorted radius.

    ``roots`` are ascending (repeated roots listed with multiplicity),
    ``discriminant`` is the shifted-cubic discriminant (q/2)^2 + (p/3)^3,
    and ``selected`` is the middle root when three real roots exist,
    otherwise the single one.
    """

    roots: tuple[float, ...]
    discriminant: float
    selected: float


def _require_nonnegative(r: np.ndarray) -> None:
    if np.any(r < 0.0):
        raise NegativeRadius(f"radius must be >= 0, got min {np.min(r)!r}")


def distort_radius(model, r):
    """Forward radial map r -> r * f(r) for any model exposing factor()."""
    arr = np.asarray(r, dtype=float)
    _require_nonnegative(arr)
    out = arr * model.factor(arr)
    return out if out.ndim else float(out)


def distort_point(model, p: NormalizedPoint) -> NormalizedPoint:
    """Scale both normalized coordinates by f(r), r = sqrt(x^2 + y^2)."""
    fac = model.factor(math.hypot(p[0], p[1]))
    return NormalizedPoint(p[0] * fac, p[1] * fac)


def distort_pixel(model, intr: Intrinsics, p: PixelPoint) -> PixelPoint:
    """Apply radial distortion in pixel coordinates.

    The radius is measured in normalized coordinates; the pixel offset from
    the principal point then scales by f(r).
    """
    n = pixel_to_normalized(intr, p)
    fac = model.factor(math.hypot(n.x, n.y))
    return PixelPoint(
        intr.u0 + (p[0] - intr.u0) * fac,
        intr.v0 + (p[1] - intr.v0) * fac,
    )


def undistort_radius_approx(model: PolyEven2, r_d):
    """First-order inverse of the even-order model: r_d * (1 - k1 r_d^2 - k2 r_d^4).

    Approximate by construction; carries no round-trip guarantee.
    """
    arr = np.asarray(r_d, dtype=float)
    _require_nonnegative(arr)
    r2 = arr * arr
    out = arr * (1.0 - model.k1 * r2 - model.k2 * r2 * r2)
    return out if out.ndim else float(out)


def monic_cubic_real_roots(a, b, c) -> tuple[np.ndarray, np.ndarray]:
    """All real roots of x^3 + a x^2 + b x + c = 0, elementwise over arrays.

    Returns ``(roots, delta)`` where ``roots`` has one trailing axis of
    length 3, ascending with NaN padding when fewer than three real roots
    exist, and ``delta`` is the discriminant (q/2)^2 + (p/3)^3 of the
    shifted cubic t^3 + p t + q (x = t - a/3).  Each real root receives one
    Newton polish step on the original cubic.
    """
    a, b, c = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (a, b, c))
    )
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    delta = (q / 2.0) ** 2 + (p / 3.0) ** 3

    roots = np.full(a.shape + (3,), np.nan)
    one = delta > DELTA_TOL
    three = delta < -DELTA_TOL
    repeated = ~(one | three)

    with np.errstate(invalid="ignore", divide="ignore"):
        if np.any(one):
            qq = q[one]
            sq = np.sqrt(delta[one])
            # Take the cube root of the larger-magnitude Cardano term first
            # to avoid cancellation, then recover the other from u*v = -p/3.
            sign_q = np.where(qq >= 0.0, 1.0, -1.0)
            u = np.cbrt(-qq / 2.0 - sign_q * sq)
            t = u - p[one] / (3.0 * u)
            roots[one, 0] = t
        if np.any(three):
            pp = p[three]
            m = 2.0 * np.sqrt(-pp / 3.0)
            arg = np.clip(3.0 * q[three] / (pp * m), -1.0, 1.0)
            theta = np.arccos(arg) / 3.0
            offsets = 2.0 * np.pi * np.array([0.0, 1.0, 2.0]) / 3.0
            roots[three] = m[:, None] * np.cos(theta[:, None] - offsets)
        if np.any(repeated):
            pp = p[repeated]
            qq = q[repeated]
            small_p = np.abs(pp) < 1e-300
            t_simple = np.where(small_p, 0.0, 3.0 * qq / np.where(small_p, 1.0, pp))
            roots[repeated, 0] = t_simple
            roots[repeated, 1] = -t_simple / 2.0
            roots[repeated, 2] = -t_simple / 2.0

    roots = roots - a[..., None] / 3.0

    # One Newton polish step on the original cubic where the slope is healthy.
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        g = ((roots + a[..., None]) * roots + b[..., None]) * roots + c[..., None]
        gp = (3.0 * roots + 2.0 * a[..., None]) * roots + b[..., None]
        step = g / gp
        ok = np.isfinite(step) & (np.abs(gp) > 1e-300)
        roots = np.where(ok, roots - step, roots)

    return np.sort(roots, axis=-1), delta


def solve_depressed_cubic(k1: float, k2: float, r_d: float) -> CubicSolution:
    """Closed-form real roots of r^3 + (k1/k2) r^2 + (1/k2) r - r_d/k2 = 0.

    This is the undistortion cubic of the quadratic-pair model.  With three
    real roots the middle one is selected (ascending index 1); with one it
    is the single root; at a (near-)repeated root the selected value is the
    repeated-root limit.  Raises NumericalBreakdown if any polished root
    leaves a residual above 1e-9 * max(1, |constant term|).
    """
    if k2 == 0.0:
        raise ValueError("the cubic degenerates for k2 = 0; use undistort_radius_exact")
    if r_d < 0.0:
        raise NegativeRadius(f"distorted radius must be >= 0, got {r_d!r}")
    a = k1 / k2
    b = 1.0 / k2
    c = -r_d / k2
    roots3, delta = monic_cubic_real_roots(a, b, c)
    roots = roots3[np.isfinite(roots3)]
    residual = np.abs(((roots + a) * roots + b) * roots + c)
    if np.any(residual > ROOT_RESIDUAL_TOL * max(1.0, abs(c))):
        raise NumericalBreakdown(
            f"cubic root residual {residual.max():.3e} exceeds tolerance for "
            f"(k1={k1}, k2={k2}, r_d={r_d})"
        )
    selected = roots[1] if roots.size == 3 else roots[0]
    return CubicSolution(tuple(float(r) for r in roots), float(delta), float(selected))


def _smallest_root_in_window(
    roots: np.ndarray, lo: float, hi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Smallest real root inside [lo, hi] per element; (values, found mask)."""
    inside = np.where((roots >= lo) & (roots <= hi), roots, np.nan)
    with np.errstate(invalid="ignore"):
        found = np.any(np.isfinite(inside), axis=-1)
        sel = np.where(found, np.nanmin(np.where(found[..., None], inside, np.inf), axis=-1), np.nan)
    return sel, found


def undistort_radius_exact(model: PolyQuad, r_d):
    """Exact inverse of the quadratic-pair forward map.

    Solves k2 r^3 + k1 r^2 + r - r_d = 0 in closed form; for a forward map
    that is strictly increasing on its working range the sought preimage is
    the smallest nonnegative real root (any other nonnegative root lies
    beyond the range's turning point).  Falls back to the quadratic root
    continuous with r = r_d when k2 = 0, and to the identity when both
    coefficients vanish.  The result always round-trips through
    distort_radius to 1e-9.
    """
    arr = np.asarray(r_d, dtype=float)
    _require_nonnegative(arr)
    scalar = not arr.ndim
    work = np.atleast_1d(arr).astype(float)

    # A k2 whose cubic term never matters would wreck the monic form's
    # conditioning (every coefficient divides by k2); treat it as zero and
    # let the polish below absorb the truncation.
    span = max(1.0, float(work.max(initial=0.0)))
    k2_negligible = abs(model.k2) * span * span <= 1e-8 * max(1.0, abs(model.k1) * span)

    if k2_negligible:
        if model.k1 == 0.0:
            out = work.copy()
        else:
            disc = 1.0 + 4.0 * model.k1 * work
            if np.any(disc < 0.0):
                raise NoValidRoot(
                    f"no real root of k1 r^2 + r = r_d for k1={model.k1}, "
                    f"r_d up to {work.max()!r}"
                )
            out = 2.0 * work / (1.0 + np.sqrt(disc))
    else:
        roots, _ = monic_cubic_real_roots(
            model.k1 / model.k2, 1.0 / model.k2, -work / model.k2
        )
        sel, found = _smallest_root_in_window(roots, -1e-12, np.inf)
        if not np.all(found):
            raise NoValidRoot(
                f"no nonnegative real root for (k1={model.k1}, k2={model.k2}); "
                "the distorted radius lies outside the model's valid regime"
            )
        out = np.maximum(sel, 0.0)

    # Two Newton steps on the original, well-scaled forward equation.
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for _ in range(2):
            g = ((model.k2 * out + model.k1) * out + 1.0) * out - work
            gp = (3.0 * model.k2 * out + 2.0 * model.k1) * out + 1.0
            step = g / gp
            out = np.where(np.isfinite(step), out - step, out)
    out = np.maximum(out, 0.0)

    residual = np.abs(distort_radius(model, out) - work)
    if np.any(residual > 1e-9 * np.maximum(1.0, work)):
        raise NumericalBreakdown(
            f"undistortion round-trip residual {residual.max():.3e} for "
            f"(k1={model.k1}, k2={model.k2})"
        )
    return float(out[0]) if scalar else out.reshape(arr.shape)


def undistort_pixel(model, intr: Intrinsics, p_d: PixelPoint) -> PixelPoint:
    """Recover the ideal pixel point from a distorted observation.

    Requires a model with an exact radius inverse (quadratic pair or the
    piecewise model); the even-order pair is refused because its inverse
    has no closed form.
    """
    invert = getattr(model, "invert_radius", None)
    if invert is None:
        raise UnsupportedModel(
            f"{type(model).__name__} has no exact analytical inverse; "
            "use the approximate inverse explicitly if acceptable"
        )
    n_d = pixel_to_normalized(intr, p_d)
    r_d = math.hypot(n_d.x, n_d.y)
    if r_d == 0.0:
        return PixelPoint(float(p_d[0]), float(p_d[1]))
    scale = invert(r_d) / r_d
    return normalized_to_pixel(intr, NormalizedPoint(n_d.x * scale, n_d.y * scale))


def undistort_pixel_approx(model: PolyEven2, intr: Intrinsics, p_d: PixelPoint) -> PixelPoint:
    """Approximate pixel undistortion for the even-order pair."""
    n_d = pixel_to_normalized(intr, p_d)
    r_d = math.hypot(n_d.x, n_d.y)
    if r_d == 0.0:
        return PixelPoint(float(p_d[0]), float(p_d[1]))
    scale = undistort_radius_approx(model, r_d) / r_d
    return normalized_to_pixel(intr, NormalizedPoint(n_d.x * scale, n_d.y * scale))


def apply_direction(model, direction: Direction, r_in):
    """Evaluate the model's native map for the given direction.

    U-D input is an undistorted radius and the result is distorted;
    D-U input is a distorted radius and the result is undistorted.  The
    arithmetic is identical (r_in * f(r_in)); only the interpretation of
    input and output swaps.
    """
    if not isinstance(direction, Direction):
        raise TypeError(f"direction must be a Direction, got {direction!r}")
    return distort_radius(model, r_in)


def invert_direction(model: PolyQuad, direction: Direction, r_out):
    """Invert the model's native map: the same cubic with the roles swapped.

    For U-D this recovers the undistorted radius from a distorted one; for
    D-U it recovers the distorted radius from an undistorted one.
    """
    if not isinstance(direction, Direction):
        raise TypeError(f"direction must be a Direction, got {direction!r}")
    return undistort_radius_exact(model, r_out)


def forward_map_monotone(model, r_max: float, samples: int = 256) -> bool:
    """Check that r -> r * f(r) is strictly increasing on [0, r_max]."""
    if r_max < 0.0:
        raise NegativeRadius(f"r_max must be >= 0, got {r_max!r}")
    if r_max == 0.0:
        return True
    grid = np.linspace(0.0, float(r_max), int(samples))
    return bool(np.all(np.diff(distort_radius(model, grid)) > 0.0))
