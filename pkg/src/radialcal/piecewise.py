"""Two-segment smooth piecewise radial distortion model.

The radial factor f is quadratic on each side of an interior knot at
r1 = r2 / 2, where r2 bounds the working range of observed radii:

    inner   f(r) = a0 + a1 r + a2 r^2,   r in [0, r1]
    outer   f(r) = b0 + b1 r + b2 r^2,   r in (r1, r2]

Six constraints determine the coefficients uniquely from three free
parameters (f1, d1, f2): f(0) = 1, the segments share the value f1 and the
derivative d1 at the knot, and the outer segment takes the value f2 at r2.
In closed form:

    a0 = 1
    a1 = (-2 - r1 d1 + 2 f1) / r1
    a2 = (1 + r1 d1 - f1) / r1^2
    b2 = (f2 - f1 + r1 d1 - r2 d1) / (r1 - r2)^2
    b1 = d1 - 2 b2 r1
    b0 = f1 - d1 r1 + b2 r1^2

Because each segment has the same quadratic shape as the single
quadratic-pair model, each inverts through the same closed-form cubic, so
undistortion needs no iteration.  Beyond r2 the outer quadratic is
extrapolated; clamping would put a kink exactly where finite-difference
Jacobians probe during optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateKnot, NegativeRadius, NoValidRoot, NumericalBreakdown
from .distortion import monic_cubic_real_roots, _smallest_root_in_window

# Constraint residuals above this indicate a construction bug, not roundoff.
CONSTRAINT_TOL = 1e-12
# Acceptance window slack around segment boundaries, as a fraction of r2.
BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class PiecewiseParams:
    """Free parameters: knot value f1, shared knot slope d1, end value f2.

    The knot sits at r1 = r2/2; r2 is the working-range bound (maximum
    observed radius), not an optimization variable.
    """

    f1: float
    d1: float
    f2: float
    r2: float

    def __post_init__(self) -> None:
        vals = (self.f1, self.d1, self.f2, self.r2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"piecewise parameters must be finite, got {vals}")
        if self.r2 <= 0.0:
            raise ValueError(f"r2 must be positive, got {self.r2!r}")

    @property
    def r1(self) -> float:
        return self.r2 / 2.0


@dataclass(frozen=True)
class PiecewiseCoeffs:
    """Solved segment coefficients; value and slope match at the knot."""

    a0: float
    a1: float
    a2: float
    b0: float
    b1: float
    b2: float
    r1: float
    r2: float

    def __post_init__(self) -> None:
        if self.a0 != 1.0:
            raise ValueError(f"inner segment must satisfy f(0) = 1, got a0 = {self.a0!r}")
        if not (0.0 < self.r1 < self.r2) or self.r1 != self.r2 / 2.0:
            raise ValueError(f"knot must sit at r2/2, got r1={self.r1!r}, r2={self.r2!r}")
        value_gap = abs(
            (self.a0 + self.a1 * self.r1 + self.a2 * self.r1**2)
            - (self.b0 + self.b1 * self.r1 + self.b2 * self.r1**2)
        )
        slope_gap = abs(
            (self.a1 + 2.0 * self.a2 * self.r1) - (self.b1 + 2.0 * self.b2 * self.r1)
        )
        if value_gap > CONSTRAINT_TOL or slope_gap > CONSTRAINT_TOL:
            raise ValueError(
                f"segments do not join smoothly at the knot "
                f"(value gap {value_gap:.3e}, slope gap {slope_gap:.3e})"
            )

    def factor(self, r):
        return evaluate(self, r)

    def invert_radius(self, r_d):
        return undistort_radius(self, r_d)


def solve_coeffs(params: PiecewiseParams) -> PiecewiseCoeffs:
    """Closed-form segment coefficients from (f1, d1, f2) and the range bound."""
    r1 = params.r1
    r2 = params.r2
    if r1 < 1e-12:
        raise DegenerateKnot(f"knot radius {r1!r} is too small to support two segments")
    f1, d1, f2 = params.f1, params.d1, params.f2
    a1 = (-2.0 - r1 * d1 + 2.0 * f1) / r1
    a2 = (1.0 + r1 * d1 - f1) / r1**2
    b2 = (f2 - f1 + r1 * d1 - r2 * d1) / (r1 - r2) ** 2
    b1 = d1 - 2.0 * b2 * r1
    b0 = f1 - d1 * r1 + b2 * r1**2
    return PiecewiseCoeffs(1.0, a1, a2, b0, b1, b2, r1, r2)


def constraint_residuals(coeffs: PiecewiseCoeffs, params: PiecewiseParams) -> np.ndarray:
    """Residuals of the six defining constraints, in construction order."""
    r1, r2 = coeffs.r1, coeffs.r2
    inner = coeffs.a0 + coeffs.a1 * r1 + coeffs.a2 * r1**2
    inner_slope = coeffs.a1 + 2.0 * coeffs.a2 * r1
    outer = coeffs.b0 + coeffs.b1 * r1 + coeffs.b2 * r1**2
    outer_slope = coeffs.b1 + 2.0 * coeffs.b2 * r1
    end = coeffs.b0 + coeffs.b1 * r2 + coeffs.b2 * r2**2
    return np.array(
        [
            coeffs.a0 - 1.0,
            inner - params.f1,
            inner_slope - params.d1,
            outer - params.f1,
            outer_slope - params.d1,
            end - params.f2,
        ]
    )


def evaluate(coeffs: PiecewiseCoeffs, r):
    """The piecewise radial factor f(r); outer quadratic extrapolates past r2."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0):
        raise NegativeRadius(f"radius must be >= 0, got min {np.min(arr)!r}")
    inner = (coeffs.a2 * arr + coeffs.a1) * arr + coeffs.a0
    outer = (coeffs.b2 * arr + coeffs.b1) * arr + coeffs.b0
    out = np.where(arr <= coeffs.r1, inner, outer)
    return out if out.ndim else float(out)


def distort_radius(coeffs: PiecewiseCoeffs, r):
    """Forward radial map r -> r * f(r)."""
    arr = np.asarray(r, dtype=float)
    out = arr * evaluate(coeffs, arr)
    return out if out.ndim else float(out)


def _invert_segment(
    c0: float, c1: float, c2: float, r_d: np.ndarray, lo: float, hi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Real roots of c2 r^3 + c1 r^2 + c0 r = r_d inside [lo, hi].

    Returns (values, found mask); picks the smallest in-window root, which
    for a segment monotone on its domain is the unique preimage.  Terms
    whose contribution at ``hi`` is negligible relative to the largest one
    are dropped before root finding (the monic form divides by the leading
    coefficient, so a roundoff-sized c2 would wreck its conditioning); two
    Newton steps on the untruncated segment equation then restore full
    accuracy.
    """
    span = max(abs(hi), 1e-300)
    scale = max(abs(c0), abs(c1) * span, abs(c2) * span * span)
    if scale == 0.0:
        return np.full_like(r_d, np.nan), np.zeros(r_d.shape, dtype=bool)
    if abs(c2) * span * span > 1e-8 * scale:
        cand, _ = monic_cubic_real_roots(c1 / c2, c0 / c2, -r_d / c2)
    elif abs(c1) * span > 1e-8 * scale:
        disc = c0 * c0 + 4.0 * c1 * r_d
        ok = disc >= 0.0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        sign_c0 = 1.0 if c0 >= 0.0 else -1.0
        qterm = -0.5 * (c0 + sign_c0 * sq)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.stack([qterm / c1, np.where(qterm != 0.0, -r_d / qterm, 0.0)], axis=-1)
        cand = np.where(ok[..., None], cand, np.nan)
    else:
        cand = (r_d / c0)[..., None]

    # Polish on the original equation, where the coefficients are well scaled.
    rd_col = r_d[..., None]
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for _ in range(2):
            g = ((c2 * cand + c1) * cand + c0) * cand - rd_col
            gp = (3.0 * c2 * cand + 2.0 * c1) * cand + c0
            step = g / gp
            cand = np.where(np.isfinite(step), cand - step, cand)
    return _smallest_root_in_window(cand, lo, hi)


def undistort_radius(coeffs: PiecewiseCoeffs, r_d):
    """Exact piecewise undistortion via per-segment cubic inversion.

    Distorted radii at or below the knot image r1 * f(r1) invert through
    the inner segment, the rest through the outer one; the accepted root
    must fall in the owning segment's domain, widened by 1e-6 * r2 so
    roundoff at the knot cannot flip a valid query into NoValidRoot.
    """
    arr = np.asarray(r_d, dtype=float)
    if np.any(arr < 0.0):
        raise NegativeRadius(f"distorted radius must be >= 0, got min {np.min(arr)!r}")
    scalar = not arr.ndim
    work = np.atleast_1d(arr).astype(float)

    tol = BOUNDARY_TOL * coeffs.r2
    knot_image = coeffs.r1 * evaluate(coeffs, coeffs.r1)
    inner_mask = work <= knot_image
    out = np.empty_like(work)
    found = np.ones(work.shape, dtype=bool)

    if np.any(inner_mask):
        sel, ok = _invert_segment(
            coeffs.a0, coeffs.a1, coeffs.a2, work[inner_mask], -1e-12, coeffs.r1 + tol
        )
        out[inner_mask] = np.maximum(sel, 0.0)
        found[inner_mask] = ok
    if np.any(~inner_mask):
        sel, ok = _invert_segment(
            coeffs.b0, coeffs.b1, coeffs.b2, work[~inner_mask], coeffs.r1 - tol, coeffs.r2 + tol
        )
        out[~inner_mask] = sel
        found[~inner_mask] = ok
    if not np.all(found):
        bad = work[~found]
        raise NoValidRoot(
            f"no real root in the owning segment's domain for {bad.size} "
            f"radius value(s), first {bad.flat[0]!r}"
        )

    residual = np.abs(distort_radius(coeffs, out) - work)
    if np.any(residual > 1e-9 * np.maximum(1.0, work)):
        raise NumericalBreakdown(
            f"piecewise undistortion round-trip residual {residual.max():.3e}"
        )
    return float(out[0]) if scalar else out.reshape(arr.shape)
