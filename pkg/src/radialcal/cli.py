"""Command-line surface: calibrate | compare | curve | undistort-points | synth.

Exit statuses: 0 success, 1 numerical failure, 2 input/usage error.
Reports print the objective value, the distortion coefficients, and the
intrinsics in the fixed column order (J, coefficients, alpha, gamma, u0,
beta, v0) so runs are directly comparable side by side.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import fileio
from .calib_init import linear_init, linear_init_base
from .dataset import CalibrationDataset
from .distortion import PolyEven2, PolyQuad, undistort_pixel, undistort_pixel_approx
from .errors import InputError, InsufficientViews, NoValidRoot, NumericalError, UnsupportedModel
from .geometry import PixelPoint
from .optimize import CalibrationResult, ModelFamily, RefineOptions, refine
from .synth import default_scene, generate, piecewise_scene

_FAMILIES = [f.value for f in ModelFamily]


def _add_refine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol-x", type=float, default=1e-5, help="step-size tolerance")
    parser.add_argument("--tol-fun", type=float, default=1e-5, help="relative objective-decrease tolerance")
    parser.add_argument("--max-iter", type=int, default=120, help="iteration cap")
    parser.add_argument("--max-fun-evals", type=int, default=8000, help="residual-evaluation cap")


def _options(args: argparse.Namespace) -> RefineOptions:
    return RefineOptions(
        tol_x=args.tol_x,
        tol_fun=args.tol_fun,
        max_iter=args.max_iter,
        max_fun_evals=args.max_fun_evals,
    )


def _require_views(dataset: CalibrationDataset) -> None:
    if dataset.n_images < 3:
        raise InsufficientViews(f"calibration needs >= 3 images, got {dataset.n_images}")


def _row_text(result: CalibrationResult) -> str:
    intr = result.intrinsics
    coeffs = "  ".join(f"{c: .6f}" for c in result.distortion_coefficients)
    return (
        f"{result.model_family.value:<11} J={result.objective.J:.4f}  "
        f"coeffs: {coeffs}  "
        f"intrinsics: {intr.alpha:.4f} {intr.gamma:.4f} {intr.u0:.4f} "
        f"{intr.beta:.4f} {intr.v0:.4f}"
    )


def _cmd_calibrate(args: argparse.Namespace) -> int:
    dataset = fileio.load_dataset(args.data)
    _require_views(dataset)
    family = ModelFamily(args.model)
    init = linear_init(dataset, family)
    result = refine(init, dataset, family, _options(args))
    fileio.save_result(args.out, result)
    print(_row_text(result))
    print(f"result written to {args.out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    dataset = fileio.load_dataset(args.data)
    _require_views(dataset)
    base = linear_init_base(dataset)
    rows = []
    failures = 0
    for family in ModelFamily:
        try:
            init = linear_init(dataset, family, base=base)
            result = refine(init, dataset, family, _options(args))
        except (NumericalError, InputError) as exc:
            failures += 1
            rows.append({"model_family": family.value, "error": str(exc)})
            print(f"{family.value:<11} FAILED: {exc}")
            continue
        entry = fileio.result_to_dict(result)
        entry["error"] = None
        rows.append(entry)
        print(_row_text(result))
    if args.out:
        fileio._dump_json(args.out, {"rows": rows})
        print(f"comparison written to {args.out}")
    return 0 if failures == 0 else 1


def _cmd_curve(args: argparse.Namespace) -> int:
    result = fileio.load_result(args.result)
    if args.out:
        fileio.save_curve(args.out, result, args.samples)
        print(f"curve written to {args.out}")
    else:
        print("r,f")
        for r, f in fileio.curve_rows(result, args.samples):
            print(f"{r!r},{f!r}")
    return 0


def _cmd_undistort_points(args: argparse.Namespace) -> int:
    result = fileio.load_result(args.result)
    points = fileio.load_points(args.points)
    model = None
    approx = False
    if result.model_family is ModelFamily.POLY_EVEN2:
        if not args.approx:
            raise UnsupportedModel(
                "the even-order model has no exact analytical inverse; "
                "pass --approx to use the first-order approximation"
            )
        model = PolyEven2(*result.distortion_coefficients)
        approx = True
    else:
        from .optimize import build_model

        model = build_model(result.model_family, result.distortion_coefficients, r2=result.r2)

    intr = result.intrinsics
    out = np.empty_like(points)
    bad: list[tuple[int, str]] = []
    for i, (u, v) in enumerate(points):
        try:
            if approx:
                p = undistort_pixel_approx(model, intr, PixelPoint(u, v))
            else:
                p = undistort_pixel(model, intr, PixelPoint(u, v))
        except NoValidRoot as exc:
            bad.append((i, str(exc)))
            continue
        out[i] = p
    if bad:
        for i, msg in bad:
            print(f"point {i}: {msg}", file=sys.stderr)
        raise NoValidRoot(f"{len(bad)} point(s) could not be undistorted")
    fileio.save_points(args.out, out)
    print(f"{points.shape[0]} corrected point(s) written to {args.out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    family = ModelFamily(args.model)
    if family is ModelFamily.PIECEWISE:
        scene = piecewise_scene(
            args.f1, args.d1, args.f2,
            seed=args.seed, noise_sigma=args.noise_sigma,
            n_views=args.views, grid_n=args.grid_n,
        )
    else:
        model = (PolyEven2 if family is ModelFamily.POLY_EVEN2 else PolyQuad)(args.k1, args.k2)
        scene = default_scene(
            seed=args.seed, noise_sigma=args.noise_sigma, model=model,
            n_views=args.views, grid_n=args.grid_n,
        )
    dataset = generate(scene)
    fileio.save_dataset(args.out, dataset)
    print(
        f"synthetic dataset written to {args.out} "
        f"({dataset.n_images} images, {dataset.n_points} points, "
        f"sigma={scene.noise_sigma})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialcal",
        description="Planar camera calibration with analytically invertible radial distortion models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit one model family to a dataset")
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--model", required=True, choices=_FAMILIES)
    p.add_argument("--out", required=True, help="result file to write")
    _add_refine_flags(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("compare", help="fit all three families from one shared linear init")
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="machine-readable comparison file to write")
    _add_refine_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("curve", help="emit (r, f(r)) samples of a fitted model")
    p.add_argument("--result", required=True, help="result file")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--out", help="CSV file to write (default: stdout)")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("undistort-points", help="apply the exact inverse to a point list")
    p.add_argument("--result", required=True)
    p.add_argument("--points", required=True, help="point-list file")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--approx",
        action="store_true",
        help="allow the approximate inverse for the even-order model",
    )
    p.set_defaults(func=_cmd_undistort_points)

    p = sub.add_parser("synth", help="generate a synthetic fixture dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="poly-quad", choices=_FAMILIES)
    p.add_argument("--k1", type=float, default=-0.1)
    p.add_argument("--k2", type=float, default=-0.15)
    p.add_argument("--f1", type=float, default=0.9410)
    p.add_argument("--d1", type=float, default=-0.2563)
    p.add_argument("--f2", type=float, default=0.8270)
    p.add_argument("--noise-sigma", type=float, default=0.5)
    p.add_argument("--views", type=int, default=5)
    p.add_argument("--grid-n", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
