"""Command-line entry point: ``thermoscan <subcommand> ...``.

Exit status: 0 on success, 1 on invalid input or parameters, 2 when a stage
fails on valid input (for example no pixel reaches the threshold).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import Method, PatientRecord, classify_batch, read_records, write_records
from .core import Rect, load_image, save_image, save_mask
from .edge_filter import Axis, FilterParams, Polarity, directional_valley
from .errors import ProcessingError, ThermoscanError
from .features import DEFAULT_CUTOFF, extract_features
from .pipeline import PipelineConfig, run_pipeline
from .registration import (
    RegistrationMode,
    RigidTransform2D,
    SearchParams,
    fit_rigid_from_keypoints,
    load_keypoints,
    register_by_roi,
    warp_image,
    write_transforms,
)
from .roi import RoiParams, Scan, detect_thyroid_roi
from .synthgen import generate_phantom, ground_truth, load_spec

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PROCESSING = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_filter_args(p):
    p.add_argument("--d", type=int, default=4, help="kernel distance in pixels (default 4)")
    p.add_argument("--t", type=int, default=40, help="signed intensity threshold (default 40)")
    p.add_argument("--axis", choices=[a.value for a in Axis], default="cols")
    p.add_argument("--polarity", choices=[v.value for v in Polarity], default="shadow")


def _filter_params(args) -> FilterParams:
    return FilterParams(args.d, args.t, args.axis, args.polarity)


def _add_roi_args(p):
    p.add_argument("--roi-w", type=int, default=330)
    p.add_argument("--roi-h", type=int, default=310)
    p.add_argument("--residual-w", type=int, default=110)
    p.add_argument("--residual-h", type=int, default=110)
    p.add_argument("--passes", type=int, default=1, help="residual-removal passes")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--scan", choices=[s.value for s in Scan], default="bottom_up")


def _roi_params(args) -> RoiParams:
    return RoiParams(args.roi_w, args.roi_h, args.residual_w, args.residual_h, args.passes, args.scan, args.stride)


def _add_search_args(p):
    p.add_argument("--theta-range", type=float, default=10.0, help="degrees either side of 0")
    p.add_argument("--theta-step", type=float, default=0.5, help="degrees")
    p.add_argument("--trans-range", type=float, default=15.0, help="pixels either side of 0")
    p.add_argument("--trans-step", type=float, default=1.0, help="pixels")
    p.add_argument("--refine-levels", type=int, default=3)


def cmd_filter(args) -> int:
    img = load_image(args.input)
    save_mask(directional_valley(img, _filter_params(args)), args.out)
    return EXIT_OK


def _draw_rect(pixels: np.ndarray, rect: Rect) -> np.ndarray:
    out = pixels.copy()
    x0, y0, x1, y1 = rect.x, rect.y, rect.x + rect.w - 1, rect.y + rect.h - 1
    out[y0, x0:x1 + 1] = 255
    out[y1, x0:x1 + 1] = 255
    out[y0:y1 + 1, x0] = 255
    out[y0:y1 + 1, x1] = 255
    return out


def cmd_roi(args) -> int:
    img = load_image(args.input)
    rect = detect_thyroid_roi(img, _filter_params(args), _roi_params(args))
    Path(args.out_rect).write_text(f"{rect}\n")
    if args.overlay:
        save_image(img.with_pixels(_draw_rect(img.pixels, rect)), args.overlay, sidecar=False)
    print(rect)
    return EXIT_OK


def cmd_register(args) -> int:
    ref = load_image(args.ref)
    movs = [load_image(p) for p in args.mov]
    keypoints = args.keypoints or []
    if keypoints and len(keypoints) != len(movs):
        raise ValueError("give one --keypoints file per --mov file")
    mode = RegistrationMode.parse(args.mode)
    sp = SearchParams.from_degrees(
        args.theta_range, args.trans_range, args.theta_step, args.trans_step, args.refine_levels, args.metric
    )
    fp = _filter_params(args)
    if args.roi:
        region = Rect.parse(args.roi)
    elif mode is RegistrationMode.ROI_FIRST:
        region = detect_thyroid_roi(ref, fp, _roi_params(args))
    else:
        region = Rect(0, 0, ref.width, ref.height)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    transforms = [RigidTransform2D.identity()]
    save_image(ref, out_dir / "frame_000.pgm", sidecar=False)
    for k, mov in enumerate(movs, 1):
        if keypoints:
            T = fit_rigid_from_keypoints(load_keypoints(keypoints[k - 1]))
        else:
            T = register_by_roi(ref, mov, region, sp, fp)
        transforms.append(T)
        save_image(warp_image(mov, T, "bilinear"), out_dir / f"frame_{k:03d}.pgm", sidecar=False)
    write_transforms(args.transforms, transforms)
    return EXIT_OK


def cmd_features(args) -> int:
    img = load_image(args.input)
    rect = Rect.parse(args.roi) if args.roi else detect_thyroid_roi(img)
    record = PatientRecord(args.id or Path(args.input).stem, extract_features(img, rect, args.cutoff))
    write_records(args.out, [record])
    return EXIT_OK


def cmd_classify(args) -> int:
    gallery = read_records(args.gallery)
    records = read_records(args.input)
    report = classify_batch(records, gallery, args.method, args.k, args.normalize)
    report.write(args.report)
    for entry in report.entries:
        print(f"{entry['id']}: {entry.get('label')}")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames = generate_phantom(spec)
    for k, frame in enumerate(frames):
        save_image(frame, out_dir / f"frame_{k:03d}.pgm")
    truth = ground_truth(spec, args.cutoff)
    save_mask(truth.nodule_mask, out_dir / "nodule_mask.pgm")
    doc = {
        "band_rects": [[r.x, r.y, r.w, r.h] for r in truth.band_rects],
        "marker_rect": None if truth.marker_rect is None else [
            truth.marker_rect.x, truth.marker_rect.y, truth.marker_rect.w, truth.marker_rect.h
        ],
        "jitter": [list(j) for j in truth.jitter],
        "cutoff": args.cutoff,
    }
    (out_dir / "truth.json").write_text(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    result = run_pipeline(PipelineConfig.load(args.config))
    print(f"{result.report['patient_id']}: {result.label}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermoscan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("filter", help="valley-edge filter an image")
    _add_filter_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("roi", help="locate the neck ROI")
    _add_roi_args(p)
    _add_filter_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-rect", required=True)
    p.add_argument("--overlay")
    p.set_defaults(func=cmd_roi)

    p = sub.add_parser("register", help="register frames to a reference")
    p.add_argument("--mode", choices=["roi-first", "register-first", "roi_first", "register_first"],
                   default="roi-first")
    p.add_argument("--metric", choices=["mad", "chamfer"], default="mad")
    p.add_argument("--ref", required=True)
    p.add_argument("--mov", nargs="+", required=True)
    p.add_argument("--keypoints", nargs="+", help="keypoint files, one per --mov, instead of searching")
    p.add_argument("--roi", help="'x y w h' to score in, instead of detecting it")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--transforms", required=True)
    _add_search_args(p)
    _add_roi_args(p)
    _add_filter_args(p)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("features", help="describe the hot region of an ROI")
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF)
    p.add_argument("--roi", help="'x y w h'; detected when omitted")
    p.add_argument("--id", help="record id (default: input file stem)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("classify", help="classify feature records against a gallery")
    p.add_argument("--method", choices=[m.value for m in Method], default="vote")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--normalize", action="store_true", help="min-max scale features (knn only)")
    p.add_argument("--gallery", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synth", help="render a synthetic phantom sequence")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="run every stage from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProcessingError as exc:
        print(f"thermoscan {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PROCESSING
    except (ThermoscanError, ValueError, OSError) as exc:
        print(f"thermoscan {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
