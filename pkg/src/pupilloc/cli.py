"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O or malformed input,
3 one or more detection failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .cdf import CdfParams
from .edges import EaParams, canny
from .errors import DatasetError, DetectionError, InvalidSpec, NoEvaluatedRecords
from .evaluation import (
    ALGORITHMS,
    OK,
    TABLE_DMAX,
    Params,
    RoiPolicy,
    SynthEyeSpec,
    dense_dmax,
    derive_roi,
    efficiency_table,
    image_rng,
    load_bioid,
    locators,
    read_eye_file,
    run_benchmark,
    save_bioid,
    synth_face,
)
from .image import GrayImage, Region
from .pgm import read_pgm, write_pgm
from .projection import PfParams

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DETECTION = 0, 1, 2, 3

RECORD_FIELDS = ["image_id", "algo", "lx", "ly", "rx", "ry", "d", "status"]
SUMMARY_FIELDS = ["algo", "dmax", "efficiency", "evaluated"]
CURVE_FIELDS = ["algo", "dmax", "efficiency"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _coord(v):
    return "" if v is None else f"{v:.2f}"


def _num(v, digits=4):
    return "" if v is None else f"{v:.{digits}f}"


def _dmax(v):
    return f"{v:g}"


def _float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _roi_spec(text):
    try:
        x, y, w, h = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x0,y0,w,h integers, got {text!r}")
    return x, y, w, h


def _add_algo_args(p):
    g = p.add_argument_group("algorithm parameters")
    g.add_argument("--algo", choices=[*ALGORITHMS, "all"], default="all")
    g.add_argument("--quantile", type=float, default=CdfParams.quantile)
    g.add_argument("--alpha", type=float, default=PfParams.alpha)
    g.add_argument("--pf-k", type=float, default=PfParams.threshold_factor)
    g.add_argument("--sigma", type=float, default=EaParams.sigma)
    g.add_argument("--canny-low", type=float, default=EaParams.low_factor)
    g.add_argument("--canny-high", type=float, default=EaParams.high_factor)
    g.add_argument("--min-sep", type=int, default=EaParams.min_separation_base)
    g.add_argument("--min-sep-frac", type=float, default=EaParams.min_separation_fraction)


def _add_roi_args(p):
    g = p.add_argument_group("eye regions")
    g.add_argument("--roi-scale", type=float, default=RoiPolicy.scale)
    g.add_argument("--jitter", type=float, default=RoiPolicy.jitter)
    g.add_argument("--seed", type=int, default=RoiPolicy.seed)


def _add_output_args(p):
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path, help="output directory (default: print to stdout)")


def build_parser():
    parser = _Parser(prog="pupilloc", description="Eye pupil localization and benchmarking.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("locate", help="locate pupils in one PGM image")
    p.add_argument("image", type=Path)
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--roi", type=_roi_spec, help="explicit region x0,y0,w,h")
    where.add_argument("--eye", type=Path, help="BioID .eye file; both eye regions are derived from it")
    _add_algo_args(p)
    _add_roi_args(p)
    _add_output_args(p)
    p.add_argument("--edge-dump", type=Path, help="write the EA edge map(s) as PGM to this path")

    for name, help_text in (("bench", "efficiency table over a BioID-format dataset"),
                            ("curve", "dense efficiency curve over a BioID-format dataset")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("dataset", type=Path)
        _add_algo_args(p)
        _add_roi_args(p)
        _add_output_args(p)
        if name == "bench":
            p.add_argument("--dmax", type=_float_list, default=list(TABLE_DMAX))
            p.add_argument("--timing", action="store_true", help="add per-eye wall-time columns")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("synth", help="write synthetic PGM + .eye pairs")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=384)
    p.add_argument("--height", type=int, default=286)
    p.add_argument("--interocular", type=int, default=100)
    p.add_argument("--iris-radius", type=float, default=9.0)
    p.add_argument("--pupil-radius", type=float, default=4.0)
    p.add_argument("--background", type=int, default=200)
    p.add_argument("--iris-intensity", type=int, default=60)
    p.add_argument("--pupil-intensity", type=int, default=20)
    p.add_argument("--eyelid", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    return parser


def params_from_args(args) -> Params:
    try:
        return Params(
            cdf=CdfParams(quantile=args.quantile),
            pf=PfParams(alpha=args.alpha, threshold_factor=args.pf_k),
            ea=EaParams(sigma=args.sigma, low_factor=args.canny_low, high_factor=args.canny_high,
                        min_separation_base=args.min_sep, min_separation_fraction=args.min_sep_frac),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _algorithms(args):
    return list(ALGORITHMS) if args.algo == "all" else [args.algo]


def _roi_policy(args):
    if args.roi_scale <= 0 or not 0 <= args.jitter < 0.5:
        raise UsageError("--roi-scale must be > 0 and --jitter in [0, 0.5)")
    return RoiPolicy(args.roi_scale, args.jitter, args.seed)


def _csv_text(fields, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(fields, rows):
    return json.dumps([dict(zip(fields, r)) for r in rows], indent=1) + "\n"


def _render(fmt, fields, rows):
    return (_json_text if fmt == "json" else _csv_text)(fields, rows)


def _emit(args, name, fields, rows, stdout):
    text = _render(args.format, fields, rows)
    if args.out is None:
        stdout.write(text)
    else:
        (args.out / f"{name}.{args.format}").write_text(text, encoding="utf-8")


# -- locate ---------------------------------------------------------------

def cmd_locate(args, stdout) -> int:
    params = params_from_args(args)
    img = read_pgm(args.image)
    if args.roi is not None:
        try:
            rois = [("", Region.clamped(*args.roi, img.width, img.height))]
        except ValueError:
            raise UsageError(f"--roi {args.roi} does not overlap the {img.width}x{img.height} image")
    else:
        ann = read_eye_file(args.eye)
        policy = _roi_policy(args)
        left, right = derive_roi(ann, (img.width, img.height), policy.scale, policy.jitter,
                                 image_rng(policy.seed, args.image.stem))
        rois = [("left", left), ("right", right)]

    table = locators(params)
    rows, estimates, failed = [], {}, False
    for name in _algorithms(args):
        estimates[name] = []
        for eye, roi in rois:
            try:
                est = table[name](img, roi)
                status = OK
            except DetectionError as exc:
                est, status, failed = None, exc.status, True
            estimates[name].append(est)
            x, y = (est.x, est.y) if est is not None else (None, None)
            rows.append([name, eye, _coord(x), _coord(y), status] if eye else
                        [name, _coord(x), _coord(y), status])

    fields = ["algo", "eye", "x", "y", "status"] if rois[0][0] else ["algo", "x", "y", "status"]
    if args.format == "json":
        text = _json_text(fields, rows)
    else:
        text = "".join(",".join(r) + "\n" for r in rows)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"locate.{args.format}").write_text(text, encoding="utf-8")
        from .plotting import plot_locations
        plot_locations(img, [r for _, r in rois], estimates, args.out / "locate.png")
    else:
        stdout.write(text)

    if args.edge_dump is not None:
        edge_img = np.zeros_like(img.pixels)
        for _, roi in rois:
            try:
                edge_img[roi.slices] = np.where(canny(img, roi, params.ea), 255, 0)
            except DetectionError:
                pass
        write_pgm(args.edge_dump, GrayImage(edge_img), comment="EA edge map")
    return EXIT_DETECTION if failed else EXIT_OK


# -- bench / curve --------------------------------------------------------

def _load(args):
    if not args.dataset.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {args.dataset}")
    dataset = load_bioid(args.dataset)
    if not dataset:
        raise DatasetError(args.dataset, "no .pgm images found")
    return dataset


def _benchmark(args, timing=False):
    params = params_from_args(args)
    policy = _roi_policy(args)
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    dataset = _load(args)
    algorithms = _algorithms(args)
    records = run_benchmark(dataset, algorithms, policy, params, workers=args.workers, timing=timing)
    return algorithms, records


def _curves(records, algorithms, dmax):
    curves, missing = {}, []
    for name in algorithms:
        try:
            curves.update(efficiency_table(records, dmax, [name]))
        except NoEvaluatedRecords:
            missing.append(name)
    return curves, missing


def cmd_bench(args, stdout, stderr) -> int:
    if any(b < a for a, b in zip(args.dmax, args.dmax[1:])):
        raise UsageError("--dmax levels must be ascending")
    algorithms, records = _benchmark(args, timing=args.timing)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)

    fields = list(RECORD_FIELDS) + (["left_ms", "right_ms"] if args.timing else [])
    rows = []
    for r in records:
        left = r.predicted_left or (None, None)
        right = r.predicted_right or (None, None)
        row = [r.image_id, r.algorithm, _coord(left[0]), _coord(left[1]),
               _coord(right[0]), _coord(right[1]), _num(r.d), r.status]
        if args.timing:
            row += [_num(r.left_ms, 3), _num(r.right_ms, 3)]
        rows.append(row)
    _emit(args, "records", fields, rows, stdout)

    curves, missing = _curves(records, algorithms, args.dmax)
    summary = []
    for name in algorithms:
        if name in curves:
            c = curves[name]
            summary += [[name, _dmax(x), _num(e), str(c.evaluated_count)] for x, e in c.points]
        else:
            summary += [[name, _dmax(x), "", "0"] for x in args.dmax]
    if args.out is None:
        stdout.write("\n")
    _emit(args, "summary", SUMMARY_FIELDS, summary, stdout)

    if args.timing:
        timing_rows = []
        for name in algorithms:
            ms = [t for r in records if r.algorithm == name for t in (r.left_ms, r.right_ms) if t is not None]
            if ms:
                timing_rows.append([name, _num(float(np.median(ms)), 3),
                                    _num(float(np.percentile(ms, 90)), 3), str(len(ms))])
        timing_text = _render(args.format, ["algo", "median_ms", "p90_ms", "rois"], timing_rows)
        if args.out is not None:
            (args.out / f"timing.{args.format}").write_text(timing_text, encoding="utf-8")
        else:
            stderr.write(timing_text)

    if args.out is not None and curves:
        from .plotting import plot_efficiency_bars
        plot_efficiency_bars(curves, args.out / "summary.png")
    for name in missing:
        stderr.write(f"pupilloc: no image evaluated successfully with {name}\n")
    return EXIT_DETECTION if missing else EXIT_OK


def cmd_curve(args, stdout, stderr) -> int:
    algorithms, records = _benchmark(args)
    dmax = dense_dmax()
    curves, missing = _curves(records, algorithms, dmax)
    rows = []
    for name in algorithms:
        if name in curves:
            rows += [[name, _dmax(x), _num(e)] for x, e in curves[name].points]
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    _emit(args, "curve", CURVE_FIELDS, rows, stdout)
    if args.out is not None and curves:
        from .plotting import plot_efficiency_curves
        plot_efficiency_curves(curves, args.out / "curve.png")
    for name in missing:
        stderr.write(f"pupilloc: no image evaluated successfully with {name}\n")
    return EXIT_DETECTION if missing else EXIT_OK


# -- synth ----------------------------------------------------------------

def cmd_synth(args, stdout) -> int:
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    spec = SynthEyeSpec(
        roi_size=int(2 * args.iris_radius) + 3,
        center=(args.iris_radius + 1, args.iris_radius + 1),
        iris_radius=args.iris_radius, pupil_radius=args.pupil_radius,
        background=args.background, iris_intensity=args.iris_intensity,
        pupil_intensity=args.pupil_intensity, eyelid_coverage=args.eyelid,
        noise_sigma=args.noise, seed=args.seed,
    )
    entries = []
    try:
        spec.validate()
        for i in range(args.count):
            img, ann = synth_face(spec, args.interocular, (args.width, args.height),
                                  np.random.default_rng([args.seed, i]))
            entries.append((img, ann, f"synth_{i:04d}"))
    except InvalidSpec as exc:
        raise UsageError(str(exc)) from None
    save_bioid(args.out, entries)
    stdout.write(f"wrote {len(entries)} image/annotation pairs to {args.out}\n")
    return EXIT_OK


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if args.command == "locate":
            return cmd_locate(args, stdout)
        if args.command == "bench":
            return cmd_bench(args, stdout, stderr)
        if args.command == "curve":
            return cmd_curve(args, stdout, stderr)
        return cmd_synth(args, stdout)
    except UsageError as exc:
        stderr.write(f"pupilloc: error: {exc}\n")
        return EXIT_USAGE
    except (OSError, DatasetError) as exc:
        stderr.write(f"pupilloc: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        # remaining input-format problems, e.g. an eye file inconsistent with its image
        stderr.write(f"pupilloc: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
