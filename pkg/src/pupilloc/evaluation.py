"""Benchmark harness: datasets, ROI derivation, detection error and efficiency curves.

Random draws use numpy's PCG64 generator (``numpy.random.default_rng``),
whose stream is fixed across platforms for a given seed. Per-image streams
are keyed by ``(seed, crc32(image_id))`` so results do not depend on the order
or concurrency with which images are processed.
"""

from __future__ import annotations

import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .cdf import CdfParams, locate_pupil_cdf
from .edges import EaParams, locate_pupil_ea
from .errors import (
    DegenerateTruth,
    DetectionError,
    EmptyRegion,
    InvalidSpec,
    MalformedEyeFile,
    MissingAnnotation,
    NoEvaluatedRecords,
    RoiOutOfBounds,
)
from .image import GrayImage, PupilEstimate, Region
from .pgm import read_pgm, write_pgm
from .projection import PfParams, locate_pupil_pf

ALGORITHMS = ("cdf", "pf", "ea")
TABLE_DMAX = (0.02, 0.05, 0.1, 0.15, 0.2, 0.25)
MIN_ROI_SIDE = 10

OK = "ok"
LEFT_FAILED = "left_failed"
RIGHT_FAILED = "right_failed"
BOTH_FAILED = "both_failed"


@dataclass(frozen=True)
class EyeAnnotation:
    """Ground-truth pupil positions as labeled by the dataset (BioID LX LY RX RY)."""

    left: tuple[int, int]
    right: tuple[int, int]

    def __post_init__(self):
        if tuple(self.left) == tuple(self.right):
            raise DegenerateTruth("left and right pupils coincide")

    @property
    def interocular(self) -> float:
        return math.dist(self.left, self.right)


@dataclass(frozen=True)
class Params:
    """Per-algorithm parameter bundle used by the benchmark."""

    cdf: CdfParams = field(default_factory=CdfParams)
    pf: PfParams = field(default_factory=PfParams)
    ea: EaParams = field(default_factory=EaParams)


@dataclass(frozen=True)
class RoiPolicy:
    scale: float = 0.4
    jitter: float = 0.1
    seed: int = 0


@dataclass(frozen=True)
class EvalRecord:
    image_id: str
    algorithm: str
    predicted_left: PupilEstimate | None
    predicted_right: PupilEstimate | None
    d: float | None
    status: str
    left_ms: float | None = None
    right_ms: float | None = None


@dataclass(frozen=True)
class EfficiencyCurve:
    algorithm: str
    points: list[tuple[float, float]]
    evaluated_count: int
    total_count: int

    def efficiency(self, dmax: float) -> float:
        for x, e in self.points:
            if x == dmax:
                return e
        raise KeyError(dmax)


# -- metric ---------------------------------------------------------------

def detection_error(truth: EyeAnnotation, pred_left, pred_right) -> float:
    """Worse of the two pupil errors divided by the interocular distance.

    Predictions are paired with annotations by the assignment of smaller
    total distance, so a swapped left/right convention does not matter.
    """
    L = np.asarray(truth.left, dtype=np.float64)
    R = np.asarray(truth.right, dtype=np.float64)
    a = np.asarray(pred_left, dtype=np.float64)
    b = np.asarray(pred_right, dtype=np.float64)
    iod = float(np.hypot(*(L - R)))
    if iod == 0:
        raise DegenerateTruth("zero interocular distance")
    straight = (float(np.hypot(*(L - a))), float(np.hypot(*(R - b))))
    crossed = (float(np.hypot(*(L - b))), float(np.hypot(*(R - a))))
    pair = crossed if sum(crossed) < sum(straight) else straight
    return max(pair) / iod


# -- dataset --------------------------------------------------------------

def read_eye_file(path) -> EyeAnnotation:
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except UnicodeDecodeError:
        raise MalformedEyeFile(path, "not ASCII text") from None
    body = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if len(body) != 1:
        raise MalformedEyeFile(path, f"expected one coordinate line, found {len(body)}")
    fields = body[0].split()
    if len(fields) != 4:
        raise MalformedEyeFile(path, f"expected 4 integers, found {len(fields)}")
    try:
        lx, ly, rx, ry = (int(f) for f in fields)
    except ValueError:
        raise MalformedEyeFile(path, "coordinates are not integers") from None
    try:
        return EyeAnnotation((lx, ly), (rx, ry))
    except DegenerateTruth:
        raise MalformedEyeFile(path, "left and right positions coincide") from None


def write_eye_file(path, annotation: EyeAnnotation) -> None:
    (lx, ly), (rx, ry) = annotation.left, annotation.right
    Path(path).write_text(f"#LX\tLY\tRX\tRY\n{lx}\t{ly}\t{rx}\t{ry}\n", encoding="ascii")


def load_bioid(directory) -> list[tuple[GrayImage, EyeAnnotation, str]]:
    """Load every ``<id>.pgm`` with its ``<id>.eye`` annotation, sorted by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    entries = []
    for pgm in sorted(directory.glob("*.pgm")):
        eye = pgm.with_suffix(".eye")
        if not eye.exists():
            raise MissingAnnotation(pgm, f"no annotation file {eye.name}")
        img = read_pgm(pgm)
        ann = read_eye_file(eye)
        for x, y in (ann.left, ann.right):
            if not (0 <= x < img.width and 0 <= y < img.height):
                raise MalformedEyeFile(eye, f"position ({x}, {y}) outside {img.width}x{img.height} image")
        entries.append((img, ann, pgm.stem))
    return entries


def save_bioid(directory, entries: Iterable[tuple[GrayImage, EyeAnnotation, str]]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for img, ann, image_id in entries:
        write_pgm(directory / f"{image_id}.pgm", img)
        write_eye_file(directory / f"{image_id}.eye", ann)


# -- ROI ------------------------------------------------------------------

def image_rng(seed: int, image_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(image_id.encode("utf-8"))])


def derive_roi(annotation: EyeAnnotation, image_bounds: tuple[int, int], scale: float = 0.4,
               jitter: float = 0.1, seed: int | np.random.Generator = 0) -> tuple[Region, Region]:
    """Square eye regions of side ``round(scale * D)`` around the jittered annotations.

    ``image_bounds`` is ``(width, height)``. Each centre is displaced by an
    offset drawn uniformly from ``[-jitter*side, +jitter*side]`` per axis.
    """
    width, height = image_bounds
    iod = annotation.interocular
    if iod == 0:
        raise DegenerateTruth("zero interocular distance")
    side = int(round(scale * iod))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    offsets = rng.uniform(-jitter * side, jitter * side, size=4) if jitter > 0 else np.zeros(4)
    rois = []
    for (x, y), (dx, dy) in zip((annotation.left, annotation.right), offsets.reshape(2, 2)):
        cx = int(round(x + dx))
        cy = int(round(y + dy))
        try:
            roi = Region.centered(cx, cy, side, width, height)
        except EmptyRegion:
            raise RoiOutOfBounds(f"eye ROI around ({x}, {y}) falls outside the image") from None
        if roi.width < MIN_ROI_SIDE or roi.height < MIN_ROI_SIDE:
            raise RoiOutOfBounds(f"eye ROI around ({x}, {y}) is {roi.width}x{roi.height} after clamping")
        rois.append(roi)
    return rois[0], rois[1]


# -- synthetic oracle -----------------------------------------------------

@dataclass(frozen=True)
class SynthEyeSpec:
    roi_size: int = 31
    center: tuple[float, float] = (15.0, 15.0)
    iris_radius: float = 6.0
    pupil_radius: float = 3.0
    background: int = 200
    iris_intensity: int = 60
    pupil_intensity: int = 20
    eyelid_coverage: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def validate(self):
        if not 0 < self.pupil_radius < self.iris_radius < self.roi_size / 2:
            raise InvalidSpec("need 0 < pupil_radius < iris_radius < roi_size / 2")
        if not 0 <= self.pupil_intensity < self.iris_intensity < self.background <= 255:
            raise InvalidSpec("need pupil_intensity < iris_intensity < background <= 255")
        if not 0 <= self.eyelid_coverage <= 0.4:
            raise InvalidSpec("eyelid_coverage must lie in [0, 0.4]")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")


_SUPERSAMPLE = 4


def render_eye(canvas: np.ndarray, center, spec: SynthEyeSpec) -> np.ndarray:
    """Paint an anti-aliased iris, pupil and eyelid onto a float canvas in place."""
    h, w = canvas.shape
    cx, cy = center
    r = spec.iris_radius
    # only touch the bounding box of the iris
    x0, x1 = max(int(math.floor(cx - r)) - 1, 0), min(int(math.ceil(cx + r)) + 2, w)
    y0, y1 = max(int(math.floor(cy - r)) - 1, 0), min(int(math.ceil(cy + r)) + 2, h)
    if x0 >= x1 or y0 >= y1:
        return canvas
    s = _SUPERSAMPLE
    sub = (np.arange(s) + 0.5) / s - 0.5
    xs = (np.arange(x0, x1)[:, None] + sub).ravel()
    ys = (np.arange(y0, y1)[:, None] + sub).ravel()
    dx2 = (xs - cx) ** 2
    dy2 = (ys - cy) ** 2
    dist2 = dy2[:, None] + dx2[None, :]
    lid = cy - r + 2 * r * spec.eyelid_coverage
    visible = (ys >= lid)[:, None]
    iris = (dist2 <= r * r) & visible
    pupil = (dist2 <= spec.pupil_radius ** 2) & visible

    def coverage(mask):
        return mask.reshape(y1 - y0, s, x1 - x0, s).mean(axis=(1, 3))

    ci = coverage(iris)
    cp = coverage(pupil)
    patch = canvas[y0:y1, x0:x1]
    canvas[y0:y1, x0:x1] = patch * (1 - ci) + spec.iris_intensity * (ci - cp) + spec.pupil_intensity * cp
    return canvas


def _finish(canvas: np.ndarray, noise_sigma: float, rng: np.random.Generator) -> GrayImage:
    if noise_sigma > 0:
        canvas = canvas + rng.normal(0.0, noise_sigma, canvas.shape)
    return GrayImage(np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8))


def synth_eye(spec: SynthEyeSpec) -> tuple[GrayImage, tuple[float, float]]:
    """Render a square eye patch; returns the image and the exact centre used."""
    spec.validate()
    canvas = np.full((spec.roi_size, spec.roi_size), float(spec.background))
    render_eye(canvas, spec.center, spec)
    return _finish(canvas, spec.noise_sigma, np.random.default_rng(spec.seed)), tuple(spec.center)


def synth_face(spec: SynthEyeSpec, interocular: int = 100, size: tuple[int, int] = (384, 286),
               rng: np.random.Generator | None = None) -> tuple[GrayImage, EyeAnnotation]:
    """A BioID-sized frame with two synthetic eyes at integer positions.

    ``spec.roi_size`` and ``spec.center`` are ignored. Following BioID, the
    annotation's ``left`` is the subject's left eye, which appears on the
    right of the image.
    """
    spec.validate()
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    width, height = size
    margin = int(math.ceil(spec.iris_radius)) + 2
    span = width - interocular - 2 * margin
    if span < 1 or height - 2 * margin < 1:
        raise InvalidSpec(f"interocular distance {interocular} does not fit in {width}x{height}")
    rx = int(rng.integers(margin, margin + span))
    y = int(rng.integers(margin, height - margin))
    lx = rx + interocular
    canvas = np.full((height, width), float(spec.background))
    render_eye(canvas, (rx, y), spec)
    render_eye(canvas, (lx, y), spec)
    return _finish(canvas, spec.noise_sigma, rng), EyeAnnotation((lx, y), (rx, y))


# -- benchmark ------------------------------------------------------------

Locator = Callable[[GrayImage, Region], PupilEstimate]


def locators(params: Params = Params()) -> dict[str, Locator]:
    return {
        "cdf": lambda img, roi: locate_pupil_cdf(img, roi, params.cdf),
        "pf": lambda img, roi: locate_pupil_pf(img, roi, params.pf),
        "ea": lambda img, roi: locate_pupil_ea(img, roi, params.ea),
    }


def _attempt(locate: Locator, img: GrayImage, roi: Region | None):
    if roi is None:
        return None, None
    start = time.perf_counter()
    try:
        estimate = locate(img, roi)
    except DetectionError:
        estimate = None
    return estimate, (time.perf_counter() - start) * 1000.0


def _evaluate_image(entry, algorithms, policy: RoiPolicy, table, timing: bool) -> list[EvalRecord]:
    img, ann, image_id = entry
    try:
        left_roi, right_roi = derive_roi(ann, (img.width, img.height), policy.scale, policy.jitter,
                                         image_rng(policy.seed, image_id))
    except (RoiOutOfBounds, DegenerateTruth):
        left_roi = right_roi = None
    records = []
    for name in algorithms:
        left, left_ms = _attempt(table[name], img, left_roi)
        right, right_ms = _attempt(table[name], img, right_roi)
        if left is not None and right is not None:
            status, d = OK, detection_error(ann, left, right)
        else:
            status = BOTH_FAILED if left is None and right is None else (
                LEFT_FAILED if left is None else RIGHT_FAILED)
            d = None
        if not timing:
            left_ms = right_ms = None
        records.append(EvalRecord(image_id, name, left, right, d, status, left_ms, right_ms))
    return records


def run_benchmark(dataset: Sequence[tuple[GrayImage, EyeAnnotation, str]],
                  algorithms: Sequence[str] = ALGORITHMS, roi_policy: RoiPolicy = RoiPolicy(),
                  params: Params = Params(), workers: int = 1, timing: bool = False) -> list[EvalRecord]:
    """Evaluate each algorithm on both eyes of every image, in input order.

    Per-image algorithm failures are recorded in ``status``; nothing raises.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    unknown = set(algorithms) - set(ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown algorithms: {sorted(unknown)}")
    table = locators(params)

    def work(entry):
        return _evaluate_image(entry, algorithms, roi_policy, table, timing)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_image = list(pool.map(work, dataset))
    else:
        per_image = [work(entry) for entry in dataset]
    return [rec for recs in per_image for rec in recs]


def efficiency_table(records: Iterable[EvalRecord], dmax_list: Sequence[float] = TABLE_DMAX,
                     algorithms: Sequence[str] | None = None) -> dict[str, EfficiencyCurve]:
    """Fraction of ok records with ``d < dmax`` (strict), per algorithm."""
    dmax_list = list(dmax_list)
    if not dmax_list:
        raise ValueError("dmax_list is empty")
    if any(b < a for a, b in zip(dmax_list, dmax_list[1:])):
        raise ValueError("dmax_list must be ascending")
    records = list(records)
    if algorithms is None:
        algorithms = list(dict.fromkeys(r.algorithm for r in records))
    curves = {}
    for name in algorithms:
        mine = [r for r in records if r.algorithm == name]
        ds = np.sort([r.d for r in mine if r.status == OK])
        if ds.size == 0:
            raise NoEvaluatedRecords(f"no successfully evaluated records for {name}")
        below = np.searchsorted(ds, dmax_list, side="left")
        points = [(float(x), float(n) / ds.size) for x, n in zip(dmax_list, below)]
        curves[name] = EfficiencyCurve(name, points, int(ds.size), len(mine))
    return curves


def dense_dmax(stop: float = 0.3, step: float = 0.005) -> list[float]:
    n = int(round(stop / step))
    return [round(i * step, 10) for i in range(n + 1)]
