import dataclasses
import math

import numpy as np
import pytest

from pupilloc import (
    EvalRecord,
    EyeAnnotation,
    GrayImage,
    PupilEstimate,
    RoiPolicy,
    SynthEyeSpec,
    derive_roi,
    detection_error,
    efficiency_table,
    load_bioid,
    run_benchmark,
    synth_eye,
)
from pupilloc.errors import (
    DegenerateTruth,
    InvalidSpec,
    MalformedEyeFile,
    MalformedPgm,
    MissingAnnotation,
    NoEvaluatedRecords,
    RoiOutOfBounds,
)
from pupilloc.evaluation import TABLE_DMAX, dense_dmax, image_rng, save_bioid, synth_face
from pupilloc.pgm import write_pgm

FACE = SynthEyeSpec(iris_radius=9.0, pupil_radius=4.0)


def face_set(n, seed=0, spec=FACE):
    rng = np.random.default_rng(seed)
    return [(*synth_face(spec, rng=rng), f"img{i:02d}") for i in range(n)]


# -- detection_error ------------------------------------------------------

def test_error_perfect_prediction():
    truth = EyeAnnotation((30, 40), (130, 42))
    assert detection_error(truth, (30, 40), (130, 42)) == 0.0


def test_error_worked_example():
    truth = EyeAnnotation((0, 0), (100, 0))
    assert detection_error(truth, (0, 10), (100, 0)) == pytest.approx(0.1, abs=1e-15)


def test_error_degenerate_truth():
    with pytest.raises(DegenerateTruth):
        EyeAnnotation((5, 5), (5, 5))


def test_error_pairs_swapped_labels():
    truth = EyeAnnotation((200, 100), (100, 100))
    assert detection_error(truth, (101, 100), (203, 100)) == pytest.approx(0.03)


def _transform(points, scale, angle, shift):
    c, s = math.cos(angle), math.sin(angle)
    return [(scale * (c * x - s * y) + shift[0], scale * (s * x + c * y) + shift[1]) for x, y in points]


def test_error_similarity_invariance(rng):
    for _ in range(200):
        pts = rng.uniform(-200, 200, size=(4, 2))
        truth = EyeAnnotation(tuple(pts[0]), tuple(pts[1]))
        d = detection_error(truth, pts[2], pts[3])
        moved = _transform(pts, float(rng.uniform(0.1, 10)), float(rng.uniform(0, 2 * math.pi)),
                           rng.uniform(-500, 500, size=2))
        d2 = detection_error(EyeAnnotation(moved[0], moved[1]), moved[2], moved[3])
        assert d2 == pytest.approx(d, rel=1e-9)


def test_error_swap_symmetry(rng):
    for _ in range(200):
        pts = rng.uniform(0, 300, size=(4, 2))
        a = detection_error(EyeAnnotation(tuple(pts[0]), tuple(pts[1])), pts[2], pts[3])
        b = detection_error(EyeAnnotation(tuple(pts[1]), tuple(pts[0])), pts[3], pts[2])
        assert a == b
        assert a >= 0


# -- dataset --------------------------------------------------------------

def test_load_bioid_single_pair(tmp_path):
    img = GrayImage.filled(384, 286, 128)
    write_pgm(tmp_path / "BioID_0000.pgm", img)
    (tmp_path / "BioID_0000.eye").write_text("#LX\tLY\tRX\tRY\n232\t110\t161\t110\n")
    [(loaded, ann, image_id)] = load_bioid(tmp_path)
    assert (loaded.width, loaded.height) == (384, 286)
    assert ann == EyeAnnotation((232, 110), (161, 110))
    assert image_id == "BioID_0000"


def test_load_bioid_empty_dir(tmp_path):
    assert load_bioid(tmp_path) == []


def test_load_bioid_missing_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_bioid(tmp_path / "nope")


def test_eye_file_with_three_numbers(tmp_path):
    write_pgm(tmp_path / "a.pgm", GrayImage.filled(20, 20, 1))
    (tmp_path / "a.eye").write_text("#LX\tLY\tRX\tRY\n1 2 3\n")
    with pytest.raises(MalformedEyeFile, match="a.eye"):
        load_bioid(tmp_path)


def test_missing_annotation_named(tmp_path):
    write_pgm(tmp_path / "b.pgm", GrayImage.filled(20, 20, 1))
    with pytest.raises(MissingAnnotation, match="b.pgm"):
        load_bioid(tmp_path)


def test_malformed_pgm_named(tmp_path):
    (tmp_path / "c.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
    (tmp_path / "c.eye").write_text("#\n0 0 1 1\n")
    with pytest.raises(MalformedPgm, match="c.pgm"):
        load_bioid(tmp_path)


def test_annotation_outside_image(tmp_path):
    write_pgm(tmp_path / "d.pgm", GrayImage.filled(20, 20, 1))
    (tmp_path / "d.eye").write_text("#\n25 3 4 4\n")
    with pytest.raises(MalformedEyeFile):
        load_bioid(tmp_path)


def test_bioid_round_trip(tmp_path):
    entries = face_set(4, seed=3, spec=dataclasses.replace(FACE, noise_sigma=5.0))
    save_bioid(tmp_path, entries)
    loaded = load_bioid(tmp_path)
    assert [e[2] for e in loaded] == [e[2] for e in entries]
    for (img, ann, _), (img2, ann2, _) in zip(entries, loaded):
        assert img == img2 and ann == ann2


# -- derive_roi -----------------------------------------------------------

def test_roi_no_jitter_centred():
    ann = EyeAnnotation((250, 120), (150, 120))
    left, right = derive_roi(ann, (384, 286), 0.4, 0.0, 0)
    for roi, (x, y) in ((left, ann.left), (right, ann.right)):
        assert (roi.width, roi.height) == (40, 40)
        assert (roi.x0 + 20, roi.y0 + 20) == (x, y)


def test_roi_deterministic():
    ann = EyeAnnotation((250, 120), (150, 120))
    assert derive_roi(ann, (384, 286), seed=7) == derive_roi(ann, (384, 286), seed=7)
    assert derive_roi(ann, (384, 286), seed=image_rng(7, "x")) == derive_roi(ann, (384, 286), seed=image_rng(7, "x"))


def test_roi_jitter_bound():
    ann = EyeAnnotation((250, 120), (150, 120))
    rng = np.random.default_rng(5)
    seen = set()
    for _ in range(1000):
        for roi, (x, y) in zip(derive_roi(ann, (384, 286), 0.4, 0.1, rng), (ann.left, ann.right)):
            dx, dy = roi.x0 + 20 - x, roi.y0 + 20 - y
            assert abs(dx) <= 4 and abs(dy) <= 4
            seen.add((dx, dy))
    assert len(seen) > 40


def test_roi_clamped_at_border():
    ann = EyeAnnotation((5, 100), (105, 100))
    left, right = derive_roi(ann, (384, 286), 0.4, 0.0)
    assert left.x0 == 0 and left.width == 25
    assert right.width == 40


def test_roi_out_of_bounds():
    ann = EyeAnnotation((0, 0), (3, 4))
    with pytest.raises(RoiOutOfBounds):
        derive_roi(ann, (384, 286))


# -- synth_eye ------------------------------------------------------------

def test_synth_centre_and_corner():
    img, (cx, cy) = synth_eye(SynthEyeSpec())
    assert img.pixels[15, 15] == 20
    assert img.pixels[0, 0] == 200 and img.pixels[30, 30] == 200
    assert (cx, cy) == (15.0, 15.0)


def test_synth_deterministic():
    spec = SynthEyeSpec(noise_sigma=7.0, eyelid_coverage=0.2, seed=11)
    assert synth_eye(spec)[0] == synth_eye(spec)[0]
    assert synth_eye(spec)[0] != synth_eye(dataclasses.replace(spec, seed=12))[0]


def test_synth_darker_with_bigger_iris():
    means = [synth_eye(SynthEyeSpec(iris_radius=r))[0].pixels.mean() for r in (5.0, 7.0, 9.0, 11.0)]
    assert all(b < a for a, b in zip(means, means[1:]))


def test_synth_eyelid_hides_top_of_iris():
    img, _ = synth_eye(SynthEyeSpec(eyelid_coverage=0.4))
    assert img.pixels[10, 15] == 200
    assert img.pixels[15, 15] == 20


@pytest.mark.parametrize("bad", [
    dict(pupil_radius=7.0),
    dict(iris_radius=16.0),
    dict(pupil_intensity=80),
    dict(eyelid_coverage=0.5),
    dict(noise_sigma=-1.0),
])
def test_synth_invalid(bad):
    with pytest.raises(InvalidSpec):
        synth_eye(SynthEyeSpec(**bad))


def test_synth_face_layout():
    img, ann = synth_face(FACE, interocular=100, rng=np.random.default_rng(0))
    assert (img.width, img.height) == (384, 286)
    assert ann.left[0] - ann.right[0] == 100 and ann.left[1] == ann.right[1]
    for x, y in (ann.left, ann.right):
        assert img.pixels[y, x] == 20


# -- run_benchmark --------------------------------------------------------

def test_benchmark_order_and_status():
    data = face_set(3)
    records = run_benchmark(data)
    assert [(r.image_id, r.algorithm) for r in records] == [
        (f"img{i:02d}", a) for i in range(3) for a in ("cdf", "pf", "ea")]
    for r in records:
        assert r.status == "ok" and r.d is not None and r.d < 0.05


def test_benchmark_constant_image():
    data = [(GrayImage.filled(384, 286, 140), EyeAnnotation((250, 120), (150, 120)), "flat")]
    records = run_benchmark(data)
    assert [r.status for r in records] == ["both_failed"] * 3
    assert all(r.d is None and r.predicted_left is None for r in records)


def test_benchmark_roi_out_of_bounds_is_recorded():
    data = [(GrayImage.filled(384, 286, 140), EyeAnnotation((0, 0), (3, 4)), "edge")]
    assert {r.status for r in run_benchmark(data)} == {"both_failed"}


def test_benchmark_deterministic_and_parallel():
    data = face_set(6, seed=2, spec=dataclasses.replace(FACE, noise_sigma=4.0))
    a = run_benchmark(data, roi_policy=RoiPolicy(seed=9))
    assert a == run_benchmark(data, roi_policy=RoiPolicy(seed=9))
    assert a == run_benchmark(data, roi_policy=RoiPolicy(seed=9), workers=4)
    assert a != run_benchmark(data, roi_policy=RoiPolicy(seed=10))


def test_benchmark_subset_and_timing():
    records = run_benchmark(face_set(2), algorithms=["pf"], timing=True)
    assert [r.algorithm for r in records] == ["pf", "pf"]
    assert all(r.left_ms >= 0 and r.right_ms >= 0 for r in records)


def test_benchmark_rejects_bad_input():
    with pytest.raises(ValueError):
        run_benchmark([])
    with pytest.raises(ValueError):
        run_benchmark(face_set(1), algorithms=["hough"])


# -- efficiency_table -----------------------------------------------------

def rec(d, algorithm="cdf", status=None):
    status = status or ("ok" if d is not None else "both_failed")
    est = PupilEstimate(0.0, 0.0) if d is not None else None
    return EvalRecord("x", algorithm, est, est, d, status)


def test_efficiency_worked_example():
    curves = efficiency_table([rec(0.01), rec(0.04), rec(0.2)], [0.05])
    assert curves["cdf"].efficiency(0.05) == pytest.approx(2 / 3)
    assert curves["cdf"].evaluated_count == 3


def test_efficiency_strict_and_bounds():
    curve = efficiency_table([rec(0.05), rec(0.1)], [0.01, 0.05, 0.1, 0.5])["cdf"]
    assert [e for _, e in curve.points] == [0.0, 0.0, 0.5, 1.0]


def test_efficiency_ignores_failures():
    curve = efficiency_table([rec(0.01), rec(None), rec(None, status="left_failed")], TABLE_DMAX)["cdf"]
    assert curve.evaluated_count == 1 and curve.total_count == 3
    assert curve.efficiency(0.02) == 1.0


def test_efficiency_no_records():
    with pytest.raises(NoEvaluatedRecords):
        efficiency_table([rec(None)])


def test_efficiency_rejects_unsorted():
    with pytest.raises(ValueError):
        efficiency_table([rec(0.1)], [0.2, 0.1])


def test_efficiency_matches_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(1, 30))
        records = []
        for _ in range(n):
            algo = ("cdf", "pf", "ea")[int(rng.integers(3))]
            d = None if rng.random() < 0.2 else float(rng.choice([rng.uniform(0, 0.3), 0.05, 0.1]))
            records.append(rec(d, algo))
        dmax = sorted(float(v) for v in rng.choice([0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3], size=4))
        present = {r.algorithm for r in records if r.d is not None}
        curves = efficiency_table([r for r in records if r.algorithm in present], dmax)
        for algo, curve in curves.items():
            ds = [r.d for r in records if r.algorithm == algo and r.status == "ok"]
            expected = [(x, sum(d < x for d in ds) / len(ds)) for x in dmax]
            assert curve.points == expected
            effs = [e for _, e in curve.points]
            assert all(0 <= e <= 1 for e in effs) and effs == sorted(effs)


def test_dense_dmax_grid():
    grid = dense_dmax()
    assert len(grid) == 61 and grid[0] == 0.0 and grid[-1] == 0.3 and grid[1] == 0.005
