"""Pupil localization from Canny edges and line voting.

Edges are found with thresholds proportional to the mean luminosity of the
blurred ROI. Columns (rows) are then ranked by how many edge pixels they
contain; the two best lines that are far enough apart are taken as the iris
boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NoSecondLine, NoVotes, RegionTooSmall
from .image import GrayImage, PupilEstimate, Region, blur_array


@dataclass(frozen=True)
class EaParams:
    sigma: float = 1.0
    low_factor: float = 1.5
    high_factor: float = 2.0
    min_separation_base: int = 7
    min_separation_fraction: float = 0.23

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.low_factor < self.high_factor:
            raise ValueError("need 0 < low_factor < high_factor")
        if self.min_separation_base < 1:
            raise ValueError("min_separation_base must be >= 1")
        if not 0 < self.min_separation_fraction < 1:
            raise ValueError("min_separation_fraction must lie in (0, 1)")

    def min_separation(self, length: int) -> int:
        return max(self.min_separation_base, round(self.min_separation_fraction * length))


_EIGHT = np.ones((3, 3), dtype=bool)

# gradient direction bins (multiples of 45 degrees, image y pointing down)
# mapped to the neighbour offset (dy, dx) that lies along the gradient
_STEPS = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]


def sobel(patch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel derivatives with edge replication."""
    p = np.pad(patch.astype(np.float64), 1, mode="edge")
    # smoothing across, central difference along
    sx = p[:-2, :] + 2 * p[1:-1, :] + p[2:, :]
    gx = sx[:, 2:] - sx[:, :-2]
    sy = p[:, :-2] + 2 * p[:, 1:-1] + p[:, 2:]
    gy = sy[2:, :] - sy[:-2, :]
    return gx, gy


def non_maximum_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels that are ridge maxima along the quantized gradient direction.

    A pixel must be strictly larger than its neighbour ahead (along the
    gradient) and no smaller than the one behind, so a two-pixel plateau
    keeps exactly one pixel. The 1-pixel frame is always suppressed.
    """
    h, w = mag.shape
    out = np.zeros_like(mag)
    if h < 3 or w < 3:
        return out
    angle = np.arctan2(gy, gx)
    bins = np.rint(angle / (np.pi / 4)).astype(np.int64) % 8
    padded = np.pad(mag, 1)
    centre = mag[1:-1, 1:-1]
    b = bins[1:-1, 1:-1]
    keep = np.zeros_like(centre, dtype=bool)
    for k, (dy, dx) in enumerate(_STEPS):
        sel = b == k
        if not sel.any():
            continue
        ahead = padded[2 + dy:h + dy, 2 + dx:w + dx]
        behind = padded[2 - dy:h - dy, 2 - dx:w - dx]
        keep |= sel & (centre > ahead) & (centre >= behind)
    out[1:-1, 1:-1] = np.where(keep, centre, 0.0)
    return out


def hysteresis(mag: np.ndarray, low: float, high: float) -> np.ndarray:
    """Weak pixels survive iff 8-connected, transitively, to a strong pixel."""
    weak = (mag >= low) & (mag > 0)
    strong = weak & (mag >= high)
    if not strong.any():
        return np.zeros_like(weak)
    labels, n = ndimage.label(weak, structure=_EIGHT)
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[labels[strong]] = True
    seeded[0] = False
    return seeded[labels]


def canny(img: GrayImage, roi: Region, params: EaParams = EaParams()) -> np.ndarray:
    """Binary edge map of ``roi`` (bool array with the ROI's shape)."""
    roi = roi.inside(img)
    if roi.width < 5 or roi.height < 5:
        raise RegionTooSmall(f"canny needs at least 5x5, got {roi.width}x{roi.height}")
    blurred = blur_array(img.crop(roi), params.sigma)
    gx, gy = sobel(blurred)
    mag = non_maximum_suppression(np.hypot(gx, gy), gx, gy)
    m = blurred.mean(dtype=np.float64)
    return hysteresis(mag, params.low_factor * m, params.high_factor * m)


def line_votes(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edge-pixel counts per column and per row."""
    edges = np.asarray(edges, dtype=bool)
    return edges.sum(axis=0), edges.sum(axis=1)


def _best_line(counts: np.ndarray) -> int:
    """Argmax; ties go to the line nearest the array centre, then the smaller index.

    Plain smallest-index tie-breaking favours the left (top) side, so
    mirrored inputs with vote plateaus would resolve to different flanks.
    """
    idx = np.flatnonzero(counts == counts.max())
    off = np.abs(2 * idx - (len(counts) - 1))
    return int(idx[np.lexsort((idx, off))[0]])


def select_boundary_lines(counts, min_separation: int) -> tuple[int, int]:
    """Best-voted line plus the best line at least ``min_separation`` away, ascending."""
    counts = np.asarray(counts)
    if len(counts) <= min_separation:
        raise RegionTooSmall(f"{len(counts)} lines cannot be {min_separation} apart")
    if not counts.any():
        raise NoVotes("no edge pixels")
    first = _best_line(counts)
    idx = np.arange(len(counts))
    far = np.where(np.abs(idx - first) >= min_separation, counts, -1)
    second = _best_line(far)
    if far[second] <= 0:
        raise NoSecondLine(f"no voted line at least {min_separation} away from {first}")
    return min(first, second), max(first, second)


def locate_pupil_ea(img: GrayImage, roi: Region, params: EaParams = EaParams()) -> PupilEstimate:
    roi = roi.inside(img)
    if roi.width < 10 or roi.height < 10:
        raise RegionTooSmall(f"edge analysis needs at least 10x10, got {roi.width}x{roi.height}")
    columns, rows = line_votes(canny(img, roi, params))
    x_left, x_right = select_boundary_lines(columns, params.min_separation(roi.width))
    y_top, y_bottom = select_boundary_lines(rows, params.min_separation(roi.height))
    return PupilEstimate(roi.x0 + (x_left + x_right) / 2, roi.y0 + (y_top + y_bottom) / 2)
