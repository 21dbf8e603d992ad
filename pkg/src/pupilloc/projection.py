"""Pupil localization with integral / variance projection functions.

The ROI is projected onto both axes, the projections are smoothed and
differentiated, and the strongest transitions on either side of the darkest
position are taken as the iris flanks. Their midpoints give the centre.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NoBoundaries, NoFlankingPair, RegionTooSmall
from .image import GrayImage, PupilEstimate, Region


class Axis(str, Enum):
    VERTICAL = "vertical"      # one value per column, projected along y
    HORIZONTAL = "horizontal"  # one value per row, projected along x


@dataclass(frozen=True)
class PfParams:
    alpha: float = 0.0
    threshold_factor: float = 0.5
    smooth_width: int = 3

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0 < self.threshold_factor < 1:
            raise ValueError("threshold_factor must lie in (0, 1)")
        if self.smooth_width < 1 or self.smooth_width % 2 == 0:
            raise ValueError("smooth_width must be odd and >= 1")


@dataclass(frozen=True)
class ProjectionCurve:
    axis: Axis
    values: np.ndarray

    def __len__(self):
        return len(self.values)


def _normalize(values: np.ndarray) -> np.ndarray:
    lo = values.min()
    span = values.max() - lo
    if span == 0:
        return np.zeros_like(values)
    return (values - lo) / span


def integral_projection(img: GrayImage, roi: Region, axis: Axis) -> np.ndarray:
    """Raw mean intensity per column (vertical) or per row (horizontal)."""
    patch = img.crop(roi.inside(img)).astype(np.float64)
    return patch.mean(axis=0 if Axis(axis) is Axis.VERTICAL else 1)


def variance_projection(img: GrayImage, roi: Region, axis: Axis) -> np.ndarray:
    """Raw mean squared deviation from the integral projection."""
    patch = img.crop(roi.inside(img)).astype(np.float64)
    return patch.var(axis=0 if Axis(axis) is Axis.VERTICAL else 1)


def projection(img: GrayImage, roi: Region, axis: Axis, alpha: float = 0.0) -> ProjectionCurve:
    """General projection: ``(1 - alpha) * IPF + alpha * VPF``, both min-max normalized first.

    A constant projection normalizes to all zeros rather than raising.
    """
    axis = Axis(axis)
    roi = roi.inside(img)
    patch = img.crop(roi).astype(np.float64)
    along = 0 if axis is Axis.VERTICAL else 1
    ipf = patch.mean(axis=along)
    if alpha == 0:
        values = _normalize(ipf)
    else:
        vpf = patch.var(axis=along)
        values = (1 - alpha) * _normalize(ipf) + alpha * _normalize(vpf)
    return ProjectionCurve(axis, values)


def smooth(values: np.ndarray, width: int) -> np.ndarray:
    """Box filter with edge replication."""
    if width == 1:
        return np.asarray(values, dtype=np.float64)
    r = width // 2
    padded = np.pad(np.asarray(values, dtype=np.float64), r, mode="edge")
    return sliding_window_view(padded, width).mean(axis=-1)


def derivative(values: np.ndarray) -> np.ndarray:
    """Central differences, one-sided at both ends."""
    return np.gradient(np.asarray(values, dtype=np.float64))


def boundary_points(curve: ProjectionCurve, params: PfParams = PfParams()) -> list[float]:
    """Centroids of the runs where the smoothed derivative exceeds ``k * max|d|``.

    A run ends where marking stops or where the derivative changes sign, so
    the falling and rising flanks of a narrow valley stay separate.
    """
    if len(curve) < 5:
        raise RegionTooSmall("projection curve needs at least 5 samples")
    d = derivative(smooth(curve.values, params.smooth_width))
    peak = np.abs(d).max()
    if peak == 0:
        raise NoBoundaries(f"{curve.axis.value} projection is constant")
    # rounding keeps exact ties with T stable under affine rescaling of the input
    marked = np.round(np.abs(d) / peak, 9) > params.threshold_factor
    sign = np.sign(d)

    centers = []
    run: list[int] = []
    for i in range(len(d)):
        if marked[i] and run and sign[i] == sign[run[-1]]:
            run.append(i)
            continue
        if run:
            centers.append(sum(run) / len(run))
            run = []
        if marked[i]:
            run.append(i)
    if run:
        centers.append(sum(run) / len(run))
    return centers


def flanking_pair(curve: ProjectionCurve, params: PfParams = PfParams()) -> tuple[float, float]:
    """The boundary clusters closest to the curve minimum on each side."""
    centers = boundary_points(curve, params)
    m = int(np.argmin(smooth(curve.values, params.smooth_width)))
    left = [c for c in centers if c < m]
    right = [c for c in centers if c > m]
    if not left or not right:
        raise NoFlankingPair(f"no {curve.axis.value} boundary on one side of the valley at {m}")
    return max(left), min(right)


def locate_pupil_pf(img: GrayImage, roi: Region, params: PfParams = PfParams()) -> PupilEstimate:
    roi = roi.inside(img)
    x3, x4 = flanking_pair(projection(img, roi, Axis.VERTICAL, params.alpha), params)
    y1, y2 = flanking_pair(projection(img, roi, Axis.HORIZONTAL, params.alpha), params)
    return PupilEstimate(roi.x0 + (x3 + x4) / 2, roi.y0 + (y1 + y2) / 2)
