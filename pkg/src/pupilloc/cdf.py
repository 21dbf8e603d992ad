"""Pupil localization by cumulative-distribution thresholding.

The darkest few percent of the eye region are kept, cleaned with a
minimum filter, and the darkest survivor (PMI) seeds a local refinement:
the centre is the centroid of the pixels around PMI that are darker than the
average intensity measured next to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoCandidatePixels, NoDarkPixels
from .image import GrayImage, PupilEstimate, Region, histogram_cdf, minimum_filter


@dataclass(frozen=True)
class CdfParams:
    quantile: float = 0.05
    min_filter_radius: int = 2
    ai_window: int = 10
    refine_window: int = 15

    def __post_init__(self):
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")
        if self.min_filter_radius < 1 or self.ai_window < 1 or self.refine_window < 1:
            raise ValueError("radii and windows must be >= 1")
        if self.ai_window > self.refine_window:
            raise ValueError("ai_window must not exceed refine_window")


def cdf_binarize(img: GrayImage, roi: Region, quantile: float = 0.05) -> GrayImage:
    """White (255) where the ROI luminance CDF of the pixel is below ``quantile``.

    Pixels outside ``roi`` are set to 0.
    """
    roi = roi.inside(img)
    cdf = histogram_cdf(img, roi)
    lut = np.where(cdf < quantile, 255, 0).astype(np.uint8)
    out = np.zeros_like(img.pixels)
    out[roi.slices] = lut[img.crop(roi)]
    return GrayImage(out)


def find_pmi(img: GrayImage, mask: GrayImage, roi: Region) -> tuple[int, int]:
    """Darkest original pixel among the white mask pixels, ties in row-major order."""
    roi = roi.inside(img)
    white = mask.crop(roi) == 255
    if not white.any():
        raise NoCandidatePixels("mask has no white pixels inside the ROI")
    candidates = np.where(white, img.crop(roi).astype(np.int16), 256)
    # argmin on the flattened array returns the first hit in row-major order
    iy, ix = np.unravel_index(np.argmin(candidates), candidates.shape)
    return roi.x0 + int(ix), roi.y0 + int(iy)


def _window(cx: int, cy: int, size: int, roi: Region) -> Region:
    # even sizes span -size//2 .. size//2 - 1 around the centre pixel
    half = size // 2
    x0 = max(cx - half, roi.x0)
    y0 = max(cy - half, roi.y0)
    x1 = min(cx - half + size, roi.x1)
    y1 = min(cy - half + size, roi.y1)
    return Region(x0, y0, x1 - x0, y1 - y0)


def locate_pupil_cdf(img: GrayImage, roi: Region, params: CdfParams = CdfParams()) -> PupilEstimate:
    roi = roi.inside(img)
    mask = cdf_binarize(img, roi, params.quantile)
    mask = minimum_filter(mask, roi, params.min_filter_radius)
    px, py = find_pmi(img, mask, roi)

    ai = img.crop(_window(px, py, params.ai_window, roi)).mean(dtype=np.float64)

    refine = _window(px, py, params.refine_window, roi)
    filtered = minimum_filter(img, refine, params.min_filter_radius).crop(refine)
    ys, xs = np.nonzero(filtered < ai)
    if xs.size == 0:
        raise NoDarkPixels("no pixel in the refinement window is darker than the local average")
    return PupilEstimate(refine.x0 + float(xs.mean()), refine.y0 + float(ys.mean()))
