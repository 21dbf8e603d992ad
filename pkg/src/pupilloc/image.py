"""Image and geometry types plus the pixel kernels shared by the locators.

Coordinates follow the usual raster convention: origin at the top-left
pixel, ``x`` grows to the right (columns) and ``y`` grows downward (rows).
Every kernel takes a :class:`Region` and leaves pixels outside it untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptyRegion


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel raster, stored row-major as an (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.array_equal(arr, np.round(arr)):
                raise ValueError("intensities must be integers")
        arr = np.array(arr, dtype=np.uint8, order="C")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "GrayImage":
        if len(data) != width * height:
            raise ValueError(f"expected {width * height} bytes, got {len(data)}")
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width))

    @classmethod
    def filled(cls, width: int, height: int, value: int) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.uint8))

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"

    def crop(self, region: "Region") -> np.ndarray:
        return self.pixels[region.slices]

    def replace(self, region: "Region", values: np.ndarray) -> "GrayImage":
        out = self.pixels.copy()
        out[region.slices] = values
        return GrayImage(out)


@dataclass(frozen=True)
class Region:
    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise EmptyRegion(f"region has non-positive size {self.width}x{self.height}")

    @classmethod
    def clamped(cls, x0: int, y0: int, width: int, height: int,
                image_width: int, image_height: int) -> "Region":
        """Intersect the rectangle with the image; empty intersections raise EmptyRegion."""
        x1 = min(int(x0) + int(width), image_width)
        y1 = min(int(y0) + int(height), image_height)
        x0 = max(int(x0), 0)
        y0 = max(int(y0), 0)
        return cls(x0, y0, x1 - x0, y1 - y0)

    @classmethod
    def full(cls, img: GrayImage) -> "Region":
        return cls(0, 0, img.width, img.height)

    @classmethod
    def centered(cls, cx: int, cy: int, size: int,
                 image_width: int, image_height: int) -> "Region":
        """Square of side ``size`` spanning offsets ``-size//2 .. size - size//2 - 1``."""
        half = size // 2
        return cls.clamped(cx - half, cy - half, size, size, image_width, image_height)

    @property
    def x1(self) -> int:
        return self.x0 + self.width

    @property
    def y1(self) -> int:
        return self.y0 + self.height

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 - 1 and self.y0 <= y <= self.y1 - 1

    def inside(self, img: GrayImage) -> "Region":
        """Return the region clipped to ``img``."""
        return Region.clamped(self.x0, self.y0, self.width, self.height, img.width, img.height)


class PupilEstimate(NamedTuple):
    """Sub-pixel location in parent image coordinates."""

    x: float
    y: float


def histogram_cdf(img: GrayImage, region: Region) -> np.ndarray:
    """Cumulative luminance distribution over ``region``.

    Returns a length-256 float array where ``cdf[r]`` is the fraction of
    region pixels with intensity ``<= r``. ``cdf[255]`` is exactly 1.
    """
    region = region.inside(img)
    counts = np.bincount(img.crop(region).ravel(), minlength=256)
    cumulative = np.cumsum(counts)
    return cumulative / cumulative[-1]


def _running_min(a: np.ndarray, radius: int, axis: int) -> np.ndarray:
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    # padding with the maximum value is the same as shrinking the window
    padded = np.pad(a, pad, constant_values=255)
    windows = sliding_window_view(padded, 2 * radius + 1, axis=axis)
    return windows.min(axis=-1)


def minimum_filter(img: GrayImage, region: Region, radius: int) -> GrayImage:
    """Grey erosion with a (2*radius+1)-square window clipped at region borders."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    region = region.inside(img)
    patch = img.crop(region)
    out = _running_min(_running_min(patch, radius, axis=1), radius, axis=0)
    return img.replace(region, out)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps for offsets ``-ceil(3*sigma) .. ceil(3*sigma)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    radius = math.ceil(3 * sigma)
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _convolve_axis(a: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    radius = len(taps) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    out = np.zeros(a.shape, dtype=np.float64)
    for i, t in enumerate(taps):
        if axis == 0:
            out += t * padded[i:i + n, :]
        else:
            out += t * padded[:, i:i + n]
    return out


def blur_array(patch: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a raw array with edge replication, rounded to uint8."""
    taps = gaussian_kernel(sigma)
    smoothed = _convolve_axis(_convolve_axis(patch.astype(np.float64), taps, 1), taps, 0)
    return np.clip(np.floor(smoothed + 0.5), 0, 255).astype(np.uint8)


def gaussian_blur(img: GrayImage, region: Region, sigma: float = 1.0) -> GrayImage:
    region = region.inside(img)
    return img.replace(region, blur_array(img.crop(region), sigma))


def mean_intensity(img: GrayImage, region: Region) -> float:
    region = region.inside(img)
    return float(img.crop(region).mean(dtype=np.float64))
