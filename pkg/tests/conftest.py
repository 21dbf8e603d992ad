import numpy as np
import pytest

from pupilloc import GrayImage, Region


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_image(rng, width, height, low=0, high=256):
    return GrayImage(rng.integers(low, high, size=(height, width), dtype=np.uint8))


def random_region(rng, img):
    w = int(rng.integers(1, img.width + 1))
    h = int(rng.integers(1, img.height + 1))
    x0 = int(rng.integers(0, img.width - w + 1))
    y0 = int(rng.integers(0, img.height - h + 1))
    return Region(x0, y0, w, h)


def mirror(img):
    return GrayImage(img.pixels[:, ::-1])
