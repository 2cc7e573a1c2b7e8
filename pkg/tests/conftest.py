import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mudseg.raster import ClassMask, GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(20240831)


@pytest.fixture
def random_gray(rng):
    def make(h=32, w=32, pitch=None):
        return GrayImage(rng.integers(0, 256, (h, w), dtype=np.uint8), pitch)

    return make


@pytest.fixture
def random_mask(rng):
    def make(h=32, w=32):
        return ClassMask(rng.integers(0, 3, (h, w), dtype=np.uint8))

    return make
