import numpy as np
import pytest

from mudseg.overlay import overlay, save_overlay
from mudseg.raster import CLAY, PORE, SILT, ClassMask, GrayImage, RasterError


def test_alpha_zero_replicates_grayscale(random_gray, random_mask):
    img, mask = random_gray(), random_mask()
    rgba = overlay(img, mask, alpha=0.0)
    for ch in range(3):
        assert np.array_equal(rgba[..., ch], img.samples)
    assert (rgba[..., 3] == 255).all()


def test_alpha_one_pure_colors():
    img = GrayImage(np.full((2, 3), 100, dtype=np.uint8))
    labels = np.array([[CLAY, SILT, PORE]] * 2, dtype=np.uint8)
    rgba = overlay(img, ClassMask(labels), alpha=1.0)
    assert tuple(rgba[0, 0]) == (100, 100, 100, 255)
    assert tuple(rgba[0, 1]) == (255, 0, 0, 255)
    assert tuple(rgba[0, 2]) == (0, 255, 0, 255)


def test_half_alpha_blend_formula():
    img = GrayImage(np.full((1, 1), 100, dtype=np.uint8))
    mask = ClassMask(np.full((1, 1), PORE, dtype=np.uint8))
    rgba = overlay(img, mask, alpha=0.5)
    # round(0.5*100 + 0.5*{0,255,0}) = (50, 178, 50)
    assert tuple(rgba[0, 0]) == (50, 178, 50, 255)


def test_only_non_clay_pixels_change(random_gray, random_mask):
    img, mask = random_gray(), random_mask()
    rgba = overlay(img, mask, alpha=0.7)
    clay = mask.labels == CLAY
    for ch in range(3):
        assert np.array_equal(rgba[..., ch][clay], img.samples[clay])
    colored = ~clay & (img.samples < 200)  # bright pixels can coincide with blend
    assert (rgba[..., 0][colored] != rgba[..., 1][colored]).any() or not colored.any()


def test_overlay_validation(random_gray, random_mask):
    img = random_gray(8, 8)
    with pytest.raises(RasterError, match="mismatch"):
        overlay(img, ClassMask(np.zeros((4, 4), dtype=np.uint8)))
    with pytest.raises(RasterError, match="alpha"):
        overlay(img, ClassMask(np.zeros((8, 8), dtype=np.uint8)), alpha=1.5)


def test_save_overlay_png(tmp_path, random_gray, random_mask):
    rgba = overlay(random_gray(), random_mask(), 0.5)
    save_overlay(rgba, tmp_path / "o.png")
    from PIL import Image

    with Image.open(tmp_path / "o.png") as im:
        assert im.mode == "RGBA"
        assert np.array_equal(np.asarray(im), rgba)
