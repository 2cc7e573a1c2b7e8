"""Training-corpus construction: rescale, tile, flip-augment, split.

Every frame is resampled to a common pixel pitch (the corpus convention is
the pitch of a 15,000x frame), cut into a non-overlapping grid of fixed-size
tiles anchored top-left, and augmented with horizontal and vertical flips.
Splitting into train/val/test operates on tile groups -- the three flip
variants of one (source, row, col) always land in the same split, so no
augmented copy of a validation tile can leak into training. Group order is
a seeded permutation derived from a pinned FNV-1a 64-bit hash, which makes
the assignment reproducible on any platform.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .prng import fnv1a64
from .raster import ClassMask, GrayImage, ImageMeta, RasterError, rescale, rescale_mask, save_gray, save_mask
from .pipeline import resolve_pitch

TILE_W = 400
TILE_H = 343
#: Pitch of a 15,000x magnification frame: 20 um HFW over 2048 px.
TARGET_PITCH_UM = 20.0 / 2048.0

AUGMENTATIONS = ("none", "hflip", "vflip")
SPLITS = ("train", "val", "test")


class DatasetError(ValueError):
    pass


@dataclass
class TileRecord:
    tile_id: str
    source_id: str
    row: int
    col: int
    augmentation: str
    split: str | None
    image_path: str
    mask_path: str

    def group_key(self) -> str:
        return f"{self.source_id}|{self.row}|{self.col}"

    def to_dict(self) -> dict:
        return {
            "tile_id": self.tile_id,
            "source_id": self.source_id,
            "row": self.row,
            "col": self.col,
            "augmentation": self.augmentation,
            "split": self.split,
            "image_path": self.image_path,
            "mask_path": self.mask_path,
        }


@dataclass
class DatasetConfig:
    target_pitch_um: float = TARGET_PITCH_UM
    tile_w: int = TILE_W
    tile_h: int = TILE_H
    seed: int = 0
    fractions: tuple = (0.70, 0.15, 0.15)
    split_by_source: bool = False  # stricter hygiene: whole frames per split

    def __post_init__(self):
        if self.tile_w < 1 or self.tile_h < 1:
            raise DatasetError("tile dimensions must be >= 1")
        if len(self.fractions) != 3 or abs(sum(self.fractions) - 1.0) > 1e-9:
            raise DatasetError(f"fractions must sum to 1, got {self.fractions}")
        if not (self.target_pitch_um > 0):
            raise DatasetError("target pitch must be positive")


@dataclass
class DatasetManifest:
    target_pitch_um: float
    tile_w: int
    tile_h: int
    seed: int
    fractions: tuple
    records: list
    warnings: list = field(default_factory=list)
    source_errors: list = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "target_pitch_um": self.target_pitch_um,
            "tile_w": self.tile_w,
            "tile_h": self.tile_h,
            "seed": self.seed,
            "fractions": list(self.fractions),
            "records": [r.to_dict() for r in self.records],
            "warnings": list(self.warnings),
            "source_errors": list(self.source_errors),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def tile(img: GrayImage, mask: ClassMask, tile_w: int = TILE_W, tile_h: int = TILE_H):
    """Cut aligned (image, mask) into a top-left anchored grid.

    Returns a list of (tile_image, tile_mask, row, col); the right/bottom
    remainder is discarded. A frame smaller than one tile yields an empty
    list and a warning.
    """
    if img.samples.shape != mask.labels.shape:
        raise DatasetError(
            f"image {img.samples.shape} and mask {mask.labels.shape} dimensions differ"
        )
    rows = img.height // tile_h
    cols = img.width // tile_w
    if rows == 0 or cols == 0:
        warnings.warn(
            f"frame {img.width}x{img.height} is smaller than one {tile_w}x{tile_h} tile",
            stacklevel=2,
        )
        return []
    out = []
    for r in range(rows):
        for c in range(cols):
            ys = slice(r * tile_h, (r + 1) * tile_h)
            xs = slice(c * tile_w, (c + 1) * tile_w)
            out.append(
                (
                    GrayImage(img.samples[ys, xs].copy(), img.pitch_um),
                    ClassMask(mask.labels[ys, xs].copy()),
                    r,
                    c,
                )
            )
    return out


def augment(tile_img: GrayImage, tile_mask: ClassMask):
    """The original plus horizontal and vertical flips, masks flipped alike."""
    return [
        ("none", tile_img, tile_mask),
        (
            "hflip",
            GrayImage(np.fliplr(tile_img.samples).copy(), tile_img.pitch_um),
            ClassMask(np.fliplr(tile_mask.labels).copy()),
        ),
        (
            "vflip",
            GrayImage(np.flipud(tile_img.samples).copy(), tile_img.pitch_um),
            ClassMask(np.flipud(tile_mask.labels).copy()),
        ),
    ]


def _group_order_hash(key: str, seed: int) -> int:
    return fnv1a64(key.encode("utf-8") + (seed & (2**64 - 1)).to_bytes(8, "little"))


def split(records: list, fractions=(0.70, 0.15, 0.15), seed: int = 0, by_source: bool = False) -> list:
    """Assign train/val/test split per tile group (or per source frame).

    Groups are ordered by a seeded FNV-1a hash of the group key; the first
    floor(f_train * G) go to train, the next floor(f_val * G) to val, and
    the remainder to test. Deterministic for a given seed on any platform.
    """
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise DatasetError(f"fractions must sum to 1, got {fractions}")
    keys = sorted({r.source_id if by_source else r.group_key() for r in records})
    if len(keys) < 3:
        raise DatasetError(f"need at least 3 groups to split, got {len(keys)}")
    ordered = sorted(keys, key=lambda k: (_group_order_hash(k, seed), k))
    g = len(ordered)
    n_train = int(fractions[0] * g)
    n_val = int(fractions[1] * g)
    assignment = {}
    for i, k in enumerate(ordered):
        assignment[k] = "train" if i < n_train else ("val" if i < n_train + n_val else "test")
    for r in records:
        r.split = assignment[r.source_id if by_source else r.group_key()]
    return records


def build_dataset(sources, out_dir, config: DatasetConfig = DatasetConfig()) -> DatasetManifest:
    """Rescale, tile, augment, split and write a dataset tree.

    ``sources`` yields (GrayImage, ClassMask, ImageMeta) triples. Tiles land
    under ``images/`` and ``masks/`` as ``<source>_r<row>_c<col>_<aug>.png``;
    the manifest is written as canonical JSON so a rebuild with the same
    inputs and seed is byte-identical. Per-source failures are recorded as
    warnings and the build continues.
    """
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    records = []
    notes = []
    errors = []
    for img, mask, meta in sources:
        sid = meta.source_id
        try:
            pitch = resolve_pitch(img, meta)
            if pitch is None:
                raise DatasetError(f"source {sid}: no pitch metadata")
            scaled_img = rescale(GrayImage(img.samples, pitch), config.target_pitch_um, "bilinear")
            scaled_mask = rescale_mask(mask, pitch, config.target_pitch_um)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                tiles = tile(scaled_img, scaled_mask, config.tile_w, config.tile_h)
            for wmsg in caught:
                notes.append(f"{sid}: {wmsg.message}")
            for timg, tmask, r, c in tiles:
                for aug, aimg, amask in augment(timg, tmask):
                    tid = f"{sid}_r{r}_c{c}_{aug}"
                    ipath = f"images/{tid}.png"
                    mpath = f"masks/{tid}.png"
                    save_gray(aimg, out / ipath)
                    save_mask(amask, out / mpath)
                    records.append(TileRecord(tid, sid, r, c, aug, None, ipath, mpath))
        except (RasterError, DatasetError) as e:
            errors.append(f"{sid}: {e}")
    groups = {r.source_id if config.split_by_source else r.group_key() for r in records}
    if len(groups) >= 3:
        split(records, config.fractions, config.seed, config.split_by_source)
    elif records:
        # Too few groups for a meaningful split; keep everything together.
        for r in records:
            r.split = "train"
        notes.append(f"only {len(groups)} tile group(s); assigned all records to train")
    manifest = DatasetManifest(
        target_pitch_um=config.target_pitch_um,
        tile_w=config.tile_w,
        tile_h=config.tile_h,
        seed=config.seed,
        fractions=tuple(config.fractions),
        records=records,
        warnings=notes,
        source_errors=errors,
    )
    (out / "manifest.json").write_text(manifest.to_json(), "utf-8")
    return manifest
