"""Raster types, physical-scale metadata, image file I/O and resampling.

Images are 8-bit single-channel rasters held as ``(height, width)`` numpy
arrays. Class masks use the same layout with pixel values equal to the class
codes (0 = clay, 1 = silt, 2 = pore). Binary masks are plain 2-D boolean
arrays. Physical scale is carried as a pixel pitch in micrometres per pixel,
derived from the horizontal field width of the instrument.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from PIL import Image, UnidentifiedImageError

CLAY = 0
SILT = 1
PORE = 2
CLASS_NAMES = ("clay", "silt", "pore")

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class RasterError(ValueError):
    """Unreadable file, unsupported format or broken raster invariant."""


@dataclass(frozen=True)
class ImageMeta:
    """Acquisition metadata: source identifier, magnification, HFW in um."""

    source_id: str
    magnification: int
    hfw_um: float

    def __post_init__(self):
        if self.magnification <= 0:
            raise RasterError(f"magnification must be positive, got {self.magnification}")
        if not (self.hfw_um > 0):
            raise RasterError(f"hfw_um must be positive, got {self.hfw_um}")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster with optional physical pixel pitch (um/px)."""

    samples: np.ndarray
    pitch_um: float | None = None

    def __post_init__(self):
        a = np.asarray(self.samples)
        if a.ndim != 2 or a.size == 0:
            raise RasterError(f"samples must be a non-empty 2-D array, got shape {a.shape}")
        if a.dtype != np.uint8:
            raise RasterError(f"samples must be uint8, got {a.dtype}")
        object.__setattr__(self, "samples", a)
        if self.pitch_um is not None:
            p = float(self.pitch_um)
            if not (p > 0) or not np.isfinite(p):
                raise RasterError(f"pitch_um must be positive and finite, got {self.pitch_um}")
            object.__setattr__(self, "pitch_um", p)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class ClassMask:
    """Per-pixel class raster over {0=clay, 1=silt, 2=pore}."""

    labels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2 or a.size == 0:
            raise RasterError(f"labels must be a non-empty 2-D array, got shape {a.shape}")
        if a.dtype.kind not in "iub":
            raise RasterError(f"labels must be integer class codes, got dtype {a.dtype}")
        bad = (a < 0) | (a > 2)
        if bad.any():
            idx = int(np.argmax(bad.ravel()))
            raise RasterError(f"invalid class code {int(a.ravel()[idx])} at pixel index {idx}")
        object.__setattr__(self, "labels", a.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _parse_pgm(data: bytes, label: str) -> np.ndarray:
    """Parse a binary PGM (P5, maxval 255) into a (h, w) uint8 array."""
    if not data.startswith(b"P5"):
        raise RasterError(f"{label}: not a binary PGM (P5) file")

    # Header tokens may be separated by any whitespace; '#' starts a comment.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RasterError(f"{label}: truncated PGM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval

    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError:
        raise RasterError(f"{label}: malformed PGM header") from None
    if w < 1 or h < 1:
        raise RasterError(f"{label}: bad PGM dimensions {w}x{h}")
    if maxval != 255:
        raise RasterError(f"{label}: unsupported bit depth (maxval {maxval}, need 255)")
    body = data[pos : pos + w * h]
    if len(body) != w * h:
        raise RasterError(f"{label}: PGM body has {len(body)} bytes, expected {w * h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def pgm_bytes(samples: np.ndarray) -> bytes:
    h, w = samples.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(samples, dtype=np.uint8).tobytes()


def _write_pgm(path: Path, samples: np.ndarray) -> None:
    Path(path).write_bytes(pgm_bytes(samples))


def _parse_png(data: bytes, label: str) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            mode = im.mode
            if mode in ("I", "I;16", "I;16B", "I;16L"):
                raise RasterError(f"{label}: unsupported bit depth (16-bit PNG)")
            if mode != "L":
                raise RasterError(f"{label}: unsupported color type '{mode}' (need 8-bit grayscale)")
            return np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError:
        raise RasterError(f"{label}: unreadable image file") from None


def decode_gray(data: bytes, label: str = "<bytes>") -> np.ndarray:
    """Decode in-memory PNG or PGM bytes to a (h, w) uint8 array."""
    if data.startswith(b"P5"):
        return _parse_pgm(data, label)
    if data.startswith(_PNG_MAGIC):
        return _parse_png(data, label)
    raise RasterError(f"{label}: unsupported format (expected 8-bit grayscale PNG or P5 PGM)")


def png_bytes(samples: np.ndarray) -> bytes:
    """Encode a uint8 grayscale (h, w) or RGBA (h, w, 4) array as PNG."""
    mode = "RGBA" if samples.ndim == 3 else "L"
    buf = io.BytesIO()
    Image.fromarray(samples, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def _read_samples(path: Path) -> np.ndarray:
    if not path.is_file():
        raise RasterError(f"{path}: no such file")
    return decode_gray(path.read_bytes(), str(path))


def sidecar_path(path) -> Path:
    """Metadata sidecar convention: <image-stem>.meta.json next to the image."""
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def load_meta(path) -> ImageMeta:
    """Load an ImageMeta sidecar, reporting malformed content distinctly."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text("utf-8"))
        return ImageMeta(
            source_id=str(raw["source_id"]),
            magnification=int(raw["magnification"]),
            hfw_um=float(raw["hfw_um"]),
        )
    except (OSError, ValueError, KeyError, TypeError, RasterError) as e:
        raise RasterError(f"{p}: malformed sidecar metadata ({e})") from None


def save_meta(meta: ImageMeta, path) -> None:
    payload = {
        "source_id": meta.source_id,
        "magnification": meta.magnification,
        "hfw_um": meta.hfw_um,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")


def load_gray(path) -> GrayImage:
    """Load an 8-bit grayscale PNG or binary PGM as a GrayImage.

    If a ``<stem>.meta.json`` sidecar is present its horizontal field width
    sets the pixel pitch: ``pitch_um = hfw_um / width``.
    """
    p = Path(path)
    samples = _read_samples(p)
    pitch = None
    sc = sidecar_path(p)
    if sc.is_file():
        meta = load_meta(sc)
        pitch = meta.hfw_um / samples.shape[1]
    return GrayImage(samples, pitch)


def save_gray(img: GrayImage, path) -> None:
    """Write a GrayImage as PNG or PGM, chosen by file extension."""
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        _write_pgm(p, img.samples)
    else:
        Image.fromarray(img.samples, mode="L").save(p, format="PNG")


def load_mask(path) -> ClassMask:
    """Load a class mask stored as grayscale pixels whose values are the codes."""
    samples = _read_samples(Path(path))
    if samples.max(initial=0) > 2:
        flat = samples.ravel()
        idx = int(np.argmax(flat > 2))
        raise RasterError(f"{path}: invalid class code {int(flat[idx])} at pixel index {idx}")
    return ClassMask(samples)


def save_mask(mask: ClassMask, path) -> None:
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        _write_pgm(p, mask.labels)
    else:
        Image.fromarray(mask.labels, mode="L").save(p, format="PNG")


def save_labels_pgm16(ids: np.ndarray, path) -> None:
    """Write an instance-id map as a 16-bit binary PGM (P5, maxval 65535)."""
    ids = np.asarray(ids)
    if ids.max(initial=0) > 65535:
        raise RasterError(f"instance id {int(ids.max())} exceeds 16-bit PGM range")
    h, w = ids.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(ids.astype(">u2").tobytes())


def load_labels_pgm16(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise RasterError(f"{path}: not a binary PGM (P5) file")
    parts = data.split(maxsplit=4)
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 65535:
        raise RasterError(f"{path}: expected 16-bit PGM (maxval 65535), got {maxval}")
    body = data[len(data) - 2 * w * h :]
    return np.frombuffer(body, dtype=">u2").reshape(h, w).astype(np.int64)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def _out_dim(dim: int, scale: float) -> int:
    return max(1, int(_round_half_up(dim * scale)))


def _src_coords(n_out: int, n_src: int) -> np.ndarray:
    # Center-aligned sampling: output pixel i reads source (i+0.5)*scale - 0.5.
    scale = n_src / n_out
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    return np.clip(x, 0.0, n_src - 1.0)


def _resample_nearest(samples: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    ys = _round_half_up(_src_coords(out_h, samples.shape[0])).astype(np.intp)
    xs = _round_half_up(_src_coords(out_w, samples.shape[1])).astype(np.intp)
    ys = np.minimum(ys, samples.shape[0] - 1)
    xs = np.minimum(xs, samples.shape[1] - 1)
    return samples[np.ix_(ys, xs)]


def _resample_bilinear_u8(samples: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    src = samples.astype(np.float64)
    ys = _src_coords(out_h, samples.shape[0])
    xs = _src_coords(out_w, samples.shape[1])
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, samples.shape[0] - 1)
    x1 = np.minimum(x0 + 1, samples.shape[1] - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1 - fy) + bot * fy
    return np.clip(_round_half_up(out), 0, 255).astype(np.uint8)


def rescale(img: GrayImage, target_pitch_um: float, mode: str = "bilinear") -> GrayImage:
    """Resample a GrayImage to a new pixel pitch.

    Output dimensions are ``round(dim * pitch/target)`` (at least 1) and the
    result carries the target pitch. Requires pitch metadata on the input.
    """
    if img.pitch_um is None:
        raise RasterError("rescale requires pitch metadata (no sidecar was found?)")
    if not (target_pitch_um > 0):
        raise RasterError(f"target pitch must be positive, got {target_pitch_um}")
    if mode not in ("bilinear", "nearest"):
        raise RasterError(f"unknown resampling mode '{mode}'")
    scale = img.pitch_um / target_pitch_um
    out_h = _out_dim(img.height, scale)
    out_w = _out_dim(img.width, scale)
    if (out_h, out_w) == (img.height, img.width) and abs(scale - 1.0) < 1e-12:
        return GrayImage(img.samples.copy(), float(target_pitch_um))
    if mode == "nearest":
        out = _resample_nearest(img.samples, out_h, out_w)
    else:
        out = _resample_bilinear_u8(img.samples, out_h, out_w)
    return GrayImage(out, float(target_pitch_um))


def rescale_mask(mask: ClassMask, pitch_um: float, target_pitch_um: float) -> ClassMask:
    """Resample a ClassMask to a new pitch. Nearest-neighbour only, so no
    class codes are invented."""
    if not (pitch_um > 0) or not (target_pitch_um > 0):
        raise RasterError("mask rescaling needs positive source and target pitches")
    scale = pitch_um / target_pitch_um
    out_h = _out_dim(mask.height, scale)
    out_w = _out_dim(mask.width, scale)
    return ClassMask(_resample_nearest(mask.labels, out_h, out_w))
