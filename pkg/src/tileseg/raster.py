"""Pixel containers and file I/O for images, masks, and probability maps.

All three container types are immutable after construction (the backing
numpy array is marked read-only) and therefore safe to share across
threads.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import InvalidMaskValues, UnsupportedFormat

PMAP_MAGIC = b"PMAP"
PMAP_VERSION = 1
_PMAP_HEADER = struct.Struct("<4sIII")  # magic, version, height, width

# PIL modes that decode to 8-bit samples we can take as-is or convert.
_EIGHT_BIT_MODES = {"L", "RGB", "RGBA", "P"}


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Raster:
    """8-bit RGB image, shape (height, width, 3), row-major."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] != 3 or d.dtype != np.uint8:
            raise ValueError(f"Raster expects (H, W, 3) uint8, got {d.shape} {d.dtype}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("Raster dimensions must be >= 1")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Per-pixel class mask, values in {0, 1}: 0 = background, 1 = tumor."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim != 2 or d.dtype != np.uint8:
            raise ValueError(f"BinaryMask expects (H, W) uint8, got {d.shape} {d.dtype}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("BinaryMask dimensions must be >= 1")
        bad = np.setdiff1d(np.unique(d), [0, 1])
        if bad.size:
            raise InvalidMaskValues(f"mask contains values outside {{0, 1}}: {bad.tolist()}")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def tumor_fraction(self) -> float:
        return float(self.data.mean())


@dataclass(frozen=True, eq=False)
class ProbMap:
    """Per-pixel tumor probability in [0, 1], stored as float32."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2:
            raise ValueError(f"ProbMap expects (H, W), got shape {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("ProbMap dimensions must be >= 1")
        d = d.astype(np.float32, copy=False)
        if not np.isfinite(d).all():
            raise ValueError("ProbMap contains non-finite values")
        lo, hi = float(d.min()), float(d.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"ProbMap values outside [0, 1]: min={lo}, max={hi}")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def _open_image(path) -> Image.Image:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    img = Image.open(path)
    if img.mode not in _EIGHT_BIT_MODES and img.mode != "LA":
        # 16-bit TIFF/PNG ("I;16", "I"), float ("F"), 1-bit ("1"), ...
        raise UnsupportedFormat(f"{path}: unsupported mode {img.mode!r} (8-bit samples required)")
    return img


def load_image(path) -> Raster:
    """Load an 8-bit PNG/TIFF as an RGB raster.

    Grayscale inputs are replicated to three identical channels; RGBA
    inputs drop the alpha channel; palette images are expanded to RGB.
    """
    img = _open_image(path)
    if img.mode == "P":
        img = img.convert("RGB")
    arr = np.asarray(img)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    elif arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise UnsupportedFormat(f"{path}: expected 1, 3 or 4 channels, got shape {arr.shape}")
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    return Raster(arr.astype(np.uint8, copy=True))


def load_mask(path) -> BinaryMask:
    """Load a single-channel 8-bit mask; {0, 255} encodings normalize to {0, 1}."""
    img = _open_image(path)
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise UnsupportedFormat(f"{path}: mask must be single-channel, got shape {arr.shape}")
    values = np.unique(arr)
    if np.isin(values, (0, 1)).all():
        out = arr.astype(np.uint8, copy=True)
    elif np.isin(values, (0, 255)).all():
        out = (arr == 255).astype(np.uint8)
    else:
        raise InvalidMaskValues(
            f"{path}: mask values must be within {{0,1}} or {{0,255}}, found {values.tolist()[:10]}"
        )
    return BinaryMask(out)


def _atomic_write_bytes(path, payload: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def _atomic_save_pil(img: Image.Image, path) -> None:
    # Interrupted runs must never leave torn outputs, so write then rename.
    path = os.fspath(path)
    ext = os.path.splitext(path)[1]
    tmp = f"{path}.tmp.{os.getpid()}{ext}"
    try:
        img.save(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def save_image(raster: Raster, path) -> None:
    _atomic_save_pil(Image.fromarray(raster.data, "RGB"), path)


def save_mask(mask: BinaryMask, path) -> None:
    """Write a mask as an 8-bit PNG with foreground stored as 255."""
    _atomic_save_pil(Image.fromarray(mask.data * np.uint8(255), "L"), path)


def save_prob_map(pmap: ProbMap, path) -> None:
    """Persist a probability map in the bit-exact PMAP binary format.

    Layout (little-endian): magic "PMAP", version u32 = 1, height u32,
    width u32, then height*width IEEE-754 float32 values row-major.
    """
    header = _PMAP_HEADER.pack(PMAP_MAGIC, PMAP_VERSION, pmap.height, pmap.width)
    payload = pmap.data.astype("<f4", copy=False).tobytes()
    _atomic_write_bytes(path, header + payload)


def load_prob_map(path) -> ProbMap:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _PMAP_HEADER.size:
        raise UnsupportedFormat(f"{path}: truncated PMAP header")
    magic, version, height, width = _PMAP_HEADER.unpack_from(raw)
    if magic != PMAP_MAGIC:
        raise UnsupportedFormat(f"{path}: bad magic {magic!r}")
    if version != PMAP_VERSION:
        raise UnsupportedFormat(f"{path}: unsupported PMAP version {version}")
    expected = _PMAP_HEADER.size + height * width * 4
    if len(raw) != expected:
        raise UnsupportedFormat(f"{path}: payload length {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<f4", offset=_PMAP_HEADER.size).reshape(height, width)
    return ProbMap(data.copy())


def peek_size(path) -> tuple[int, int]:
    """Return (height, width) without decoding the pixel data."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with Image.open(path) as img:
        w, h = img.size
    return h, w
