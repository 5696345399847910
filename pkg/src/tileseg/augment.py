"""Seeded training-time augmentation for (image patch, mask) pairs.

Transforms run in a fixed order (geometric first, photometric second) and
each one is independently gated at its configured probability, so a seed
fully determines the output. Geometric transforms are applied identically
to the image (bilinear) and the mask (nearest-neighbor); photometric
transforms touch the image only. Exposed corners from arbitrary rotation
and scale-down are filled by reflection rather than artificial black
tissue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage as ndi
from PIL import Image, ImageOps

from .raster import BinaryMask, Raster


@dataclass(frozen=True)
class AugmentationConfig:
    """Per-transform apply probabilities and parameter ranges.

    The transform list and the 50% default gate follow the training recipe;
    parameter ranges are configurable because only the transform names are
    fixed by the method.
    """

    rotate_prob: float = 0.5
    rot90_prob: float = 0.5
    hflip_prob: float = 0.5
    vflip_prob: float = 0.5
    scale_prob: float = 0.5
    gamma_prob: float = 0.5
    contrast_prob: float = 0.5
    equalize_prob: float = 0.5
    solarize_prob: float = 0.5
    hsv_prob: float = 0.5
    blur_prob: float = 0.5

    rotation_degrees: tuple[float, float] = (-45.0, 45.0)
    rot90_counts: tuple[int, ...] = (1, 2, 3)
    scale_range: tuple[float, float] = (0.8, 1.25)
    gamma_range: tuple[float, float] = (0.7, 1.5)
    contrast_range: tuple[float, float] = (0.75, 1.25)
    solarize_threshold: tuple[int, int] = (128, 255)
    hue_shift_degrees: float = 10.0
    saturation_shift: float = 0.15
    value_shift: float = 0.15
    blur_sigma_range: tuple[float, float] = (0.1, 2.0)

    def __post_init__(self):
        for name in ("rotate_prob", "rot90_prob", "hflip_prob", "vflip_prob",
                     "scale_prob", "gamma_prob", "contrast_prob", "equalize_prob",
                     "solarize_prob", "hsv_prob", "blur_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        for name in ("rotation_degrees", "scale_range", "gamma_range",
                     "contrast_range", "solarize_threshold", "blur_sigma_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is empty: ({lo}, {hi})")
        if not self.rot90_counts:
            raise ValueError("rot90_counts must be non-empty")


# ---- geometric transforms (image + mask together) ---------------------------

def rotate90(image: np.ndarray, mask: np.ndarray, k: int):
    """k counterclockwise quarter turns."""
    return np.rot90(image, k, axes=(0, 1)).copy(), np.rot90(mask, k, axes=(0, 1)).copy()


def flip_horizontal(image: np.ndarray, mask: np.ndarray):
    return np.flip(image, axis=1).copy(), np.flip(mask, axis=1).copy()


def flip_vertical(image: np.ndarray, mask: np.ndarray):
    return np.flip(image, axis=0).copy(), np.flip(mask, axis=0).copy()


def rotate_arbitrary(image: np.ndarray, mask: np.ndarray, degrees: float):
    """Rotate about the patch center; reflection fill, bilinear/nearest."""
    img_out = ndi.rotate(image, degrees, axes=(1, 0), reshape=False,
                         order=1, mode="reflect")
    mask_out = ndi.rotate(mask, degrees, axes=(1, 0), reshape=False,
                          order=0, mode="reflect")
    return img_out, mask_out


def _fit_to(arr: np.ndarray, size: int) -> np.ndarray:
    """Center-crop or reflect-pad the first two axes back to size x size."""
    h, w = arr.shape[:2]
    if h > size:
        top = (h - size) // 2
        arr = arr[top:top + size]
    if w > size:
        left = (w - size) // 2
        arr = arr[:, left:left + size]
    h, w = arr.shape[:2]
    if h < size or w < size:
        pad_h = size - h
        pad_w = size - w
        pad = [(pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2)]
        pad += [(0, 0)] * (arr.ndim - 2)
        arr = np.pad(arr, pad, mode="reflect")
    return arr


def rescale(image: np.ndarray, mask: np.ndarray, factor: float):
    """Zoom by factor, then crop/pad back to the original patch size."""
    size = image.shape[0]
    zoom_img = (factor, factor, 1) if image.ndim == 3 else (factor, factor)
    img_out = _fit_to(ndi.zoom(image, zoom_img, order=1, mode="reflect"), size)
    mask_out = _fit_to(ndi.zoom(mask, (factor, factor), order=0, mode="reflect"), size)
    return img_out.copy(), mask_out.copy()


# ---- photometric transforms (image only) ------------------------------------

def apply_gamma(image: np.ndarray, gamma: float) -> np.ndarray:
    lut = np.clip(np.rint(((np.arange(256) / 255.0) ** gamma) * 255.0), 0, 255).astype(np.uint8)
    return lut[image]


def apply_contrast(image: np.ndarray, factor: float) -> np.ndarray:
    mean = image.mean()
    out = (image.astype(np.float32) - mean) * factor + mean
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def equalize_histogram(image: np.ndarray) -> np.ndarray:
    return np.asarray(ImageOps.equalize(Image.fromarray(image, "RGB"))).copy()


def solarize(image: np.ndarray, threshold: int) -> np.ndarray:
    return np.where(image >= threshold, 255 - image, image).astype(np.uint8)


def shift_hsv(image: np.ndarray, hue_delta_degrees: float,
              saturation_factor: float, value_factor: float) -> np.ndarray:
    hsv = np.asarray(Image.fromarray(image, "RGB").convert("HSV")).copy()
    hue_delta = np.uint8(int(round(hue_delta_degrees / 360.0 * 256.0)) % 256)
    hsv[..., 0] = hsv[..., 0] + hue_delta  # uint8 wraparound is the hue circle
    for ch, factor in ((1, saturation_factor), (2, value_factor)):
        scaled = np.clip(np.rint(hsv[..., ch].astype(np.float32) * factor), 0, 255)
        hsv[..., ch] = scaled.astype(np.uint8)
    return np.asarray(Image.fromarray(hsv, "HSV").convert("RGB")).copy()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    blurred = ndi.gaussian_filter(image.astype(np.float32), sigma=(sigma, sigma, 0))
    return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)


# ---- the gated pipeline ------------------------------------------------------

def apply_augmentation(patch: Raster, mask: BinaryMask,
                       config: AugmentationConfig | None = None,
                       seed: int = 0) -> tuple[Raster, BinaryMask]:
    """Apply the seeded augmentation suite to a (patch, mask) pair.

    Output dimensions always equal the input dimensions and mask values
    stay in {0, 1}.
    """
    if config is None:
        config = AugmentationConfig()
    if (patch.height, patch.width) != (mask.height, mask.width):
        raise ValueError("patch and mask dimensions must match")
    rng = np.random.default_rng(seed)
    img = patch.data.copy()
    msk = mask.data.copy()

    # geometric
    if rng.random() < config.rot90_prob:
        k = int(rng.choice(np.asarray(config.rot90_counts)))
        img, msk = rotate90(img, msk, k)
    if rng.random() < config.rotate_prob:
        degrees = float(rng.uniform(*config.rotation_degrees))
        img, msk = rotate_arbitrary(img, msk, degrees)
    if rng.random() < config.hflip_prob:
        img, msk = flip_horizontal(img, msk)
    if rng.random() < config.vflip_prob:
        img, msk = flip_vertical(img, msk)
    if rng.random() < config.scale_prob:
        factor = float(rng.uniform(*config.scale_range))
        img, msk = rescale(img, msk, factor)

    # photometric
    if rng.random() < config.gamma_prob:
        img = apply_gamma(img, float(rng.uniform(*config.gamma_range)))
    if rng.random() < config.contrast_prob:
        img = apply_contrast(img, float(rng.uniform(*config.contrast_range)))
    if rng.random() < config.equalize_prob:
        img = equalize_histogram(img)
    if rng.random() < config.solarize_prob:
        img = solarize(img, int(rng.integers(config.solarize_threshold[0],
                                             config.solarize_threshold[1] + 1)))
    if rng.random() < config.hsv_prob:
        hue = float(rng.uniform(-config.hue_shift_degrees, config.hue_shift_degrees))
        sat = float(rng.uniform(1 - config.saturation_shift, 1 + config.saturation_shift))
        val = float(rng.uniform(1 - config.value_shift, 1 + config.value_shift))
        img = shift_hsv(img, hue, sat, val)
    if rng.random() < config.blur_prob:
        img = gaussian_blur(img, float(rng.uniform(*config.blur_sigma_range)))

    return Raster(img), BinaryMask(msk)
