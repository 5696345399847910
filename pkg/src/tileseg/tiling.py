"""Overlapping patch grids, Gaussian blending, and sliding-window inference.

An image is tiled into patch_size x patch_size windows at stride intervals;
windows that would overrun the image are clamped to the boundary so every
pixel is covered without padding. Each patch's probability map is weighted
by a centered Gaussian and accumulated; overlaps resolve to the weighted
mean. Accumulation runs in float64 in fixed row-major patch order, with the
division performed once at the end, so results are deterministic regardless
of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import (
    InvalidSigma,
    MissingPatch,
    OutOfBounds,
    PatchLargerThanImage,
    ScorerError,
    ShapeMismatch,
)
from .raster import BinaryMask, ProbMap, Raster

DEFAULT_PATCH_SIZE = 512
DEFAULT_STRIDE = 256
DEFAULT_SIGMA = DEFAULT_PATCH_SIZE / 8  # see gaussian_kernel docstring


@dataclass(frozen=True)
class PatchGrid:
    """Deterministic tiling geometry: top-left (row, col) origins, row-major."""

    patch_size: int
    stride: int
    origins: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class GaussianKernel:
    size: int
    sigma: float
    weights: np.ndarray = field(repr=False)


def axis_offsets(extent: int, patch_size: int, stride: int) -> list[int]:
    """Stride-multiple offsets along one axis, plus one clamped final offset
    when the last stride window would overrun the extent."""
    offsets = list(range(0, extent - patch_size + 1, stride))
    if offsets[-1] + patch_size < extent:
        offsets.append(extent - patch_size)
    return offsets


def build_grid(image_height: int, image_width: int,
               patch_size: int = DEFAULT_PATCH_SIZE,
               stride: int = DEFAULT_STRIDE) -> PatchGrid:
    """Build the overlapping patch grid covering every pixel of the image.

    Raises PatchLargerThanImage when the patch does not fit, and ValueError
    for a stride outside [1, patch_size].
    """
    if patch_size > min(image_height, image_width):
        raise PatchLargerThanImage(
            f"patch {patch_size} exceeds image {image_height}x{image_width}"
        )
    if patch_size < 1:
        raise ValueError("patch_size must be >= 1")
    if not 1 <= stride <= patch_size:
        raise ValueError(f"stride must be in [1, patch_size], got {stride}")
    rows = axis_offsets(image_height, patch_size, stride)
    cols = axis_offsets(image_width, patch_size, stride)
    origins = tuple((r, c) for r in rows for c in cols)
    return PatchGrid(patch_size=patch_size, stride=stride, origins=origins)


def extract_patch(source, origin: tuple[int, int], patch_size: int):
    """Copy a patch_size x patch_size window; returns the same type as source."""
    row, col = origin
    if row < 0 or col < 0:
        raise OutOfBounds(f"negative origin {origin}")
    if row + patch_size > source.height or col + patch_size > source.width:
        raise OutOfBounds(
            f"patch at {origin} size {patch_size} exceeds {source.height}x{source.width}"
        )
    window = source.data[row:row + patch_size, col:col + patch_size].copy()
    return type(source)(window)


def gaussian_kernel(size: int, sigma: float) -> GaussianKernel:
    """Centered 2-D Gaussian blending weights, scaled to max 1.0.

    weight(i, j) = exp(-((i-c)^2 + (j-c)^2) / (2 sigma^2)) with
    c = (size-1)/2, then divided by its maximum. Only weight ratios matter
    after the stitch division, and a max of 1.0 leaves single-patch regions
    unscaled. The default sigma of patch_size/8 is the conventional choice
    for Gaussian-blended sliding-window inference.
    """
    if sigma <= 0:
        raise InvalidSigma(f"sigma must be > 0, got {sigma}")
    if size < 1:
        raise ValueError("size must be >= 1")
    c = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - c
    d2 = coords[:, None] ** 2 + coords[None, :] ** 2
    weights = np.exp(-d2 / (2.0 * sigma * sigma))
    weights /= weights.max()
    weights.flags.writeable = False
    return GaussianKernel(size=size, sigma=float(sigma), weights=weights)


def stitch(patch_probs: Iterable[tuple[tuple[int, int], ProbMap]],
           grid: PatchGrid, kernel: GaussianKernel,
           out_height: int, out_width: int) -> ProbMap:
    """Blend per-patch probabilities into one full-size map.

    output(p) = sum_k w_k(p) prob_k(p) / sum_k w_k(p) over the patches
    covering pixel p. Requires exactly one probability patch per grid
    origin and a kernel matching the patch size.
    """
    if kernel.size != grid.patch_size:
        raise ShapeMismatch(f"kernel size {kernel.size} != patch size {grid.patch_size}")
    by_origin = {}
    for origin, pmap in patch_probs:
        key = (int(origin[0]), int(origin[1]))
        if pmap.height != grid.patch_size or pmap.width != grid.patch_size:
            raise ShapeMismatch(
                f"patch at {key} is {pmap.height}x{pmap.width}, expected {grid.patch_size}"
            )
        by_origin[key] = pmap
    missing = [o for o in grid.origins if o not in by_origin]
    if missing:
        raise MissingPatch(f"no probability patch for grid origins {missing[:5]}")

    weighted_sum = np.zeros((out_height, out_width), dtype=np.float64)
    weight_sum = np.zeros((out_height, out_width), dtype=np.float64)
    for row, col in grid.origins:  # fixed row-major order
        if row + grid.patch_size > out_height or col + grid.patch_size > out_width:
            raise ShapeMismatch(
                f"grid origin ({row}, {col}) overruns output {out_height}x{out_width}"
            )
        _kernels.accumulate_patch(
            weighted_sum, weight_sum, by_origin[(row, col)].data, kernel.weights, row, col
        )
    if weight_sum.min() <= 0.0:
        raise ShapeMismatch("grid does not cover the full output extent")
    return ProbMap(_kernels.finalize_stitch(weighted_sum, weight_sum))


def threshold(pmap: ProbMap, cutoff: float = 0.5) -> BinaryMask:
    """Classify tumor pixels: strictly greater than cutoff; exactly cutoff is background."""
    return BinaryMask((pmap.data > cutoff).astype(np.uint8))


def run_inference(image: Raster, scorer, patch_size: int = DEFAULT_PATCH_SIZE,
                  stride: int = DEFAULT_STRIDE, sigma: float = DEFAULT_SIGMA,
                  image_id: str | None = None) -> ProbMap:
    """Score every grid patch of an image and stitch the results.

    Bitwise-deterministic for a deterministic scorer. Scorer failures are
    re-raised with the offending patch origin attached.
    """
    grid = build_grid(image.height, image.width, patch_size, stride)
    kernel = gaussian_kernel(patch_size, sigma)
    scored = []
    for origin in grid.origins:
        patch = extract_patch(image, origin, patch_size)
        try:
            probs = scorer.score(patch, image_id=image_id, origin=origin)
        except ScorerError as err:
            err.origin = origin
            err.image_id = image_id
            raise
        if probs.height != patch_size or probs.width != patch_size:
            raise ShapeMismatch(
                f"scorer returned {probs.height}x{probs.width} for patch size {patch_size}"
            )
        scored.append((origin, probs))
    return stitch(scored, grid, kernel, image.height, image.width)


def coverage_count(grid: PatchGrid, height: int, width: int) -> np.ndarray:
    """Number of grid patches covering each pixel (test/inspection helper)."""
    cover = np.zeros((height, width), dtype=np.int32)
    for r, c in grid.origins:
        cover[r:r + grid.patch_size, c:c + grid.patch_size] += 1
    return cover
