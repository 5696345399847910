"""Per-patch class-balance weights and the seeded per-epoch sampling plan.

Patches are weighted by their tumor-pixel fraction with a small floor so
background-only patches stay in circulation, then drawn with replacement in
proportion to weight. The default plan draws 17,000 patches per epoch.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyIndex
from .raster import BinaryMask, load_mask, peek_size
from .tiling import build_grid, extract_patch

DEFAULT_SAMPLES_PER_EPOCH = 17000
DEFAULT_WEIGHT_FLOOR = 0.05


@dataclass(frozen=True)
class PatchEntry:
    image_id: str
    origin: tuple[int, int]
    tumor_fraction: float
    weight: float


@dataclass(frozen=True)
class WeightedPatchIndex:
    entries: tuple[PatchEntry, ...]

    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries], dtype=np.float64)


@dataclass(frozen=True)
class EpochPlan:
    """Seeded draw sequence; draws are indices into the source index."""

    seed: int
    draws: tuple[int, ...]


def compute_patch_weight(mask_patch: BinaryMask,
                         weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> float:
    """Sampling weight of one patch: max(tumor_fraction, weight_floor).

    Proportional to the tumor-pixel fraction above the floor, so tumor-heavy
    patches are drawn more often while empty patches remain sampleable.
    """
    return max(mask_patch.tumor_fraction(), weight_floor)


def tumor_fractions_for_grid(mask: BinaryMask, patch_size: int, stride: int) -> list[tuple[tuple[int, int], float]]:
    """Tumor fraction of every grid patch, via a summed-area table."""
    grid = build_grid(mask.height, mask.width, patch_size, stride)
    integral = np.zeros((mask.height + 1, mask.width + 1), dtype=np.int64)
    np.cumsum(np.cumsum(mask.data, axis=0), axis=1, out=integral[1:, 1:])
    area = float(patch_size * patch_size)
    out = []
    for r, c in grid.origins:
        tumor = (integral[r + patch_size, c + patch_size] - integral[r, c + patch_size]
                 - integral[r + patch_size, c] + integral[r, c])
        out.append(((r, c), float(tumor) / area))
    return out


def build_index(manifest_entries, patch_size: int = 512, stride: int = 256,
                weight_floor: float = DEFAULT_WEIGHT_FLOOR) -> WeightedPatchIndex:
    """One weighted entry per (image, grid origin) over the given manifest entries.

    Raises DimensionMismatch when a mask does not match its image size.
    """
    entries: list[PatchEntry] = []
    for me in manifest_entries:
        image_hw = peek_size(me.image_path)
        mask = load_mask(me.mask_path)
        if (mask.height, mask.width) != image_hw:
            raise DimensionMismatch(
                f"{me.image_id}: mask {mask.height}x{mask.width} vs image "
                f"{image_hw[0]}x{image_hw[1]}"
            )
        for origin, fraction in tumor_fractions_for_grid(mask, patch_size, stride):
            entries.append(PatchEntry(
                image_id=me.image_id,
                origin=origin,
                tumor_fraction=fraction,
                weight=max(fraction, weight_floor),
            ))
    return WeightedPatchIndex(entries=tuple(entries))


def build_epoch_plan(index: WeightedPatchIndex,
                     samples_per_epoch: int = DEFAULT_SAMPLES_PER_EPOCH,
                     seed: int = 0) -> EpochPlan:
    """Draw samples_per_epoch entries with replacement, P(i) = w_i / sum(w).

    Identical (index, seed) always produces the identical draw sequence.
    """
    if not index.entries:
        raise EmptyIndex("cannot sample from an empty patch index")
    weights = index.weights()
    probs = weights / weights.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(index.entries), size=samples_per_epoch, replace=True, p=probs)
    return EpochPlan(seed=seed, draws=tuple(int(d) for d in draws))


def write_epoch_plan(plan: EpochPlan, index: WeightedPatchIndex, path) -> None:
    """Serialize a plan as JSON lines: one draw per line, atomically."""
    lines = []
    for i, entry_idx in enumerate(plan.draws):
        e = index.entries[entry_idx]
        lines.append(json.dumps({
            "image_id": e.image_id,
            "origin_row": e.origin[0],
            "origin_col": e.origin[1],
            "draw_index": i,
        }))
    tmp = f"{os.fspath(path)}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def mask_patch_at(mask: BinaryMask, origin: tuple[int, int], patch_size: int) -> BinaryMask:
    """Mask window for a plan draw (training-side convenience)."""
    return extract_patch(mask, origin, patch_size)
