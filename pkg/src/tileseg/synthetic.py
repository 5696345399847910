"""Deterministic synthetic datasets with analytic tumor masks.

Stands in for the real challenge data in tests: multi-domain RGB textures
with disk/ellipse "tumor" regions whose masks are exact indicators of the
shape equations, so metric expectations are computable without any learned
model. Defaults mirror the challenge layout (1500x1500 images, three
domains), which exercises the clamped 25-patch grid.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .manifest import DatasetManifest, ManifestEntry, save_manifest, validate_manifest
from .raster import BinaryMask, Raster, save_image, save_mask


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]  # (row, col)
    radius: float

    def contains(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return ((rows - self.center[0]) ** 2 + (cols - self.center[1]) ** 2
                <= self.radius ** 2)


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    axis_row: float
    axis_col: float

    def contains(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return (((rows - self.center[0]) / self.axis_row) ** 2
                + ((cols - self.center[1]) / self.axis_col) ** 2 <= 1.0)


@dataclass(frozen=True)
class DomainSpec:
    name: str
    texture_seed: int
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("domain count must be >= 1")


@dataclass(frozen=True)
class SyntheticSpec:
    domains: tuple[DomainSpec, ...]
    image_size: tuple[int, int] = (1500, 1500)
    # Explicit shapes applied to every image; None draws per-image shapes
    # deterministically from the seed.
    shapes: tuple | None = None
    shape_kinds: tuple[str, ...] = ("disk", "ellipse")
    seed: int = 0
    task_id: str = "synthetic"

    def __post_init__(self):
        if not self.shape_kinds or set(self.shape_kinds) - {"disk", "ellipse"}:
            raise ValueError(f"shape_kinds must be drawn from disk/ellipse, got {self.shape_kinds}")
        if self.shapes is not None:
            h, w = self.image_size
            for s in self.shapes:
                if not _fits(s, h, w):
                    raise ValueError(f"shape {s} does not lie within {h}x{w}")


def _fits(shape, height: int, width: int) -> bool:
    if isinstance(shape, Disk):
        r0, c0, r = shape.center[0], shape.center[1], shape.radius
        return r0 - r >= 0 and r0 + r < height and c0 - r >= 0 and c0 + r < width
    r0, c0 = shape.center
    return (r0 - shape.axis_row >= 0 and r0 + shape.axis_row < height
            and c0 - shape.axis_col >= 0 and c0 + shape.axis_col < width)


# Base channel means per domain index; spaced > 10 intensity levels apart so
# domain-stratified splits are measurably distinct.
_DOMAIN_BASES = [
    (170, 120, 140),
    (120, 150, 180),
    (190, 170, 110),
    (110, 190, 150),
    (150, 110, 190),
]


def _draw_shapes(rng: np.random.Generator, height: int, width: int,
                 kinds: tuple[str, ...]) -> list:
    hi = min(280.0, (min(height, width) - 12) / 2 - 5)
    lo = min(100.0, hi / 2)
    n = int(rng.integers(1, 4))
    shapes = []
    for _ in range(n):
        radius = float(rng.uniform(lo, hi))
        r0 = float(rng.uniform(radius + 5, height - radius - 5))
        c0 = float(rng.uniform(radius + 5, width - radius - 5))
        kind = kinds[int(rng.integers(0, len(kinds)))]
        if kind == "disk":
            shapes.append(Disk(center=(r0, c0), radius=radius))
        else:
            b = float(rng.uniform(radius / 2, radius))
            shapes.append(Ellipse(center=(r0, c0), axis_row=radius, axis_col=b))
    return shapes


def rasterize_mask(shapes, height: int, width: int) -> BinaryMask:
    """Exact indicator of the union of analytic shapes on pixel centers."""
    rows = np.arange(height, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]
    acc = np.zeros((height, width), dtype=bool)
    for s in shapes:
        acc |= s.contains(rows, cols)
    return BinaryMask(acc.astype(np.uint8))


def _render_image(rng: np.random.Generator, base: tuple[int, int, int],
                  mask: BinaryMask) -> Raster:
    h, w = mask.height, mask.width
    noise = rng.integers(-20, 21, size=(h, w, 3), dtype=np.int16)
    img = np.array(base, dtype=np.int16)[None, None, :] + noise
    # darken + purple-shift tumor regions so the image correlates with the mask
    tumor = mask.data.astype(bool)
    img[tumor] += np.array([-35, -45, 10], dtype=np.int16)
    return Raster(np.clip(img, 0, 255).astype(np.uint8))


def generate_dataset(spec: SyntheticSpec, out_dir) -> tuple[DatasetManifest, dict]:
    """Write images, masks, and a manifest; returns (manifest, shapes per id).

    Byte-identical for identical specs: every random draw derives from
    spec.seed. Masks are written as {0, 255} PNGs, exercising the mask
    normalization path on load. A shapes.json sidecar records the analytic
    parameters per image.
    """
    height, width = spec.image_size
    img_dir = os.path.join(out_dir, "images")
    mask_dir = os.path.join(out_dir, "masks")
    os.makedirs(img_dir, exist_ok=True)
    os.makedirs(mask_dir, exist_ok=True)

    entries = []
    shapes_by_id: dict[str, list] = {}
    for d_idx, domain in enumerate(spec.domains):
        base = _DOMAIN_BASES[d_idx % len(_DOMAIN_BASES)]
        for i in range(domain.count):
            image_id = f"{domain.name}_{i:03d}"
            rng = np.random.default_rng([spec.seed, domain.texture_seed, i])
            shapes = list(spec.shapes) if spec.shapes is not None \
                else _draw_shapes(rng, height, width, spec.shape_kinds)
            mask = rasterize_mask(shapes, height, width)
            image = _render_image(rng, base, mask)
            image_path = os.path.join(img_dir, f"{image_id}.png")
            mask_path = os.path.join(mask_dir, f"{image_id}.png")
            save_image(image, image_path)
            save_mask(mask, mask_path)
            entries.append(ManifestEntry(
                image_id=image_id,
                image_path=image_path,
                mask_path=mask_path,
                domain=domain.name,
            ))
            shapes_by_id[image_id] = shapes

    manifest = validate_manifest(spec.task_id, entries)
    # the on-disk manifest uses relative paths so identical specs produce
    # byte-identical datasets wherever they are generated
    relative = DatasetManifest(task_id=spec.task_id, entries=tuple(
        ManifestEntry(
            image_id=e.image_id,
            image_path=os.path.join("images", os.path.basename(e.image_path)),
            mask_path=os.path.join("masks", os.path.basename(e.mask_path)),
            domain=e.domain,
        )
        for e in manifest.entries
    ))
    _write_sidecar(shapes_by_id, os.path.join(out_dir, "shapes.json"))
    save_manifest(relative, os.path.join(out_dir, "manifest.json"))
    return manifest, shapes_by_id


def _write_sidecar(shapes_by_id: dict, path) -> None:
    doc = {}
    for image_id, shapes in shapes_by_id.items():
        doc[image_id] = [
            {"kind": "disk", "center": list(s.center), "radius": s.radius}
            if isinstance(s, Disk)
            else {"kind": "ellipse", "center": list(s.center),
                  "axis_row": s.axis_row, "axis_col": s.axis_col}
            for s in shapes
        ]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
