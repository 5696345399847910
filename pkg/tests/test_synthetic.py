import hashlib
import math
from pathlib import Path

import numpy as np

from tileseg.raster import load_image, load_mask
from tileseg.synthetic import (
    Disk,
    DomainSpec,
    Ellipse,
    SyntheticSpec,
    generate_dataset,
    rasterize_mask,
)


def _spec(out_size=(520, 520), counts=(4, 4, 4), seed=5, shapes=None):
    return SyntheticSpec(
        domains=tuple(
            DomainSpec(name=n, texture_seed=i + 1, count=c)
            for i, (n, c) in enumerate(zip(("stomach", "colon", "pancreas"), counts))
        ),
        image_size=out_size,
        seed=seed,
        shapes=shapes,
    )


def test_dataset_counts_and_manifest(tmp_path):
    manifest, shapes = generate_dataset(_spec(), tmp_path)
    assert len(manifest.entries) == 12
    assert sorted({e.domain for e in manifest.entries}) == ["colon", "pancreas", "stomach"]
    assert len(shapes) == 12
    assert (tmp_path / "manifest.json").exists()
    assert (tmp_path / "shapes.json").exists()
    for e in manifest.entries:
        assert Path(e.image_path).exists()
        assert Path(e.mask_path).exists()


def test_disk_mask_area_close_to_analytic(tmp_path):
    disk = Disk(center=(260.0, 260.0), radius=200.0)
    mask = rasterize_mask([disk], 520, 520)
    count = int(mask.data.sum())
    analytic = math.pi * 200.0 ** 2
    assert abs(count - analytic) / analytic < 0.01


def test_masks_are_exact_shape_indicators(tmp_path):
    manifest, shapes = generate_dataset(_spec(), tmp_path)
    for entry in manifest.entries[:4]:
        mask = load_mask(entry.mask_path)
        rows = np.arange(mask.height, dtype=np.float64)[:, None]
        cols = np.arange(mask.width, dtype=np.float64)[None, :]
        expected = np.zeros(mask.data.shape, dtype=bool)
        for s in shapes[entry.image_id]:
            if isinstance(s, Disk):
                expected |= ((rows - s.center[0]) ** 2 + (cols - s.center[1]) ** 2
                             <= s.radius ** 2)
            else:
                expected |= (((rows - s.center[0]) / s.axis_row) ** 2
                             + ((cols - s.center[1]) / s.axis_col) ** 2 <= 1.0)
        assert np.array_equal(mask.data.astype(bool), expected)


def test_same_seed_byte_identical(tmp_path):
    generate_dataset(_spec(), tmp_path / "a")
    generate_dataset(_spec(), tmp_path / "b")

    def digest(root):
        hashes = {}
        for p in sorted(Path(root).rglob("*")):
            if p.is_file():
                hashes[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
        return hashes

    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_different_seed_differs(tmp_path):
    m1, _ = generate_dataset(_spec(seed=5), tmp_path / "a")
    m2, _ = generate_dataset(_spec(seed=6), tmp_path / "b")
    img1 = load_image(m1.entries[0].image_path)
    img2 = load_image(m2.entries[0].image_path)
    assert not np.array_equal(img1.data, img2.data)


def test_domain_textures_separated(tmp_path):
    manifest, _ = generate_dataset(_spec(), tmp_path)
    means = {}
    for e in manifest.entries:
        img = load_image(e.image_path)
        means.setdefault(e.domain, []).append(img.data.mean(axis=(0, 1)))
    domain_means = {d: np.mean(v, axis=0) for d, v in means.items()}
    domains = list(domain_means)
    for i, a in enumerate(domains):
        for b in domains[i + 1:]:
            assert np.abs(domain_means[a] - domain_means[b]).max() >= 10


def test_explicit_shapes_apply_to_every_image(tmp_path):
    shapes = (Disk(center=(150.0, 150.0), radius=80.0),
              Ellipse(center=(350.0, 350.0), axis_row=90.0, axis_col=60.0))
    manifest, by_id = generate_dataset(_spec(shapes=shapes), tmp_path)
    assert all(tuple(v) == shapes for v in by_id.values())
    masks = [load_mask(e.mask_path).data for e in manifest.entries]
    assert all(np.array_equal(m, masks[0]) for m in masks)


def test_out_of_bounds_shape_rejected():
    import pytest

    with pytest.raises(ValueError):
        _spec(shapes=(Disk(center=(10.0, 10.0), radius=80.0),))
