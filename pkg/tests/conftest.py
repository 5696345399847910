import numpy as np
import pytest

from tileseg.raster import BinaryMask, ProbMap, Raster


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def random_raster(rng, height=64, width=64):
    return Raster(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def random_mask(rng, height=64, width=64, p=0.5):
    return BinaryMask((rng.random((height, width)) < p).astype(np.uint8))


def random_prob_map(rng, height=64, width=64):
    return ProbMap(rng.random((height, width)).astype(np.float32))


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """3-domain x 2-image synthetic dataset at reduced size, for fast tests.

    Session-scoped and treated as read-only by every consumer.
    """
    from tileseg.synthetic import DomainSpec, SyntheticSpec, generate_dataset

    spec = SyntheticSpec(
        domains=(
            DomainSpec(name="stomach", texture_seed=1, count=2),
            DomainSpec(name="colon", texture_seed=2, count=2),
            DomainSpec(name="pancreas", texture_seed=3, count=2),
        ),
        image_size=(600, 600),
        seed=11,
    )
    root = tmp_path_factory.mktemp("dataset")
    manifest, shapes = generate_dataset(spec, root)
    return manifest, shapes, root
