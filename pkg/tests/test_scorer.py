import os
import sys

import numpy as np
import pytest

from tileseg.errors import (
    InvalidProbability,
    ProbabilityOutOfRange,
    ProtocolError,
    ScorerCrashed,
    ScorerTimeout,
    UnknownPatch,
)
from tileseg.raster import BinaryMask
from tileseg.scorer import constant_scorer, external_scorer, oracle_scorer
from tileseg.tiling import extract_patch, threshold

from conftest import random_mask, random_raster

PEER = os.path.join(os.path.dirname(__file__), "wire_peer.py")


def _peer_cmd(*args):
    return [sys.executable, PEER, *args]


# ---- built-in scorers ---------------------------------------------------------

def test_constant_scorer(rng):
    patch = random_raster(rng, 32, 32)
    out = constant_scorer(0.3).score(patch)
    assert out.data.shape == (32, 32)
    assert (out.data == np.float32(0.3)).all()
    assert (constant_scorer(0.0).score(patch).data == 0).all()


def test_constant_scorer_validates_probability():
    with pytest.raises(InvalidProbability):
        constant_scorer(1.2)
    with pytest.raises(InvalidProbability):
        constant_scorer(-0.1)


def _truth_scorer(rng, amplitude, seed=0, shape=(64, 64)):
    truth = random_mask(rng, *shape)

    def lookup(image_id, origin):
        if origin != (0, 0):
            raise UnknownPatch(f"no patch at {origin}")
        return truth

    return truth, oracle_scorer(lookup, noise_amplitude=amplitude, seed=seed)


def test_oracle_zero_amplitude_exact(rng):
    truth, scorer = _truth_scorer(rng, 0.0)
    out = scorer.score(random_raster(rng, 64, 64), image_id="a", origin=(0, 0))
    assert set(np.unique(out.data)) <= {0.0, 1.0}
    assert np.array_equal(out.data.astype(np.uint8), truth.data)


def test_oracle_noise_cannot_cross_threshold(rng):
    truth, scorer = _truth_scorer(rng, 0.4, seed=9)
    out = scorer.score(random_raster(rng, 64, 64), image_id="a", origin=(0, 0))
    assert not np.array_equal(out.data.astype(np.uint8), truth.data)  # noise present
    assert np.array_equal(threshold(out).data, truth.data)


def test_oracle_noise_is_origin_derived(rng):
    # same (image_id, origin) must give identical noise regardless of call order
    truth = random_mask(rng, 600, 600)

    def lookup(image_id, origin):
        return extract_patch(truth, origin, 512)

    scorer = oracle_scorer(lookup, noise_amplitude=0.3, seed=4)
    patch = random_raster(rng, 512, 512)
    a = scorer.score(patch, image_id="x", origin=(0, 88))
    scorer.score(patch, image_id="x", origin=(88, 0))  # interleaved call
    b = scorer.score(patch, image_id="x", origin=(0, 88))
    assert np.array_equal(a.data, b.data)


def test_oracle_unknown_patch(rng):
    _, scorer = _truth_scorer(rng, 0.0)
    with pytest.raises(UnknownPatch):
        scorer.score(random_raster(rng, 64, 64), image_id="a", origin=(512, 512))


def test_oracle_rejects_bad_amplitude(rng):
    truth = random_mask(rng, 8, 8)
    with pytest.raises(ValueError):
        oracle_scorer(lambda i, o: truth, noise_amplitude=0.5)


# ---- external scorer ------------------------------------------------------------

def test_external_round_trip(rng):
    patch = random_raster(rng, 48, 40)
    with external_scorer(_peer_cmd("constant", "0.5"), timeout=20) as scorer:
        out = scorer.score(patch)
        assert out.data.shape == (48, 40)
        assert (out.data == np.float32(0.5)).all()
        # the subprocess is reused across calls
        first_pid = scorer._proc.pid
        scorer.score(patch)
        assert scorer._proc.pid == first_pid


def test_external_dimension_mismatch(rng):
    patch = random_raster(rng, 48, 40)
    with external_scorer(_peer_cmd("mismatched"), timeout=20) as scorer:
        with pytest.raises(ProtocolError):
            scorer.score(patch)


def test_external_timeout(rng):
    patch = random_raster(rng, 16, 16)
    with external_scorer(_peer_cmd("hang"), timeout=0.8) as scorer:
        with pytest.raises(ScorerTimeout):
            scorer.score(patch)


def test_external_garbage_magic(rng):
    patch = random_raster(rng, 16, 16)
    with external_scorer(_peer_cmd("garbage"), timeout=20) as scorer:
        with pytest.raises(ProtocolError):
            scorer.score(patch)


def test_external_out_of_range(rng):
    patch = random_raster(rng, 16, 16)
    with external_scorer(_peer_cmd("range"), timeout=20) as scorer:
        with pytest.raises(ProbabilityOutOfRange):
            scorer.score(patch)


def test_external_dead_process(rng):
    patch = random_raster(rng, 16, 16)
    with external_scorer(_peer_cmd("die"), timeout=20) as scorer:
        with pytest.raises(ScorerCrashed):
            scorer.score(patch)


def test_external_unlaunchable():
    with external_scorer(["/nonexistent/binary"], timeout=5) as scorer:
        with pytest.raises(ScorerCrashed):
            scorer.score(random_raster(np.random.default_rng(0), 8, 8))


def test_run_inference_surfaces_crash_with_origin(rng):
    from tileseg.errors import ScorerError
    from tileseg.tiling import run_inference

    image = random_raster(rng, 600, 600)
    with external_scorer(_peer_cmd("die"), timeout=20) as scorer:
        with pytest.raises(ScorerError) as exc:
            run_inference(image, scorer, 512, 256, 64.0, image_id="img1")
    assert exc.value.origin == (0, 0)
