import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tileseg.errors import EmptyInput, ShapeMismatch
from tileseg.metrics import (
    MetricReport,
    aggregate_folds,
    challenge_score,
    dsc,
    jsc,
    mean_class_dice,
    mean_report,
    pooled_report,
    report_for,
)
from tileseg.raster import BinaryMask

from conftest import random_mask

mask_arrays = hnp.arrays(np.uint8, (12, 12), elements=st.integers(0, 1))


def _mask(arr) -> BinaryMask:
    return BinaryMask(np.asarray(arr, dtype=np.uint8))


def _hand_counted_pair():
    # |P| = 4, |T| = 4, |P n T| = 2 on a 4x4 board
    pred = np.zeros((4, 4), dtype=np.uint8)
    truth = np.zeros((4, 4), dtype=np.uint8)
    pred[0, 0] = pred[0, 1] = pred[1, 0] = pred[1, 1] = 1
    truth[0, 0] = truth[0, 1] = truth[2, 2] = truth[2, 3] = 1
    return _mask(pred), _mask(truth)


def test_identical_masks_score_one(rng):
    m = random_mask(rng, 16, 16)
    assert dsc(m, m) == 1.0
    assert jsc(m, m) == 1.0
    assert challenge_score(m, m) == 1.0
    assert mean_class_dice(m, m) == 1.0


def test_hand_counted_case():
    pred, truth = _hand_counted_pair()
    assert dsc(pred, truth) == pytest.approx(0.5)
    assert jsc(pred, truth) == pytest.approx(1 / 3)
    assert challenge_score(pred, truth) == pytest.approx(0.5 * 0.5 + 0.5 / 3)
    assert challenge_score(pred, truth) == pytest.approx(0.4167, abs=5e-5)


def test_both_empty_convention():
    empty = _mask(np.zeros((8, 8)))
    assert dsc(empty, empty) == 1.0
    assert jsc(empty, empty) == 1.0


def test_disjoint_masks():
    a = np.zeros((4, 4), dtype=np.uint8)
    b = np.zeros((4, 4), dtype=np.uint8)
    a[0, :] = 1
    b[1, :] = 1
    assert dsc(_mask(a), _mask(b)) == 0.0
    assert jsc(_mask(a), _mask(b)) == 0.0
    assert challenge_score(_mask(a), _mask(b)) == 0.0


def test_mean_class_dice_all_background_pred():
    # pred all background, truth half tumor: (0.6667 + 0) / 2
    pred = _mask(np.zeros((4, 4)))
    truth_arr = np.zeros((4, 4), dtype=np.uint8)
    truth_arr[:2, :] = 1
    truth = _mask(truth_arr)
    assert mean_class_dice(pred, truth) == pytest.approx((2 * 0.5 / 1.5 + 0.0) / 2)


def test_mean_class_dice_complement_pred():
    arr = np.zeros((4, 4), dtype=np.uint8)
    arr[:2, :] = 1
    truth = _mask(arr)
    pred = _mask(1 - arr)
    assert mean_class_dice(pred, truth) == 0.0


@settings(max_examples=200, deadline=None)
@given(mask_arrays, mask_arrays)
def test_jaccard_dice_identity_and_order(pred_arr, truth_arr):
    pred, truth = _mask(pred_arr), _mask(truth_arr)
    d = dsc(pred, truth)
    j = jsc(pred, truth)
    assert j <= d + 1e-15
    assert j == pytest.approx(d / (2 - d), abs=1e-9)
    assert challenge_score(pred, truth) == pytest.approx((d + j) / 2, abs=1e-12)
    # symmetry
    assert dsc(truth, pred) == d
    assert jsc(truth, pred) == j


def test_jsc_strictly_below_dsc_unless_extreme(rng):
    for _ in range(200):
        pred = random_mask(rng, 10, 10, p=float(rng.uniform(0.1, 0.9)))
        truth = random_mask(rng, 10, 10, p=float(rng.uniform(0.1, 0.9)))
        d, j = dsc(pred, truth), jsc(pred, truth)
        if d not in (0.0, 1.0):
            assert j < d


def test_shape_mismatch(rng):
    with pytest.raises(ShapeMismatch):
        dsc(random_mask(rng, 4, 4), random_mask(rng, 5, 5))


def test_report_consistency(rng):
    pred, truth = random_mask(rng, 20, 20), random_mask(rng, 20, 20)
    r = report_for(pred, truth)
    assert r.challenge_score == pytest.approx((r.dsc + r.jsc) / 2, abs=1e-12)
    assert r.mean_class_dice == pytest.approx(
        (r.per_class_dice["background"] + r.per_class_dice["tumor"]) / 2, abs=1e-12
    )
    assert r.per_class_dice["tumor"] == r.dsc
    round_tripped = MetricReport.from_dict(r.to_dict())
    assert round_tripped == r


def test_mean_report_averages_fieldwise(rng):
    reports = [report_for(random_mask(rng, 8, 8), random_mask(rng, 8, 8))
               for _ in range(5)]
    mean = mean_report(reports)
    assert mean.dsc == pytest.approx(sum(r.dsc for r in reports) / 5)
    assert mean.jsc == pytest.approx(sum(r.jsc for r in reports) / 5)


def test_pooled_report_matches_concatenation(rng):
    pairs = [(random_mask(rng, 8, 8), random_mask(rng, 8, 8)) for _ in range(4)]
    pooled = pooled_report(pairs)
    pred_cat = _mask(np.concatenate([p.data for p, _ in pairs], axis=0))
    truth_cat = _mask(np.concatenate([t.data for _, t in pairs], axis=0))
    assert pooled.dsc == pytest.approx(dsc(pred_cat, truth_cat), abs=1e-12)
    assert pooled.jsc == pytest.approx(jsc(pred_cat, truth_cat), abs=1e-12)
    assert pooled.mean_class_dice == pytest.approx(
        mean_class_dice(pred_cat, truth_cat), abs=1e-12
    )


def test_aggregate_published_fold_means():
    mean1, _ = aggregate_folds([0.8200, 0.8266, 0.9137])
    assert mean1 == pytest.approx(0.8534, abs=5e-5)
    mean2, _ = aggregate_folds([0.8960, 0.8979, 0.9893])
    assert mean2 == pytest.approx(0.9277, abs=5e-5)


def test_aggregate_sample_std():
    mean, std = aggregate_folds([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert std == pytest.approx(1.0)  # sample (n-1) convention


def test_aggregate_single_value():
    assert aggregate_folds([0.77]) == (0.77, 0.0)


def test_aggregate_empty_rejected():
    with pytest.raises(EmptyInput):
        aggregate_folds([])
