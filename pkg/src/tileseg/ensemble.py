"""Two-model-ensemble schemes and per-fold evaluation.

Hard voting takes the per-pixel majority over exactly three binary masks
(even counts make "majority" ambiguous, and the method only ever votes over
three fold models). Probability averaging accepts any number of maps and is
thresholded downstream.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInput, IdSetMismatch, ShapeMismatch, WrongModelCount
from .metrics import MetricReport, mean_report, report_for
from .raster import BinaryMask, ProbMap


def hard_vote(masks: list[BinaryMask]) -> BinaryMask:
    """Per-pixel majority over three masks: output 1 iff at least two vote 1."""
    if len(masks) != 3:
        raise WrongModelCount(f"hard voting is defined over 3 masks, got {len(masks)}")
    shape = masks[0].data.shape
    for m in masks[1:]:
        if m.data.shape != shape:
            raise ShapeMismatch(f"mask shapes differ: {shape} vs {m.data.shape}")
    votes = masks[0].data.astype(np.uint8) + masks[1].data + masks[2].data
    return BinaryMask((votes >= 2).astype(np.uint8))


def prob_average(maps: list[ProbMap]) -> ProbMap:
    """Per-pixel arithmetic mean of probability maps."""
    if not maps:
        raise EmptyInput("prob_average requires at least one map")
    shape = maps[0].data.shape
    for m in maps[1:]:
        if m.data.shape != shape:
            raise ShapeMismatch(f"map shapes differ: {shape} vs {m.data.shape}")
    stack = np.stack([m.data for m in maps])
    mean = stack.mean(axis=0, dtype=np.float64)
    return ProbMap(mean.astype(np.float32))


def evaluate_fold(predictions: dict[str, BinaryMask],
                  truths: dict[str, BinaryMask]) -> MetricReport:
    """Per-image metrics averaged into one report; id sets must match exactly."""
    pred_ids = set(predictions)
    truth_ids = set(truths)
    if pred_ids != truth_ids:
        missing = sorted(truth_ids - pred_ids)[:5]
        extra = sorted(pred_ids - truth_ids)[:5]
        raise IdSetMismatch(f"prediction/truth ids differ: missing={missing}, extra={extra}")
    if not predictions:
        raise EmptyInput("no image ids to evaluate")
    reports = [report_for(predictions[i], truths[i]) for i in sorted(predictions)]
    return mean_report(reports)
