"""Dice/Jaccard evaluation, the combined challenge score, and fold aggregation.

Both-empty mask pairs score 1.0 by convention: correctly predicting "no
tumor" is a perfect answer, matching common challenge evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, ShapeMismatch
from .raster import BinaryMask


@dataclass(frozen=True)
class MetricReport:
    dsc: float
    jsc: float
    challenge_score: float
    per_class_dice: dict[str, float]
    mean_class_dice: float

    def to_dict(self) -> dict:
        return {
            "dsc": self.dsc,
            "jsc": self.jsc,
            "challenge_score": self.challenge_score,
            "per_class_dice": {
                "background": self.per_class_dice["background"],
                "tumor": self.per_class_dice["tumor"],
            },
            "mean_class_dice": self.mean_class_dice,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            dsc=d["dsc"],
            jsc=d["jsc"],
            challenge_score=d["challenge_score"],
            per_class_dice=dict(d["per_class_dice"]),
            mean_class_dice=d["mean_class_dice"],
        )


def _check_shapes(pred: BinaryMask, truth: BinaryMask) -> None:
    if pred.data.shape != truth.data.shape:
        raise ShapeMismatch(f"pred {pred.data.shape} vs truth {truth.data.shape}")


def _counts(pred: BinaryMask, truth: BinaryMask) -> tuple[int, int, int]:
    p = int(pred.data.sum())
    t = int(truth.data.sum())
    intersection = int((pred.data & truth.data).sum())
    return p, t, intersection


def dsc(pred: BinaryMask, truth: BinaryMask) -> float:
    """Dice similarity: 2|P n T| / (|P| + |T|); both empty -> 1.0."""
    _check_shapes(pred, truth)
    p, t, i = _counts(pred, truth)
    if p + t == 0:
        return 1.0
    return 2.0 * i / (p + t)


def jsc(pred: BinaryMask, truth: BinaryMask) -> float:
    """Jaccard similarity: |P n T| / |P u T|; both empty -> 1.0."""
    _check_shapes(pred, truth)
    p, t, i = _counts(pred, truth)
    union = p + t - i
    if union == 0:
        return 1.0
    return i / union


def mean_class_dice(pred: BinaryMask, truth: BinaryMask) -> float:
    """Average of the tumor-class Dice and the background-class Dice."""
    return (dsc(pred, truth) + _background_dice(pred, truth)) / 2.0


def _background_dice(pred: BinaryMask, truth: BinaryMask) -> float:
    p_bg = BinaryMask((1 - pred.data).astype(np.uint8))
    t_bg = BinaryMask((1 - truth.data).astype(np.uint8))
    return dsc(p_bg, t_bg)


def challenge_score(pred: BinaryMask, truth: BinaryMask) -> float:
    """The challenge ranking metric: 0.5 * DSC + 0.5 * JSC."""
    return 0.5 * dsc(pred, truth) + 0.5 * jsc(pred, truth)


def report_for(pred: BinaryMask, truth: BinaryMask) -> MetricReport:
    """All metrics for one prediction/truth pair."""
    d = dsc(pred, truth)
    j = jsc(pred, truth)
    bg = _background_dice(pred, truth)
    return MetricReport(
        dsc=d,
        jsc=j,
        challenge_score=0.5 * d + 0.5 * j,
        per_class_dice={"background": bg, "tumor": d},
        mean_class_dice=(d + bg) / 2.0,
    )


def mean_report(reports: list[MetricReport]) -> MetricReport:
    """Arithmetic mean of per-image reports (field-wise)."""
    if not reports:
        raise EmptyInput("cannot average zero reports")
    n = len(reports)
    return MetricReport(
        dsc=sum(r.dsc for r in reports) / n,
        jsc=sum(r.jsc for r in reports) / n,
        challenge_score=sum(r.challenge_score for r in reports) / n,
        per_class_dice={
            "background": sum(r.per_class_dice["background"] for r in reports) / n,
            "tumor": sum(r.per_class_dice["tumor"] for r in reports) / n,
        },
        mean_class_dice=sum(r.mean_class_dice for r in reports) / n,
    )


def pooled_report(pairs: list[tuple[BinaryMask, BinaryMask]]) -> MetricReport:
    """Metrics over the pixel pool of all images, not the per-image mean."""
    if not pairs:
        raise EmptyInput("cannot pool zero mask pairs")
    p = t = i = total = 0
    for pred, truth in pairs:
        _check_shapes(pred, truth)
        cp, ct, ci = _counts(pred, truth)
        p, t, i = p + cp, t + ct, i + ci
        total += pred.data.size
    d = 1.0 if p + t == 0 else 2.0 * i / (p + t)
    union = p + t - i
    j = 1.0 if union == 0 else i / union
    pb, tb = total - p, total - t
    ib = total - p - t + i  # pixels background in both
    bg = 1.0 if pb + tb == 0 else 2.0 * ib / (pb + tb)
    return MetricReport(
        dsc=d,
        jsc=j,
        challenge_score=0.5 * d + 0.5 * j,
        per_class_dice={"background": bg, "tumor": d},
        mean_class_dice=(d + bg) / 2.0,
    )


def aggregate_folds(values: list[float]) -> tuple[float, float]:
    """(mean, sample standard deviation) over fold scores; std is 0 for n = 1."""
    if not values:
        raise EmptyInput("aggregate_folds requires at least one value")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)
