"""Training-side loss formulas and the cosine warm-up learning-rate schedule.

Gradient computation and the optimizer live with the external scorer; these
functions only define the arithmetic so configurations are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EpochOutOfRange, InvalidProbability, ShapeMismatch
from .raster import BinaryMask

_LOG_FLOOR = 1e-12  # guards log(0) without affecting well-formed inputs


@dataclass(frozen=True)
class LossConfig:
    label_smoothing: float = 0.1
    aux_head_weight: float = 0.4
    dice_epsilon: float = 1e-6
    # Optional top-k hard-pixel CE ("maximal restriction" is undefined in the
    # source method; this is a flagged interpretation, default off).
    hard_pixel_top_k: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ValueError("label_smoothing must be in [0, 1)")
        if self.aux_head_weight < 0:
            raise ValueError("aux_head_weight must be >= 0")
        if self.dice_epsilon <= 0:
            raise ValueError("dice_epsilon must be > 0")
        if self.hard_pixel_top_k is not None and not 0.0 < self.hard_pixel_top_k <= 1.0:
            raise ValueError("hard_pixel_top_k must be in (0, 1]")


@dataclass(frozen=True)
class LrScheduleConfig:
    total_epochs: int = 40
    warmup_epochs: int = 3
    lr_max: float = 1e-3
    lr_min: float = 0.0

    def __post_init__(self):
        if self.warmup_epochs >= self.total_epochs:
            raise ValueError("warmup_epochs must be < total_epochs")
        if self.warmup_epochs < 0 or self.total_epochs < 1:
            raise ValueError("epoch counts must be non-negative / positive")
        if self.lr_max <= 0 or self.lr_min < 0 or self.lr_min > self.lr_max:
            raise ValueError("require 0 <= lr_min <= lr_max and lr_max > 0")


def dice_loss(probs: np.ndarray, target: BinaryMask, epsilon: float = 1e-6) -> float:
    """1 - (2 sum(p*t) + eps) / (sum(p) + sum(t) + eps)."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != target.data.shape:
        raise ShapeMismatch(f"probs {probs.shape} vs target {target.data.shape}")
    t = target.data.astype(np.float64)
    intersection = float((probs * t).sum())
    return 1.0 - (2.0 * intersection + epsilon) / (float(probs.sum()) + float(t.sum()) + epsilon)


def ce_loss_smoothed(probs: np.ndarray, target: BinaryMask, epsilon: float = 0.1,
                     hard_pixel_top_k: float | None = None) -> float:
    """Label-smoothed cross entropy over the two classes, averaged over pixels.

    probs has shape (H, W, 2), channel order (background, tumor), rows
    summing to 1. The smoothed target gives the true class 1 - eps + eps/2
    and the other class eps/2. With hard_pixel_top_k set, only the largest
    k-fraction of per-pixel losses is averaged.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 3 or probs.shape[2] != 2:
        raise ShapeMismatch(f"probs must be (H, W, 2), got {probs.shape}")
    if probs.shape[:2] != target.data.shape:
        raise ShapeMismatch(f"probs {probs.shape[:2]} vs target {target.data.shape}")
    if probs.min() < 0.0 or probs.max() > 1.0:
        raise InvalidProbability("class probabilities must lie in [0, 1]")
    if not np.allclose(probs.sum(axis=2), 1.0, atol=1e-6):
        raise InvalidProbability("class probabilities must sum to 1 per pixel")

    t = target.data.astype(np.int64)
    q_true = 1.0 - epsilon + epsilon / 2.0
    q_other = epsilon / 2.0
    log_p = np.log(np.maximum(probs, _LOG_FLOOR))
    log_true = np.take_along_axis(log_p, t[:, :, None], axis=2)[:, :, 0]
    log_other = np.take_along_axis(log_p, (1 - t)[:, :, None], axis=2)[:, :, 0]
    pixel_loss = -(q_true * log_true + q_other * log_other)

    if hard_pixel_top_k is not None:
        keep = max(1, int(round(hard_pixel_top_k * pixel_loss.size)))
        flat = np.sort(pixel_loss, axis=None)[::-1][:keep]
        return float(flat.mean())
    return float(pixel_loss.mean())


def total_loss(main_dice: float, main_ce: float, aux_dice: float, aux_ce: float,
               aux_weight: float = 0.4) -> float:
    """Dual-head combination: (main dice + main ce) + w * (aux dice + aux ce)."""
    for name, v in (("main_dice", main_dice), ("main_ce", main_ce),
                    ("aux_dice", aux_dice), ("aux_ce", aux_ce)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    return (main_dice + main_ce) + aux_weight * (aux_dice + aux_ce)


def lr_at(epoch: int, config: LrScheduleConfig) -> float:
    """Learning rate for a 0-indexed epoch under linear warm-up + cosine decay.

    Warm-up (epoch < W): lr_max * (epoch + 1) / W. Cosine phase: anneals from
    lr_max at epoch W to exactly lr_min at the final epoch.
    """
    T, W = config.total_epochs, config.warmup_epochs
    if not 0 <= epoch < T:
        raise EpochOutOfRange(f"epoch {epoch} outside [0, {T})")
    if epoch < W:
        return config.lr_max * (epoch + 1) / W
    span = T - 1 - W
    if epoch == W:  # cos(0) = 1; return lr_max without floating re-association
        return config.lr_max
    if epoch == T - 1:  # cos(pi) = -1
        return config.lr_min
    phase = math.pi * (epoch - W) / span
    return config.lr_min + 0.5 * (config.lr_max - config.lr_min) * (1.0 + math.cos(phase))
