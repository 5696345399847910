"""Numpy implementation of the stitch accumulation kernels.

This is the fallback backend; tileseg._kernels._stitchx is the compiled
twin. Both must produce bit-identical buffers: every elementwise operation
here (float64 multiply, add, divide, clip, float32 cast) is mirrored
one-for-one in the Cython loop.
"""

import numpy as np


def accumulate_patch(weighted_sum, weight_sum, probs, kernel, row, col):
    """Add one Gaussian-weighted probability patch into the accumulators.

    weighted_sum, weight_sum: float64 (H, W) buffers, updated in place.
    probs: float32 (P, P) patch probabilities.
    kernel: float64 (P, P) blending weights.
    """
    p = probs.shape[0]
    weighted_sum[row:row + p, col:col + p] += kernel * probs
    weight_sum[row:row + p, col:col + p] += kernel


def finalize_stitch(weighted_sum, weight_sum):
    """Divide accumulated sums and clip to [0, 1] as float32."""
    out = weighted_sum / weight_sum
    np.clip(out, 0.0, 1.0, out=out)
    return out.astype(np.float32)
