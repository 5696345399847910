"""tileseg: a tiled segmentation pipeline engine.

Gaussian-blended sliding-window inference, leave-one-domain-out fold
planning, class-balanced patch sampling, augmentation, two-model-ensemble
schemes, and Dice/Jaccard evaluation, built around a pluggable patch
scorer so the segmentation network itself stays out of process.
"""

from ._kernels import BACKEND as stitch_backend
from .raster import BinaryMask, ProbMap, Raster

__version__ = "0.1.0"

__all__ = ["Raster", "BinaryMask", "ProbMap", "stitch_backend", "__version__"]
