"""Exception hierarchy for the pipeline.

Every failure mode that callers are expected to handle has a named class;
built-in FileNotFoundError / OSError are used as-is for plain file I/O.
"""


class PipelineError(Exception):
    """Base class for all tileseg errors."""


# ---- raster / file formats -------------------------------------------------

class UnsupportedFormat(PipelineError):
    """Image file has an unsupported bit depth or channel layout."""


class InvalidMaskValues(PipelineError):
    """Mask file contains values outside {0, 1} / {0, 255}."""


# ---- tiling / stitching ----------------------------------------------------

class PatchLargerThanImage(PipelineError):
    """Requested patch size exceeds an image dimension."""


class OutOfBounds(PipelineError):
    """Patch window does not fit inside the source raster."""


class InvalidSigma(PipelineError):
    """Gaussian kernel sigma must be positive."""


class MissingPatch(PipelineError):
    """A grid origin has no matching probability patch."""


class ShapeMismatch(PipelineError):
    """Two rasters that must share dimensions do not."""


# ---- sampling --------------------------------------------------------------

class EmptyIndex(PipelineError):
    """The weighted patch index holds no entries."""


class DimensionMismatch(PipelineError):
    """Mask dimensions do not match the paired image."""


# ---- losses / metrics ------------------------------------------------------

class InvalidProbability(PipelineError):
    """A probability value lies outside [0, 1]."""


class EpochOutOfRange(PipelineError):
    """Epoch index outside [0, total_epochs)."""


class EmptyInput(PipelineError):
    """An aggregate was asked for zero values."""


# ---- folds / ensembling ----------------------------------------------------

class SingleDomain(PipelineError):
    """Fold planning needs at least two distinct domains."""


class WrongModelCount(PipelineError):
    """Hard voting is defined over exactly three masks."""


class IdSetMismatch(PipelineError):
    """Prediction and truth image-id sets differ."""


# ---- scorers / wire protocol -----------------------------------------------

class ScorerError(PipelineError):
    """Base class for patch-scorer failures.

    Carries the patch origin when raised from inside sliding-window
    inference so a failing patch can be located.
    """

    def __init__(self, message, origin=None, image_id=None):
        super().__init__(message)
        self.origin = origin
        self.image_id = image_id


class UnknownPatch(ScorerError):
    """Oracle scorer has no ground truth for the requested patch."""


class ProtocolError(ScorerError):
    """Malformed wire message (bad magic, version, or length)."""


class ScorerCrashed(ScorerError):
    """External scorer process exited or closed its streams."""


class ScorerTimeout(ScorerError):
    """External scorer did not answer within the configured timeout."""


class ProbabilityOutOfRange(ScorerError):
    """Scorer returned probabilities outside [0, 1]."""
