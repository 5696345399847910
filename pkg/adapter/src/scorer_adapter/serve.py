"""The request loop: read PSRQ, run the model, write PSRS.

Exit codes: 0 on clean stream close, 3 on a malformed request (nothing is
written back), 4 on a model failure, with a diagnostic on stderr. Model
outputs are validated before transmission; probabilities outside [0, 1]
are an adapter error, never silently clipped or forwarded.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .models import load_model
from .protocol import MalformedRequest, read_request, write_response

EXIT_OK = 0
EXIT_MALFORMED_REQUEST = 3
EXIT_MODEL_ERROR = 4


@dataclass(frozen=True)
class AdapterConfig:
    model: str = "red-channel"
    device: str = "cpu"
    patch_size: int | None = None  # expected request edge; None accepts any


class ModelOutputError(Exception):
    """The model produced something that cannot go on the wire."""


def _validated(probs, height: int, width: int) -> np.ndarray:
    probs = np.asarray(probs)
    if probs.shape != (height, width):
        raise ModelOutputError(
            f"model returned shape {probs.shape} for a {height}x{width} patch"
        )
    probs = probs.astype(np.float32, copy=False)
    if not np.isfinite(probs).all():
        raise ModelOutputError("model returned non-finite probabilities")
    lo, hi = float(probs.min()), float(probs.max())
    if lo < 0.0 or hi > 1.0:
        raise ModelOutputError(f"model probabilities outside [0, 1]: min={lo}, max={hi}")
    return probs


def serve(config: AdapterConfig, stdin=None, stdout=None, stderr=None) -> int:
    """Serve requests until the input stream closes; returns the exit code."""
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    stderr = stderr if stderr is not None else sys.stderr

    try:
        model = load_model(config.model, config.device)
    except Exception as err:
        print(f"scorer-adapter: cannot load model {config.model!r}: {err}", file=stderr)
        return EXIT_MODEL_ERROR

    while True:
        try:
            patch = read_request(stdin)
        except MalformedRequest as err:
            print(f"scorer-adapter: malformed request: {err}", file=stderr)
            return EXIT_MALFORMED_REQUEST
        if patch is None:
            return EXIT_OK
        height, width = patch.shape[:2]
        try:
            if config.patch_size is not None and (height, width) != (config.patch_size,) * 2:
                raise ModelOutputError(
                    f"request is {height}x{width}, adapter expects {config.patch_size}"
                )
            probs = _validated(model(patch), height, width)
        except Exception as err:
            print(f"scorer-adapter: model failure: {err}", file=stderr)
            return EXIT_MODEL_ERROR
        write_response(stdout, probs)
