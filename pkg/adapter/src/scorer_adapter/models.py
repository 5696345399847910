"""Model loading: builtin test models plus dynamic `module:attr` import.

A model is any callable mapping an (H, W, 3) uint8 RGB patch to an (H, W)
tumor-probability array in [0, 1]. Model-specific concerns (normalization,
softmax channel selection, device placement) belong on this side of the
wire so the protocol contract stays "tumor probability in [0, 1]".
"""

from __future__ import annotations

import importlib
import inspect

import numpy as np


def red_channel_model(patch: np.ndarray) -> np.ndarray:
    """Test model: probability = red channel / 255. No learned weights needed."""
    return patch[:, :, 0].astype(np.float32) / np.float32(255.0)


_BUILTINS = {"red-channel": red_channel_model}


def load_model(spec: str, device: str = "cpu"):
    """Resolve a model spec to a callable.

    Builtin names (e.g. "red-channel") load directly. "module:attr" imports
    the attribute; when it is a factory taking a `device` argument it is
    called with the device hint, otherwise it is used as the model itself.
    """
    if spec in _BUILTINS:
        return _BUILTINS[spec]
    module_name, sep, attr = spec.partition(":")
    if not sep:
        raise ValueError(f"unknown model spec {spec!r} (builtins: {sorted(_BUILTINS)})")
    obj = getattr(importlib.import_module(module_name), attr)
    try:
        params = inspect.signature(obj).parameters
    except (TypeError, ValueError):
        params = {}
    if "device" in params:
        return obj(device=device)
    return obj
