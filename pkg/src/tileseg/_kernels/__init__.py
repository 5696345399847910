"""Backend selection for the stitch hot loop.

The compiled extension is preferred when present; the numpy fallback is
bit-identical and always available. Set TILESEG_PURE_PYTHON=1 to force
the fallback (used by the benchmark and the backend-equivalence tests).
"""

import os

if os.environ.get("TILESEG_PURE_PYTHON"):
    from ._stitch_np import accumulate_patch, finalize_stitch
    BACKEND = "numpy"
else:
    try:
        from ._stitchx import accumulate_patch, finalize_stitch
        BACKEND = "cython"
    except ImportError:
        from ._stitch_np import accumulate_patch, finalize_stitch
        BACKEND = "numpy"

__all__ = ["accumulate_patch", "finalize_stitch", "BACKEND"]
