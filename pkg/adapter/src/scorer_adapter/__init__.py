"""Reference external-scorer process for the PSRQ/PSRS wire protocol.

Wraps an arbitrary model callable so trained segmentation networks can plug
into the tiling engine from any ecosystem; ships with a red-channel test
model so conformance runs with no deep-learning dependency installed.
"""

from .models import load_model, red_channel_model
from .serve import AdapterConfig, serve

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "serve", "load_model", "red_channel_model", "__version__"]
