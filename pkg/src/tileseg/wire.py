"""The PSRQ/PSRS patch-scoring wire protocol (bit-exact, little-endian).

Request:  magic "PSRQ" | version u32 | height u32 | width u32 | channels u8
          | height*width*channels raw image bytes, row-major,
          channel-interleaved.
Response: magic "PSRS" | version u32 | height u32 | width u32
          | height*width IEEE-754 float32 tumor probabilities, row-major.

The response probability range is validated on receipt; violations are hard
errors, never clamps, so a broken model adapter cannot hide.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ProbabilityOutOfRange, ProtocolError
from .raster import ProbMap, Raster

REQUEST_MAGIC = b"PSRQ"
RESPONSE_MAGIC = b"PSRS"
WIRE_VERSION = 1

_REQUEST_HEADER = struct.Struct("<4sIIIB")  # magic, version, height, width, channels
_RESPONSE_HEADER = struct.Struct("<4sIII")  # magic, version, height, width

# Upper bound on a sane patch edge; anything larger is treated as stream
# corruption rather than attempting a giant allocation.
MAX_DIMENSION = 1 << 20


def encode_request(patch: Raster) -> bytes:
    header = _REQUEST_HEADER.pack(REQUEST_MAGIC, WIRE_VERSION,
                                  patch.height, patch.width, patch.channels)
    return header + patch.data.tobytes()


def decode_request(buf: bytes) -> Raster:
    if len(buf) < _REQUEST_HEADER.size:
        raise ProtocolError(f"request too short: {len(buf)} bytes")
    magic, version, height, width, channels = _REQUEST_HEADER.unpack_from(buf)
    _check_header(REQUEST_MAGIC, magic, version, height, width)
    if channels != 3:
        raise ProtocolError(f"expected 3 channels, got {channels}")
    expected = _REQUEST_HEADER.size + height * width * channels
    if len(buf) != expected:
        raise ProtocolError(f"request payload length {len(buf)} != expected {expected}")
    data = np.frombuffer(buf, dtype=np.uint8, offset=_REQUEST_HEADER.size)
    return Raster(data.reshape(height, width, channels).copy())


def encode_response(pmap: ProbMap) -> bytes:
    header = _RESPONSE_HEADER.pack(RESPONSE_MAGIC, WIRE_VERSION, pmap.height, pmap.width)
    return header + pmap.data.astype("<f4", copy=False).tobytes()


def decode_response(buf: bytes) -> ProbMap:
    if len(buf) < _RESPONSE_HEADER.size:
        raise ProtocolError(f"response too short: {len(buf)} bytes")
    magic, version, height, width = _RESPONSE_HEADER.unpack_from(buf)
    _check_header(RESPONSE_MAGIC, magic, version, height, width)
    expected = _RESPONSE_HEADER.size + height * width * 4
    if len(buf) != expected:
        raise ProtocolError(f"response payload length {len(buf)} != expected {expected}")
    data = np.frombuffer(buf, dtype="<f4", offset=_RESPONSE_HEADER.size)
    data = data.reshape(height, width)
    if not np.isfinite(data).all():
        raise ProbabilityOutOfRange("response contains non-finite probabilities")
    lo, hi = float(data.min()), float(data.max())
    if lo < 0.0 or hi > 1.0:
        raise ProbabilityOutOfRange(f"response probabilities outside [0, 1]: min={lo}, max={hi}")
    return ProbMap(data.copy())


def request_frame_size(header: bytes) -> int:
    """Total request size in bytes given its fixed-size header."""
    magic, version, height, width, channels = _REQUEST_HEADER.unpack(header)
    _check_header(REQUEST_MAGIC, magic, version, height, width)
    return _REQUEST_HEADER.size + height * width * channels


def response_frame_size(header: bytes) -> int:
    """Total response size in bytes given its fixed-size header."""
    magic, version, height, width = _RESPONSE_HEADER.unpack(header)
    _check_header(RESPONSE_MAGIC, magic, version, height, width)
    return _RESPONSE_HEADER.size + height * width * 4


REQUEST_HEADER_SIZE = _REQUEST_HEADER.size
RESPONSE_HEADER_SIZE = _RESPONSE_HEADER.size


def _check_header(expected_magic: bytes, magic: bytes, version: int,
                  height: int, width: int) -> None:
    if magic != expected_magic:
        raise ProtocolError(f"bad magic {magic!r}, expected {expected_magic!r}")
    if version != WIRE_VERSION:
        raise ProtocolError(f"unsupported wire version {version}")
    if not (1 <= height <= MAX_DIMENSION and 1 <= width <= MAX_DIMENSION):
        raise ProtocolError(f"implausible dimensions {height}x{width}")
