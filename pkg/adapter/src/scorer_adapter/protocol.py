"""Stdio framing for the PSRQ/PSRS patch-scoring protocol.

Implemented against the published byte layout (little-endian):

  request:  "PSRQ" | version u32 | height u32 | width u32 | channels u8
            | height*width*channels raw RGB bytes, row-major
  response: "PSRS" | version u32 | height u32 | width u32
            | height*width float32 tumor probabilities, row-major

Deliberately independent of the engine's own codec; the byte fixtures in
tests pin cross-implementation compatibility.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

REQUEST_MAGIC = b"PSRQ"
RESPONSE_MAGIC = b"PSRS"
WIRE_VERSION = 1

REQUEST_HEADER = struct.Struct("<4sIIIB")
RESPONSE_HEADER = struct.Struct("<4sIII")

MAX_DIMENSION = 1 << 20


class MalformedRequest(Exception):
    """Request bytes do not follow the wire layout."""


def read_exact(stream: BinaryIO, n: int) -> bytes | None:
    """Read exactly n bytes; None on EOF before the first byte."""
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            return None if not buf else buf  # caller distinguishes clean EOF
        buf += chunk
    return buf


def read_request(stream: BinaryIO) -> np.ndarray | None:
    """Read one request; returns the (H, W, C) uint8 patch or None on clean EOF.

    Raises MalformedRequest for bad magic/version/dimensions or a stream
    truncated mid-message.
    """
    header = read_exact(stream, REQUEST_HEADER.size)
    if header is None:
        return None
    if len(header) < REQUEST_HEADER.size:
        raise MalformedRequest("truncated request header")
    magic, version, height, width, channels = REQUEST_HEADER.unpack(header)
    if magic != REQUEST_MAGIC:
        raise MalformedRequest(f"bad magic {magic!r}")
    if version != WIRE_VERSION:
        raise MalformedRequest(f"unsupported version {version}")
    if not (1 <= height <= MAX_DIMENSION and 1 <= width <= MAX_DIMENSION):
        raise MalformedRequest(f"implausible dimensions {height}x{width}")
    if channels != 3:
        raise MalformedRequest(f"expected 3 channels, got {channels}")
    payload = read_exact(stream, height * width * channels)
    if payload is None or len(payload) < height * width * channels:
        raise MalformedRequest("truncated request payload")
    patch = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return patch.copy()


def write_response(stream: BinaryIO, probs: np.ndarray) -> None:
    """Write one response frame for an (H, W) float32 probability array."""
    height, width = probs.shape
    stream.write(RESPONSE_HEADER.pack(RESPONSE_MAGIC, WIRE_VERSION, height, width))
    stream.write(probs.astype("<f4", copy=False).tobytes())
    stream.flush()
