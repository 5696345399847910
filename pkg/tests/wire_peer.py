"""Mock scorer peer for external-scorer tests.

Speaks PSRQ/PSRS on stdio with a behavior chosen by argv[1]:
  constant P   respond uniform probability P
  mismatched   respond a 10x10 frame regardless of the request size
  hang         never respond
  garbage      respond with a bad magic
  range        respond probabilities outside [0, 1]
  die          exit immediately without responding
"""

import struct
import sys
import time

import numpy as np

REQ = struct.Struct("<4sIIIB")
RESP = struct.Struct("<4sIII")


def read_exact(n):
    buf = b""
    while len(buf) < n:
        chunk = sys.stdin.buffer.read(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def respond(h, w, value):
    payload = np.full(h * w, value, dtype="<f4").tobytes()
    sys.stdout.buffer.write(RESP.pack(b"PSRS", 1, h, w) + payload)
    sys.stdout.buffer.flush()


def main():
    mode = sys.argv[1]
    param = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5
    if mode == "die":
        return 7
    while True:
        header = read_exact(REQ.size)
        if header is None:
            return 0
        magic, version, h, w, c = REQ.unpack(header)
        if read_exact(h * w * c) is None:
            return 1
        if mode == "constant":
            respond(h, w, param)
        elif mode == "mismatched":
            respond(10, 10, 0.5)
        elif mode == "hang":
            time.sleep(600)
        elif mode == "garbage":
            sys.stdout.buffer.write(b"XXXX" + b"\x00" * 12)
            sys.stdout.buffer.flush()
            return 0
        elif mode == "range":
            respond(h, w, 1.5)


if __name__ == "__main__":
    sys.exit(main())
