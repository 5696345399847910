"""The pluggable patch-scorer abstraction.

A patch scorer maps an RGB patch to a same-size tumor-probability map. The
neural network behind real scorers is out of scope here: it lives across a
process boundary behind the PSRQ/PSRS wire protocol, so the model can be
written in any ecosystem and the boundary stays testable with a trivial
mock peer. Built-in scorers (constant, oracle) exist for tests and
end-to-end verification without any learned model.

A scorer instance is used by one worker at a time; parallelism is achieved
by holding several instances (one subprocess each for external scorers).
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import time
import zlib
from typing import Callable, Protocol

import numpy as np

from . import wire
from .errors import (
    InvalidProbability,
    ProtocolError,
    ScorerCrashed,
    ScorerTimeout,
    UnknownPatch,
)
from .raster import BinaryMask, ProbMap, Raster

DEFAULT_TIMEOUT = 60.0


class PatchScorer(Protocol):
    """Capability descriptor plus the scoring call.

    patch_size is the edge length the scorer expects (None = any);
    deterministic scorers return identical output for identical input.
    """

    patch_size: int | None
    deterministic: bool

    def score(self, patch: Raster, *, image_id: str | None = None,
              origin: tuple[int, int] | None = None) -> ProbMap: ...

    def close(self) -> None: ...


class ConstantScorer:
    """Uniform probability everywhere; the simplest stitch oracle."""

    def __init__(self, probability: float):
        if not 0.0 <= probability <= 1.0:
            raise InvalidProbability(f"probability {probability} outside [0, 1]")
        self.probability = float(probability)
        self.patch_size = None
        self.deterministic = True

    def score(self, patch: Raster, *, image_id=None, origin=None) -> ProbMap:
        return ProbMap(np.full((patch.height, patch.width), self.probability,
                               dtype=np.float32))

    def close(self) -> None:
        pass


def constant_scorer(probability: float) -> ConstantScorer:
    return ConstantScorer(probability)


class OracleScorer:
    """Ground truth plus bounded uniform noise; the end-to-end oracle.

    With noise amplitude < 0.5 no pixel can cross the 0.5 boundary, so
    thresholding the stitched output recovers the truth exactly. Noise is
    derived per (image_id, origin), not from a shared sequence, so results
    are independent of patch evaluation order and worker count.
    """

    def __init__(self, truth_lookup: Callable[[str | None, tuple[int, int]], BinaryMask],
                 noise_amplitude: float = 0.0, seed: int = 0):
        if not 0.0 <= noise_amplitude < 0.5:
            raise ValueError(f"noise_amplitude must be in [0, 0.5), got {noise_amplitude}")
        self.truth_lookup = truth_lookup
        self.noise_amplitude = float(noise_amplitude)
        self.seed = int(seed)
        self.patch_size = None
        self.deterministic = True

    def score(self, patch: Raster, *, image_id=None, origin=None) -> ProbMap:
        if origin is None:
            raise UnknownPatch("oracle scorer requires a patch origin")
        truth = self.truth_lookup(image_id, tuple(origin))
        base = truth.data.astype(np.float32)
        if self.noise_amplitude == 0.0:
            return ProbMap(base)
        id_hash = zlib.crc32(image_id.encode()) if image_id else 0
        rng = np.random.default_rng([self.seed, id_hash, origin[0], origin[1]])
        noise = rng.uniform(-self.noise_amplitude, self.noise_amplitude,
                            size=base.shape).astype(np.float32)
        return ProbMap(np.clip(base + noise, 0.0, 1.0))

    def close(self) -> None:
        pass


def oracle_scorer(truth_lookup, noise_amplitude: float = 0.0, seed: int = 0) -> OracleScorer:
    return OracleScorer(truth_lookup, noise_amplitude, seed)


class ExternalScorer:
    """Scores patches through a subprocess speaking PSRQ/PSRS on its stdio.

    One subprocess per scorer instance, strictly sequential
    request/response, so messages can never interleave. The process is
    spawned lazily and reused across calls.
    """

    def __init__(self, command, timeout: float = DEFAULT_TIMEOUT,
                 patch_size: int | None = None, deterministic: bool = True):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("empty scorer command")
        self.timeout = float(timeout)
        self.patch_size = patch_size
        self.deterministic = deterministic
        self._proc: subprocess.Popen | None = None

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
            except OSError as err:
                raise ScorerCrashed(f"cannot launch scorer {self.command!r}: {err}") from err
        return self._proc

    def score(self, patch: Raster, *, image_id=None, origin=None) -> ProbMap:
        proc = self._ensure_proc()
        deadline = time.monotonic() + self.timeout
        request = wire.encode_request(patch)
        try:
            proc.stdin.write(request)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as err:
            raise ScorerCrashed(f"scorer process closed its input: {err}") from err

        header = self._read_exact(proc, wire.RESPONSE_HEADER_SIZE, deadline)
        try:
            frame_size = wire.response_frame_size(header)
        except ProtocolError:
            self.close()
            raise
        body = self._read_exact(proc, frame_size - wire.RESPONSE_HEADER_SIZE, deadline)
        response = wire.decode_response(header + body)
        if response.height != patch.height or response.width != patch.width:
            raise ProtocolError(
                f"response is {response.height}x{response.width} for a "
                f"{patch.height}x{patch.width} request"
            )
        return response

    def _read_exact(self, proc: subprocess.Popen, n: int, deadline: float) -> bytes:
        fd = proc.stdout.fileno()
        os.set_blocking(fd, False)
        chunks = []
        remaining = n
        while remaining > 0:
            wait = deadline - time.monotonic()
            if wait <= 0:
                self.close()
                raise ScorerTimeout(f"scorer did not answer within {self.timeout}s")
            ready, _, _ = select.select([fd], [], [], min(wait, 0.5))
            if not ready:
                if proc.poll() is not None:
                    raise ScorerCrashed(
                        f"scorer exited with code {proc.returncode} mid-response"
                    )
                continue
            chunk = os.read(fd, remaining)
            if not chunk:
                code = proc.poll()
                raise ScorerCrashed(f"scorer closed its output (exit code {code})")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        if self._proc is not None:
            proc, self._proc = self._proc, None
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_scorer(command, timeout: float = DEFAULT_TIMEOUT, **kwargs) -> ExternalScorer:
    return ExternalScorer(command, timeout=timeout, **kwargs)


def mask_file_oracle(manifest, noise_amplitude: float = 0.0, seed: int = 0,
                     patch_size: int = 512) -> OracleScorer:
    """Oracle over a manifest's mask files, loading each mask once on demand."""
    from .errors import OutOfBounds
    from .raster import load_mask
    from .tiling import extract_patch

    by_id = manifest.by_id()
    cache: dict[str, BinaryMask] = {}

    def lookup(image_id, origin):
        if image_id not in by_id:
            raise UnknownPatch(f"no mask for image id {image_id!r}")
        if image_id not in cache:
            cache[image_id] = load_mask(by_id[image_id].mask_path)
        try:
            return extract_patch(cache[image_id], origin, patch_size)
        except OutOfBounds as err:
            raise UnknownPatch(f"{image_id}: no truth patch at {origin}") from err

    return OracleScorer(lookup, noise_amplitude=noise_amplitude, seed=seed)
