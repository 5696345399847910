#!/usr/bin/env python3
"""Benchmark the stitch hot loop: compiled kernel vs numpy fallback.

Workload mirrors one challenge-sized inference: a 1500x1500 output board
accumulated from the 25-patch overlapping grid, Gaussian-weighted, then
finalized. Run after `pip install -e .`:

    python benchmarks/bench_stitch.py [--repeats 5]
"""

import argparse
import importlib
import statistics
import time

import numpy as np

from tileseg._kernels import _stitch_np
from tileseg.tiling import build_grid, gaussian_kernel

try:
    _stitchx = importlib.import_module("tileseg._kernels._stitchx")
except ImportError:
    _stitchx = None

H = W = 1500
PATCH = 512
STRIDE = 256


def make_workload(seed=0):
    rng = np.random.default_rng(seed)
    grid = build_grid(H, W, PATCH, STRIDE)
    kernel = gaussian_kernel(PATCH, PATCH / 8).weights
    patches = [rng.random((PATCH, PATCH)).astype(np.float32) for _ in grid.origins]
    return grid, kernel, patches


def run_once(mod, grid, kernel, patches):
    weighted = np.zeros((H, W))
    weights = np.zeros((H, W))
    start = time.perf_counter()
    for (r, c), probs in zip(grid.origins, patches):
        mod.accumulate_patch(weighted, weights, probs, kernel, r, c)
    out = mod.finalize_stitch(weighted, weights)
    return time.perf_counter() - start, out


def bench(mod, grid, kernel, patches, repeats):
    times = []
    out = None
    for _ in range(repeats):
        elapsed, out = run_once(mod, grid, kernel, patches)
        times.append(elapsed)
    return min(times), statistics.median(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    grid, kernel, patches = make_workload()
    print(f"workload: {H}x{W} board, {len(grid.origins)} patches of "
          f"{PATCH}x{PATCH}, stride {STRIDE}, {args.repeats} repeats\n")

    best_np, median_np, out_np = bench(_stitch_np, grid, kernel, patches, args.repeats)
    print(f"{'numpy fallback':<18} best {best_np * 1e3:8.1f} ms   "
          f"median {median_np * 1e3:8.1f} ms")

    if _stitchx is None:
        print(f"{'compiled kernel':<18} not built (pip install -e . to compile)")
        return

    best_cy, median_cy, out_cy = bench(_stitchx, grid, kernel, patches, args.repeats)
    print(f"{'compiled kernel':<18} best {best_cy * 1e3:8.1f} ms   "
          f"median {median_cy * 1e3:8.1f} ms")
    print(f"\nspeedup (best): {best_np / best_cy:.2f}x")
    identical = np.array_equal(out_np.view(np.uint32), out_cy.view(np.uint32))
    print(f"outputs bit-identical: {identical}")
    if not identical:
        raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
