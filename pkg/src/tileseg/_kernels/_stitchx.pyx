# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stitch accumulation kernels.

Semantics are defined by tileseg._kernels._stitch_np; the two backends
must stay bit-identical. Operation order per element matters: multiply
then add in float64, divide once at the end, clip, cast to float32.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def accumulate_patch(double[:, ::1] weighted_sum, double[:, ::1] weight_sum,
                     const float[:, ::1] probs, const double[:, ::1] kernel,
                     Py_ssize_t row, Py_ssize_t col):
    cdef Py_ssize_t p = probs.shape[0]
    cdef Py_ssize_t i, j
    cdef double w
    for i in range(p):
        for j in range(p):
            w = kernel[i, j]
            weighted_sum[row + i, col + j] += w * <double>probs[i, j]
            weight_sum[row + i, col + j] += w


def finalize_stitch(double[:, ::1] weighted_sum, double[:, ::1] weight_sum):
    cdef Py_ssize_t h = weighted_sum.shape[0]
    cdef Py_ssize_t w = weighted_sum.shape[1]
    out_arr = np.empty((h, w), dtype=np.float32)
    cdef float[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(h):
        for j in range(w):
            v = weighted_sum[i, j] / weight_sum[i, j]
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            out[i, j] = <float>v
    return out_arr
