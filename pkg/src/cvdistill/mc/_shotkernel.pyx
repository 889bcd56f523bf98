# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled shot kernel: one fused pass per chunk.

Per shot: derive the five histogram series, bin them, test the tap
threshold, and Welford-update the kept-shot feature moments (quadratures
plus their pairwise products). Binning must stay bit-for-bit identical to
the numpy fallback in _kernel_py (truncation toward zero, clamped end
bins); see that module for the shared contract, including the feature
(vech) ordering.
"""

import numpy as np

from libc.stdint cimport int64_t


BACKEND = "compiled"

DEF NFEAT = 14


def accumulate_chunk(const double[:, ::1] x, const int64_t[::1] levels, double threshold,
                     double hist_range, int n_bins,
                     int64_t[:, ::1] hist_pre, int64_t[:, ::1] hist_post,
                     int64_t[::1] per_level_kept):
    """Same contract as cvdistill.mc._kernel_py.accumulate_chunk."""
    cdef Py_ssize_t m = x.shape[0]
    cdef double inv_width = n_bins / (2.0 * hist_range)
    cdef double series[5]
    cdef long bins[5]
    cdef double feats[NFEAT]
    cdef double mean[NFEAT]
    cdef double delta[NFEAT]
    cdef double m2[NFEAT][NFEAT]
    cdef int64_t n_kept = 0
    cdef Py_ssize_t i
    cdef int j, k, p
    cdef long b

    for j in range(NFEAT):
        mean[j] = 0.0
        for k in range(NFEAT):
            m2[j][k] = 0.0

    for i in range(m):
        series[0] = x[i, 4]
        series[1] = x[i, 2]
        series[2] = x[i, 3]
        series[3] = x[i, 0] + x[i, 2]
        series[4] = x[i, 1] - x[i, 3]
        for k in range(5):
            b = <long>((series[k] + hist_range) * inv_width)
            if b < 0:
                b = 0
            elif b >= n_bins:
                b = n_bins - 1
            bins[k] = b
            hist_pre[k, b] += 1
        if series[0] >= threshold:
            n_kept += 1
            per_level_kept[levels[i]] += 1
            for k in range(5):
                hist_post[k, bins[k]] += 1
            for j in range(4):
                feats[j] = x[i, j]
            p = 4
            for j in range(4):
                for k in range(j, 4):
                    feats[p] = x[i, j] * x[i, k]
                    p += 1
            for j in range(NFEAT):
                delta[j] = feats[j] - mean[j]
            for j in range(NFEAT):
                mean[j] += delta[j] / n_kept
            for j in range(NFEAT):
                for k in range(NFEAT):
                    m2[j][k] += delta[j] * (feats[k] - mean[k])

    mean_out = np.zeros(NFEAT)
    m2_out = np.zeros((NFEAT, NFEAT))
    cdef double[::1] mean_view = mean_out
    cdef double[:, ::1] m2_view = m2_out
    if n_kept > 0:
        for j in range(NFEAT):
            mean_view[j] = mean[j]
            for k in range(NFEAT):
                m2_view[j, k] = m2[j][k]
    return int(n_kept), mean_out, m2_out
