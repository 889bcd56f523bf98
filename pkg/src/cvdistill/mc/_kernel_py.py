"""Pure-numpy shot kernel: reference implementation of the compiled core.

Both kernels must bin identically (truncation toward zero of
(value + range) * bins / (2 * range), clamped into the end bins) so that
all integer outputs agree exactly whichever backend is active; float
moment sums may differ in the last ulps because the summation order
differs.

Kept-shot moments are accumulated over the 14 features
(x0..x3, x_j * x_k for j <= k): the leading 4x4 block of the resulting
M2 matrix is the central covariance of the quadratures, and the full
14-dim covariance provides a distribution-free sampling covariance for
the covariance-entry estimates.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

# vech ordering of the quadratic features, shared with the compiled kernel
# and with the engine's standard-error propagation.
PAIRS = [(j, k) for j in range(4) for k in range(j, 4)]
N_FEATURES = 4 + len(PAIRS)


def accumulate_chunk(x, levels, threshold, hist_range, n_bins, hist_pre, hist_post, per_level_kept):
    """Process one chunk of transformed phase-space samples.

    x : (m, 6) float64, columns (X_A, P_A, X_B, P_B, X_Tap, P_Tap)
    levels : (m,) int64 channel-level index per shot
    hist_pre, hist_post : (5, n_bins) int64, incremented in place
    per_level_kept : (n_levels,) int64, incremented in place

    Returns (kept_count, mean (14,), m2 (14, 14)) over the kept-shot
    feature vectors (X_A, P_A, X_B, P_B, products of pairs).
    """
    m = x.shape[0]
    series = np.empty((m, 5))
    series[:, 0] = x[:, 4]
    series[:, 1] = x[:, 2]
    series[:, 2] = x[:, 3]
    series[:, 3] = x[:, 0] + x[:, 2]
    series[:, 4] = x[:, 1] - x[:, 3]

    inv_width = n_bins / (2.0 * hist_range)
    idx = ((series + hist_range) * inv_width).astype(np.int64)
    np.clip(idx, 0, n_bins - 1, out=idx)
    for k in range(5):
        hist_pre[k] += np.bincount(idx[:, k], minlength=n_bins)

    kept = series[:, 0] >= threshold
    n_kept = int(kept.sum())
    if n_kept == 0:
        return 0, np.zeros(N_FEATURES), np.zeros((N_FEATURES, N_FEATURES))

    idx_kept = idx[kept]
    for k in range(5):
        hist_post[k] += np.bincount(idx_kept[:, k], minlength=n_bins)
    per_level_kept += np.bincount(levels[kept], minlength=per_level_kept.shape[0])

    xk = x[kept, :4]
    feats = np.empty((n_kept, N_FEATURES))
    feats[:, :4] = xk
    for p, (j, k) in enumerate(PAIRS):
        feats[:, 4 + p] = xk[:, j] * xk[:, k]
    mean = feats.mean(axis=0)
    d = feats - mean
    return n_kept, mean, d.T @ d
