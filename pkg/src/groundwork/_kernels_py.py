"""Pure numpy implementations of the hot kernels.

groundwork.kernels selects these when the compiled extension is missing or
GROUNDWORK_PURE=1. Both implementations keep the same arithmetic (same
order of operations, medians as the midpoint average of the two central
values) so results are bit-identical either way.
"""

from __future__ import annotations

import warnings

import numpy as np


def rolling_median_mad(values: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Running median and median absolute deviation over a centered window.

    The window is truncated at the ends of the series; NaN entries are
    ignored. Positions whose window holds no finite value get NaN for both
    outputs.

    values: (T,) float array. window: odd, >= 1.
    Returns (medians, mads), each (T,).
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D series, got shape {x.shape}")
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    half = window // 2
    padded = np.concatenate([np.full(half, np.nan), x, np.full(half, np.nan)])
    sliding = np.lib.stride_tricks.sliding_window_view(padded, window)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN windows
        med = np.nanmedian(sliding, axis=1)
        mad = np.nanmedian(np.abs(sliding - med[:, None]), axis=1)
    return med, mad


def dtw_cost(a, b) -> float:
    """Total cost of the best monotone alignment of two sorted time lists.

    Classic dynamic programming with steps (1,0), (0,1), (1,1), local cost
    |a_i - b_j|, both endpoints matched.
    """
    sa = [float(v) for v in a]
    sb = [float(v) for v in b]
    n, m = len(sa), len(sb)
    if n == 0 or m == 0:
        raise ValueError("dtw requires two non-empty sequences")
    prev = [0.0] * m
    b0 = sb[0]
    acc = abs(sa[0] - b0)
    prev[0] = acc
    for j in range(1, m):
        prev[j] = prev[j - 1] + abs(sa[0] - sb[j])
    for i in range(1, n):
        ai = sa[i]
        cur = [0.0] * m
        cur[0] = prev[0] + abs(ai - b0)
        for j in range(1, m):
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(ai - sb[j]) + best
        prev = cur
    return prev[m - 1]
