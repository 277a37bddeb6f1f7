# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: rolling median/MAD and DTW cost.

Arithmetic mirrors groundwork._kernels_py exactly (median of an even count
is the midpoint average of the two central values) so the two paths are
bit-identical.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef double _median_sorted(double* buf, Py_ssize_t n) noexcept nogil:
    if n % 2 == 1:
        return buf[n // 2]
    return (buf[n // 2 - 1] + buf[n // 2]) * 0.5


cdef void _insertion_sort(double* buf, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(1, n):
        v = buf[i]
        j = i - 1
        while j >= 0 and buf[j] > v:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = v


def rolling_median_mad(values, int window):
    """Running median and MAD over a centered, end-truncated window.

    NaN entries are ignored; all-NaN windows yield NaN outputs. Matches the
    pure fallback bit-for-bit.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t t_len = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] med = np.empty(t_len, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mad = np.empty(t_len, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(window, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dev = np.empty(window, dtype=np.float64)
    cdef Py_ssize_t half = window // 2
    cdef Py_ssize_t t, i, lo, hi, n
    cdef double m, v
    cdef double nan = float("nan")
    with nogil:
        for t in range(t_len):
            lo = t - half
            if lo < 0:
                lo = 0
            hi = t + half + 1
            if hi > t_len:
                hi = t_len
            n = 0
            for i in range(lo, hi):
                v = x[i]
                if v == v:  # not NaN
                    buf[n] = v
                    n += 1
            if n == 0:
                med[t] = nan
                mad[t] = nan
                continue
            _insertion_sort(&buf[0], n)
            m = _median_sorted(&buf[0], n)
            med[t] = m
            for i in range(n):
                v = buf[i] - m
                dev[i] = v if v >= 0 else -v
            _insertion_sort(&dev[0], n)
            mad[t] = _median_sorted(&dev[0], n)
    return med, mad


def dtw_cost(a, b):
    """Total cost of the best monotone alignment of two sorted time lists."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sa = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = sa.shape[0]
    cdef Py_ssize_t m = sb.shape[0]
    if n == 0 or m == 0:
        raise ValueError("dtw requires two non-empty sequences")
    # Two-row DP buffer; row i & 1 holds costs for input index i.
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dp = np.empty((2, m), dtype=np.float64)
    cdef Py_ssize_t i, j, c, p
    cdef double ai, d, best
    with nogil:
        d = sa[0] - sb[0]
        dp[0, 0] = d if d >= 0 else -d
        for j in range(1, m):
            d = sa[0] - sb[j]
            dp[0, j] = dp[0, j - 1] + (d if d >= 0 else -d)
        for i in range(1, n):
            c = i & 1
            p = 1 - c
            ai = sa[i]
            d = ai - sb[0]
            dp[c, 0] = dp[p, 0] + (d if d >= 0 else -d)
            for j in range(1, m):
                best = dp[p, j]
                if dp[p, j - 1] < best:
                    best = dp[p, j - 1]
                if dp[c, j - 1] < best:
                    best = dp[c, j - 1]
                d = ai - sb[j]
                dp[c, j] = (d if d >= 0 else -d) + best
    return float(dp[(n - 1) & 1, m - 1])
