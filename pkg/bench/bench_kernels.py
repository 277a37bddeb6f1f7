"""Compare the compiled kernels against the pure numpy fallbacks.

    python bench/bench_kernels.py

Workloads mirror the real pipeline shapes: the median filter runs over one
coordinate series per joint and axis (34 series per sequence), DTW over
beat timestamp lists.
"""

import time

import numpy as np

from groundwork import _kernels_py

try:
    from groundwork import _kernels
except ImportError:
    _kernels = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_rolling(impl, series, window):
    for s in series:
        impl.rolling_median_mad(s, window)


def bench_dtw(impl, pairs):
    for a, b in pairs:
        impl.dtw_cost(a, b)


def main():
    rng = np.random.default_rng(42)

    print(f"{'workload':<44} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    rows = []

    for t_len in (500, 5000, 50000):
        series = [rng.normal(0, 50, t_len) for _ in range(34)]
        for s in series:
            s[rng.random(t_len) < 0.1] = np.nan
        rows.append((f"median/MAD w=11, 34 series of {t_len}", bench_rolling, (series, 11)))

    for n in (50, 500, 2000):
        pairs = [
            (np.sort(rng.uniform(0, 100, n)), np.sort(rng.uniform(0, 100, n)))
            for _ in range(3)
        ]
        rows.append((f"dtw, 3 pairs of {n}x{n}", bench_dtw, (pairs,)))

    for label, fn, args in rows:
        pure = timeit(fn, _kernels_py, *args)
        if _kernels is None:
            print(f"{label:<44} {pure * 1e3:>8.2f}ms {'n/a':>10} {'':>8}")
        else:
            fast = timeit(fn, _kernels, *args)
            print(f"{label:<44} {pure * 1e3:>8.2f}ms {fast * 1e3:>8.2f}ms {pure / fast:>7.1f}x")

    if _kernels is None:
        print("\ncompiled extension not built; showing fallback timings only")


if __name__ == "__main__":
    main()
