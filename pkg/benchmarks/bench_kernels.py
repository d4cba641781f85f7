"""Timing comparison of the compiled scan kernels vs the NumPy fallback.

Measures the two hot loops on a realistic workload: the full-corpus
subset-distance scan behind direct retrieval, and the per-column range
counting behind the scalable index.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from vsforecast import _kernels_np

try:
    from vsforecast import _kernels_c
except ImportError:
    _kernels_c = None


def bench(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    rng = np.random.default_rng(0)
    count, p, n = 20000, 12, 40
    picked = 6
    queries = 50

    table = np.ascontiguousarray(rng.normal(size=(count, p * n)))
    cols = np.sort(rng.choice(p * n, size=p * picked, replace=False)
                   ).astype(np.int64)
    probes = rng.normal(size=(queries, p * picked))

    def scan(impl):
        for q in probes:
            impl.scan_distances(table, cols, np.ascontiguousarray(q), 0.5)

    order = np.argsort(table, axis=0, kind="stable")
    sorted_vals = np.ascontiguousarray(np.take_along_axis(table, order, 0).T)
    sorted_rows = np.ascontiguousarray(order.T.astype(np.int64))
    widths = rng.uniform(0.2, 0.6, size=cols.size)

    def ranges(impl):
        for q in probes:
            impl.range_hit_counts(sorted_vals, sorted_rows, cols,
                                  np.ascontiguousarray(q - widths),
                                  np.ascontiguousarray(q + widths), count)

    rows = [("distance scan", scan), ("range counting", ranges)]
    print(f"corpus rows={count}  columns={p * n}  observed entries="
          f"{cols.size}  queries={queries}\n")
    print(f"{'kernel':<16} {'numpy':>10} {'cython':>10} {'speedup':>9}")
    for name, runner in rows:
        t_np = bench(runner, _kernels_np)
        if _kernels_c is None:
            print(f"{name:<16} {t_np:>9.3f}s {'n/a':>10} {'-':>9}")
            continue
        t_cy = bench(runner, _kernels_c)
        print(f"{name:<16} {t_np:>9.3f}s {t_cy:>9.3f}s "
              f"{t_np / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
