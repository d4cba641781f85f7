"""Backend agreement: the compiled kernels must match the NumPy fallback."""

import numpy as np
import pytest

from vsforecast import _kernels_np, kernels

try:
    from vsforecast import _kernels_c
except ImportError:
    _kernels_c = None

needs_compiled = pytest.mark.skipif(_kernels_c is None,
                                    reason="compiled kernels not built")


def test_backend_identifies_itself():
    assert kernels.BACKEND in ("cython", "numpy")


def _random_problem(rng, rows=40, cols=24, picked=9):
    table = np.ascontiguousarray(rng.normal(size=(rows, cols)))
    chosen = np.sort(rng.choice(cols, size=picked, replace=False)
                     ).astype(np.int64)
    query = np.ascontiguousarray(rng.normal(size=picked))
    return table, chosen, query


@needs_compiled
@pytest.mark.parametrize("exponent", [0.5, 1.0, 2.0, 0.37])
def test_scan_distances_backends_agree(exponent):
    rng = np.random.default_rng(0)
    for _ in range(20):
        table, cols, query = _random_problem(rng)
        a = _kernels_c.scan_distances(table, cols, query, exponent)
        b = _kernels_np.scan_distances(table, cols, query, exponent)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
        assert np.argsort(a, kind="stable").tolist() == \
            np.argsort(b, kind="stable").tolist()


@needs_compiled
def test_scan_distances_rows_backends_agree():
    rng = np.random.default_rng(1)
    table, cols, query = _random_problem(rng)
    rows = np.sort(rng.choice(40, size=11, replace=False)).astype(np.int64)
    a = _kernels_c.scan_distances_rows(table, rows, cols, query, 0.5)
    b = _kernels_np.scan_distances_rows(table, rows, cols, query, 0.5)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@needs_compiled
def test_range_hit_counts_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(20):
        table, cols, query = _random_problem(rng)
        order = np.argsort(table, axis=0, kind="stable")
        sorted_vals = np.ascontiguousarray(
            np.take_along_axis(table, order, axis=0).T)
        sorted_rows = np.ascontiguousarray(order.T.astype(np.int64))
        widths = rng.uniform(0.05, 1.5, size=cols.size)
        lows = np.ascontiguousarray(query - widths)
        highs = np.ascontiguousarray(query + widths)
        a = _kernels_c.range_hit_counts(sorted_vals, sorted_rows, cols,
                                        lows, highs, 40)
        b = _kernels_np.range_hit_counts(sorted_vals, sorted_rows, cols,
                                         lows, highs, 40)
        np.testing.assert_array_equal(a, b)


def test_scan_distance_boundary_values():
    table = np.array([[0.0, 1.0], [2.0, 3.0]])
    cols = np.array([0, 1], dtype=np.int64)
    query = np.array([0.0, 1.0])
    out = kernels.scan_distances(table, cols, query, 1.0)
    np.testing.assert_allclose(out, [0.0, 2.0])


def test_range_counts_inclusive_bounds():
    table = np.array([[1.0], [2.0], [3.0]])
    order = np.argsort(table, axis=0, kind="stable")
    sorted_vals = np.ascontiguousarray(np.take_along_axis(table, order, 0).T)
    sorted_rows = np.ascontiguousarray(order.T.astype(np.int64))
    cols = np.array([0], dtype=np.int64)
    counts = kernels.range_hit_counts(sorted_vals, sorted_rows, cols,
                                      np.array([2.0]), np.array([3.0]), 3)
    np.testing.assert_array_equal(counts, [0, 1, 1])
