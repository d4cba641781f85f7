"""NumPy implementations of the hot scan loops.

These are the reference implementations; the compiled module in
``_kernels_c.pyx`` mirrors them loop for loop. Selected at import time by
``vsforecast.kernels``.
"""

import numpy as np


def scan_distances(table, cols, query, exponent):
    """Mean |table[c, cols] - query| ** exponent for every row c.

    table is the (count, P*N*D) flattened corpus, cols the flat column ids
    of the observed entries, query the matching flattened test values.
    """
    diff = np.abs(table[:, cols] - query[np.newaxis, :])
    if exponent == 1.0:
        acc = diff.sum(axis=1)
    elif exponent == 0.5:
        acc = np.sqrt(diff).sum(axis=1)
    elif exponent == 2.0:
        acc = (diff * diff).sum(axis=1)
    else:
        acc = (diff ** exponent).sum(axis=1)
    return acc / float(cols.shape[0])


def scan_distances_rows(table, rows, cols, query, exponent):
    """Same as scan_distances but restricted to the given row ids."""
    return scan_distances(table[rows], cols, query, exponent)


def range_hit_counts(sorted_vals, sorted_rows, cols, lows, highs, n_rows):
    """Count, per table row, how many range sub-queries it satisfies.

    sorted_vals[f] holds column f in ascending order and sorted_rows[f] the
    row id of each sorted value. Sub-query k accepts rows whose value in
    column cols[k] lies in [lows[k], highs[k]], both ends inclusive.
    """
    counts = np.zeros(n_rows, dtype=np.int64)
    for k in range(cols.shape[0]):
        vals = sorted_vals[cols[k]]
        lo = np.searchsorted(vals, lows[k], side="left")
        hi = np.searchsorted(vals, highs[k], side="right")
        if hi > lo:
            # row ids are unique within one column, plain += is safe
            counts[sorted_rows[cols[k], lo:hi]] += 1
    return counts
