"""Independent reference implementations used as test oracles.

Everything here is written with plain Python loops against the raw
definitions, deliberately sharing no code with the package internals.
"""

import math


def brute_subset_distance(a, b, subset_indices, exponent):
    """Mean of |a - b| ** exponent over (step, subset variable, feature)."""
    p, _, d = a.shape
    total = 0.0
    count = 0
    for t in range(p):
        for s in subset_indices:
            for f in range(d):
                total += abs(a[t, s, f] - b[t, s, f]) ** exponent
                count += 1
    return total / count


def brute_top_m(corpus_tensors, x_test_full, subset_indices, exponent, m):
    """Sorted (distance, index) scan; ties resolved by ascending index."""
    scored = []
    for idx, tensor in enumerate(corpus_tensors):
        dist = brute_subset_distance(x_test_full, tensor, subset_indices,
                                     exponent)
        scored.append((dist, idx))
    scored.sort()
    return scored[:m]


def brute_range_hits(rows, cols, lows, highs):
    """Row ids satisfying every |row[col] - center| <= width predicate."""
    hits = []
    for rid in range(rows.shape[0]):
        ok = True
        for col, lo, hi in zip(cols, lows, highs):
            value = rows[rid, col]
            if value < lo or value > hi:
                ok = False
                break
        if ok:
            hits.append(rid)
    return hits


def brute_density_partition(dmat, eps, min_pts):
    """Density-connected components as frozensets, plus the noise set.

    Border points are attached to every cluster that reaches them, so
    the return value is suitable for partition comparison only when no
    border point is reachable from two clusters.
    """
    n = dmat.shape[0]
    core = [sum(1 for j in range(n) if dmat[i][j] <= eps) >= min_pts
            for i in range(n)]
    assigned = [None] * n
    clusters = []
    for start in range(n):
        if not core[start] or assigned[start] is not None:
            continue
        members = {start}
        frontier = [start]
        assigned[start] = len(clusters)
        while frontier:
            i = frontier.pop()
            if not core[i]:
                continue
            for j in range(n):
                if dmat[i][j] <= eps and j not in members:
                    members.add(j)
                    if assigned[j] is None:
                        assigned[j] = len(clusters)
                        if core[j]:
                            frontier.append(j)
        clusters.append(frozenset(members))
    noise = frozenset(i for i in range(n) if assigned[i] is None)
    return set(clusters), noise


def brute_optimal_rank(corpus_tensors, window, subset_indices, exponent):
    """Rank of the full-distance argmin within the subset-distance order."""
    n_vars = window.shape[1]
    full = brute_top_m(corpus_tensors, window, list(range(n_vars)),
                       exponent, len(corpus_tensors))
    optimal = full[0][1]
    sub = brute_top_m(corpus_tensors, window, subset_indices, exponent,
                      len(corpus_tensors))
    for rank, (_, idx) in enumerate(sub, start=1):
        if idx == optimal:
            return rank
    raise AssertionError("optimal neighbor missing from subset ordering")


def brute_mae(yhat, y, step_j):
    values = [abs(yhat[i][step_j - 1] - y[i][step_j - 1])
              for i in range(len(yhat))]
    return sum(values) / len(values)


def brute_rmse(yhat, y, step_j):
    values = [(yhat[i][step_j - 1] - y[i][step_j - 1]) ** 2
              for i in range(len(yhat))]
    return math.sqrt(sum(values) / len(values))
