"""Range-query retrieval over a flattened corpus table.

Each corpus window is flattened into one row of P*N*D columns, and every
column carries a sorted index for binary-search range lookup. A retrieval
issues one range sub-query per observed entry of the test window, with a
per-variable width, and intersects the matching row-id sets. When the
intersection is smaller than the requested neighbor count, the widths of
the variables with the least slack (largest ratio of the query's distance
to the nearest column value over the current width) are multiplied by a
loosening factor and the query repeats. The surviving candidates are
finally re-ranked by the exact scan distance.

Widths are calibrated on validation windows: for each one, find its
k_hat-th nearest corpus window under the full-variable distance, then
average the absolute per-element gap to that neighbor, per variable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import Instance
from .errors import CorpusTooSmallError, RetrievalExhaustedError
from .retrieval import NeighborSet, RetrievalCorpus, mask_columns, _project
from .subset import SubsetMask

THRESHOLD_FLOOR = 1e-9


@dataclass(frozen=True)
class QueryTable:
    """Flattened corpus rows plus per-column sorted indexes."""

    rows: np.ndarray         # (count, P*N*D)
    sorted_vals: np.ndarray  # (P*N*D, count), each row ascending
    sorted_rows: np.ndarray  # (P*N*D, count), row id per sorted value
    p: int
    n: int
    d: int

    @property
    def count(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class ThresholdVector:
    """Positive per-variable range widths plus the calibration rank."""

    b_sigma: np.ndarray
    k_hat: int

    def __post_init__(self):
        b = np.asarray(self.b_sigma, dtype=np.float64)
        if b.ndim != 1 or b.size < 1:
            raise ValueError("b_sigma must be a non-empty 1-d array")
        if not np.all(b > 0):
            raise ValueError("all thresholds must be positive")
        b.flags.writeable = False
        object.__setattr__(self, "b_sigma", b)


@dataclass(frozen=True)
class CandidateSet:
    """Row ids surviving the sub-query intersection."""

    ids: np.ndarray
    rounds_used: int

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return int(self.ids.size)


def build_query_table(corpus: RetrievalCorpus) -> QueryTable:
    """Flatten the corpus and sort every column for range lookup."""
    rows = corpus.flat_table()
    order = np.argsort(rows, axis=0, kind="stable")
    sorted_vals = np.ascontiguousarray(
        np.take_along_axis(rows, order, axis=0).T)
    sorted_rows = np.ascontiguousarray(order.T.astype(np.int64))
    return QueryTable(rows=rows, sorted_vals=sorted_vals,
                      sorted_rows=sorted_rows,
                      p=corpus.p, n=corpus.n, d=corpus.d)


def calibrate_thresholds(corpus: RetrievalCorpus, val_windows: list[Instance],
                         k_hat: int = 5,
                         exponent_b: float = 0.5) -> ThresholdVector:
    """Per-variable widths from the k_hat-th full-distance neighbor gaps."""
    if k_hat < 1:
        raise ValueError(f"k_hat must be >= 1, got {k_hat}")
    if corpus.count <= k_hat:
        raise CorpusTooSmallError(
            f"corpus has {corpus.count} instances, calibration needs "
            f"more than k_hat={k_hat}")
    if not val_windows:
        raise ValueError("calibration needs at least one validation window")
    table = corpus.flat_table()
    all_cols = np.arange(table.shape[1], dtype=np.int64)
    gaps = np.zeros(corpus.n, dtype=np.float64)
    for window in val_windows:
        query = np.ascontiguousarray(window.x.reshape(-1))
        dist = kernels.scan_distances(table, all_cols, query,
                                      float(exponent_b))
        order = np.argsort(dist, kind="stable")
        neighbor = corpus.instances[int(order[k_hat - 1])]
        # mean absolute gap over timesteps and features, per variable
        gaps += np.abs(window.x - neighbor.x).mean(axis=(0, 2))
    gaps /= len(val_windows)
    return ThresholdVector(b_sigma=np.maximum(gaps, THRESHOLD_FLOOR),
                           k_hat=k_hat)


def _subquery_bounds(table: QueryTable, x_test: np.ndarray,
                     subset: SubsetMask, widths: np.ndarray):
    """Flat column ids, centers, and per-sub-query widths for the mask."""
    projected = _project(x_test, subset)
    cols = mask_columns(subset, table.p, table.n, table.d)
    centers = np.ascontiguousarray(projected.reshape(-1))
    per_query = np.repeat(widths[subset.indices], table.d)
    per_query = np.tile(per_query, table.p)
    return cols, centers, np.ascontiguousarray(per_query)


def range_candidates(table: QueryTable, x_test: np.ndarray,
                     subset: SubsetMask,
                     thresholds: ThresholdVector) -> CandidateSet:
    """Rows within every per-entry range, one round, possibly empty."""
    cols, centers, widths = _subquery_bounds(table, x_test, subset,
                                             thresholds.b_sigma)
    counts = kernels.range_hit_counts(table.sorted_vals, table.sorted_rows,
                                      cols, centers - widths,
                                      centers + widths, table.count)
    ids = np.nonzero(counts == cols.shape[0])[0].astype(np.int64)
    return CandidateSet(ids=ids, rounds_used=1)


def _variable_pass_counts(table: QueryTable, cols: np.ndarray,
                          centers: np.ndarray, per_query: np.ndarray,
                          subset: SubsetMask) -> np.ndarray:
    """How many rows satisfy each variable's sub-queries jointly.

    The variable whose own constraints admit the fewest rows is the one
    binding the intersection hardest, so it is first in line for
    loosening.
    """
    per_var = cols.shape[0] // subset.size
    shape = (table.p, subset.size, table.d)
    cols_v = cols.reshape(shape)
    centers_v = centers.reshape(shape)
    widths_v = per_query.reshape(shape)
    passes = np.empty(subset.size, dtype=np.int64)
    for s in range(subset.size):
        c = np.ascontiguousarray(cols_v[:, s, :].reshape(-1))
        mid = np.ascontiguousarray(centers_v[:, s, :].reshape(-1))
        w = np.ascontiguousarray(widths_v[:, s, :].reshape(-1))
        counts = kernels.range_hit_counts(table.sorted_vals,
                                          table.sorted_rows, c,
                                          mid - w, mid + w, table.count)
        passes[s] = int((counts == per_var).sum())
    return passes


def iterative_candidates(table: QueryTable, x_test: np.ndarray,
                         subset: SubsetMask, thresholds: ThresholdVector,
                         u: float = 1.5, m: int = 5,
                         max_rounds: int = 10) -> CandidateSet:
    """Repeat the range query, loosening the tightest widths, until at
    least m candidates survive or the round budget runs out.

    Each round widens the ceil(|S| / 2) variables whose own sub-queries
    pass the fewest rows (ties resolved by ascending position in the
    mask), so the constraints blocking the intersection loosen first.
    """
    if u <= 1.0:
        raise ValueError(f"loosening factor must exceed 1, got {u}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if max_rounds < 1:
        raise ValueError(f"max_rounds must be >= 1, got {max_rounds}")
    widths = thresholds.b_sigma.copy()
    rounds = 0
    while True:
        rounds += 1
        cols, centers, per_query = _subquery_bounds(table, x_test, subset,
                                                    widths)
        counts = kernels.range_hit_counts(table.sorted_vals,
                                          table.sorted_rows, cols,
                                          centers - per_query,
                                          centers + per_query, table.count)
        ids = np.nonzero(counts == cols.shape[0])[0].astype(np.int64)
        if ids.size >= m or rounds >= max_rounds:
            return CandidateSet(ids=ids, rounds_used=rounds)
        passes = _variable_pass_counts(table, cols, centers, per_query,
                                       subset)
        n_loosen = max(1, -(-subset.size // 2))  # ceil(|S| / 2)
        loosen = np.argsort(passes, kind="stable")[:n_loosen]
        widths[subset.indices[loosen]] *= u


def iterative_retrieve(table: QueryTable, corpus: RetrievalCorpus,
                       x_test: np.ndarray, subset: SubsetMask,
                       thresholds: ThresholdVector, u: float = 1.5,
                       m: int = 5, max_rounds: int = 10,
                       exponent_b: float = 0.5) -> NeighborSet:
    """Range-query retrieval with a final exact re-rank of the candidates."""
    cand = iterative_candidates(table, x_test, subset, thresholds,
                                u=u, m=m, max_rounds=max_rounds)
    if len(cand) == 0:
        raise RetrievalExhaustedError(
            f"no candidates after {cand.rounds_used} rounds")
    cols = mask_columns(subset, table.p, table.n, table.d)
    query = np.ascontiguousarray(_project(x_test, subset).reshape(-1))
    dist = kernels.scan_distances_rows(corpus.flat_table(), cand.ids, cols,
                                       query, float(exponent_b))
    order = np.argsort(dist, kind="stable")[:m]
    return NeighborSet(cand.ids[order], dist[order])


def save_table(table: QueryTable, path) -> None:
    """Dump the flattened rows as little-endian float64 with a JSON sidecar."""
    path = Path(path)
    data = np.ascontiguousarray(table.rows, dtype="<f8")
    data.tofile(path)
    sidecar = {"count": table.count, "p": table.p, "n": table.n,
               "d": table.d}
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True))


def load_table(path) -> QueryTable:
    """Rebuild a QueryTable (including sorted indexes) from a dump."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    rows = np.fromfile(path, dtype="<f8").astype(np.float64)
    count = int(sidecar["count"])
    p, n, d = int(sidecar["p"]), int(sidecar["n"]), int(sidecar["d"])
    rows = np.ascontiguousarray(rows.reshape(count, p * n * d))
    order = np.argsort(rows, axis=0, kind="stable")
    sorted_vals = np.ascontiguousarray(
        np.take_along_axis(rows, order, axis=0).T)
    sorted_rows = np.ascontiguousarray(order.T.astype(np.int64))
    return QueryTable(rows=rows, sorted_vals=sorted_vals,
                      sorted_rows=sorted_rows, p=p, n=n, d=d)
