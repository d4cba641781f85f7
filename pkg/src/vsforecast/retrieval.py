"""Exact subset-restricted nearest-neighbor retrieval and splicing.

The distance between two windows, restricted to the observed variables S,
is the mean of |a - b| ** exponent over the P timesteps, the S variable
rows, and the D feature columns. Retrieval scans the whole corpus with
this distance; splicing assembles a full-variable input from the test
window's S rows and a retrieved neighbor's remaining rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataset import Instance
from .errors import CorpusTooSmallError, ShapeMismatchError
from .subset import SubsetMask


@dataclass
class RetrievalCorpus:
    """Training windows available for neighbor lookup.

    The flattened (count, P*N*D) float table is built once on first use and
    shared by the direct scan and the range-query index.
    """

    instances: list[Instance]
    _flat: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.instances:
            raise ValueError("corpus needs at least one instance")
        first = self.instances[0]
        for inst in self.instances:
            if (inst.p, inst.v, inst.d) != (first.p, first.v, first.d):
                raise ShapeMismatchError(
                    "corpus instances disagree on (P, N, D)")

    @classmethod
    def from_windows(cls, windows: list[Instance],
                     fraction: float = 1.0) -> "RetrievalCorpus":
        """Keep a deterministic prefix fraction of the training windows."""
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {fraction}")
        keep = max(1, int(len(windows) * fraction))
        return cls(list(windows[:keep]))

    @property
    def count(self) -> int:
        return len(self.instances)

    @property
    def p(self) -> int:
        return self.instances[0].p

    @property
    def n(self) -> int:
        return self.instances[0].v

    @property
    def d(self) -> int:
        return self.instances[0].d

    def flat_table(self) -> np.ndarray:
        if self._flat is None:
            flat = np.stack([inst.x.reshape(-1) for inst in self.instances])
            self._flat = np.ascontiguousarray(flat, dtype=np.float64)
        return self._flat


@dataclass(frozen=True)
class NeighborSet:
    """Corpus ids and distances of the retrieved neighbors, ascending."""

    corpus_indices: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.corpus_indices, dtype=np.int64)
        dist = np.asarray(self.distances, dtype=np.float64)
        if idx.shape != dist.shape or idx.ndim != 1:
            raise ValueError("indices and distances must be matching 1-d arrays")
        if np.unique(idx).size != idx.size:
            raise ValueError("corpus indices must be distinct")
        if np.any(np.diff(dist) < 0):
            raise ValueError("distances must be non-decreasing")
        object.__setattr__(self, "corpus_indices", idx)
        object.__setattr__(self, "distances", dist)

    def __len__(self) -> int:
        return int(self.corpus_indices.size)

    @property
    def m(self) -> int:
        return len(self)

    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.corpus_indices.tolist(), self.distances.tolist()))


def mask_columns(subset: SubsetMask, p: int, n_total: int, d: int) -> np.ndarray:
    """Flat column ids of the subset's entries, in (p, s, d) raveling order."""
    steps = np.arange(p, dtype=np.int64)[:, None, None] * (n_total * d)
    vars_ = subset.indices[None, :, None] * d
    feats = np.arange(d, dtype=np.int64)[None, None, :]
    return (steps + vars_ + feats).reshape(-1)


def _project(tensor: np.ndarray, subset: SubsetMask) -> np.ndarray:
    """Restrict the variable axis to the subset, unless already restricted."""
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.ndim != 3:
        raise ShapeMismatchError(f"expected (P, V, D), got shape {tensor.shape}")
    if tensor.shape[1] == subset.size:
        return tensor
    if tensor.shape[1] == subset.n_total:
        return tensor[:, subset.indices, :]
    raise ShapeMismatchError(
        f"variable axis is {tensor.shape[1]}, expected {subset.size} "
        f"or {subset.n_total}")


def subset_distance(a: np.ndarray, b_tensor: np.ndarray, subset: SubsetMask,
                    exponent_b: float = 0.5) -> float:
    """Mean elementwise |a - b| ** exponent over the subset's entries.

    Either tensor may be given pre-restricted to the subset rows or with
    the full variable axis.
    """
    if exponent_b <= 0:
        raise ValueError(f"exponent must be positive, got {exponent_b}")
    left = _project(a, subset)
    right = _project(b_tensor, subset)
    if left.shape != right.shape:
        raise ShapeMismatchError(
            f"projected shapes differ: {left.shape} vs {right.shape}")
    return float(np.mean(np.abs(left - right) ** exponent_b))


def top_m_neighbors(corpus: RetrievalCorpus, x_test: np.ndarray,
                    subset: SubsetMask, exponent_b: float = 0.5,
                    m: int = 5) -> NeighborSet:
    """The m corpus instances closest to the test window on the S variables.

    Ties are broken by ascending corpus index.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if corpus.count < m:
        raise CorpusTooSmallError(
            f"corpus has {corpus.count} instances, need at least {m}")
    if exponent_b <= 0:
        raise ValueError(f"exponent must be positive, got {exponent_b}")
    query = np.ascontiguousarray(_project(x_test, subset).reshape(-1))
    cols = mask_columns(subset, corpus.p, corpus.n, corpus.d)
    if query.shape[0] != cols.shape[0]:
        raise ShapeMismatchError(
            "test tensor does not match the corpus window shape")
    dist = kernels.scan_distances(corpus.flat_table(), cols, query,
                                  float(exponent_b))
    order = np.argsort(dist, kind="stable")[:m]
    return NeighborSet(order, dist[order])


def splice_instance(x_test: np.ndarray, x_nn: np.ndarray,
                    subset: SubsetMask) -> np.ndarray:
    """Full-variable tensor with the subset rows from the test window and
    every other row copied from the neighbor."""
    x_test = np.asarray(x_test, dtype=np.float64)
    x_nn = np.asarray(x_nn, dtype=np.float64)
    if x_nn.ndim != 3 or x_nn.shape[1] != subset.n_total:
        raise ShapeMismatchError(
            f"neighbor tensor must be (P, {subset.n_total}, D), "
            f"got {x_nn.shape}")
    if x_test.shape != (x_nn.shape[0], subset.size, x_nn.shape[2]):
        raise ShapeMismatchError(
            f"test tensor must be {(x_nn.shape[0], subset.size, x_nn.shape[2])}, "
            f"got {x_test.shape}")
    out = x_nn.copy()
    out[:, subset.indices, :] = x_test
    return out
