"""Variable subset selection.

Subsets are drawn either uniformly at random at a configured percentage of
the variable count, or in a correlated-failure style: variables are
clustered by rank-correlation distance and the subset is sampled from the
union of a few randomly picked clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .dataset import RawSeries
from .errors import NoClustersError, TooShortError

NOISE = -1


@dataclass(frozen=True)
class SubsetMask:
    """Sorted, distinct variable indices into [0, n_total)."""

    indices: np.ndarray
    n_total: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size < 1:
            raise ValueError("subset must hold at least one index")
        if idx.size > self.n_total:
            raise ValueError("subset larger than the variable count")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("subset indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.n_total:
            raise ValueError(f"subset indices out of range [0, {self.n_total})")
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return int(self.indices.size)

    @classmethod
    def full(cls, n_total: int) -> "SubsetMask":
        return cls(np.arange(n_total, dtype=np.int64), n_total)


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-variable cluster labels; NOISE (-1) marks unclustered variables."""

    labels: np.ndarray
    n_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be a 1-d array")
        ids = labels[labels != NOISE]
        if ids.size and (ids.min() < 0 or ids.max() >= self.n_clusters):
            raise ValueError("cluster ids out of range")
        present = np.unique(ids)
        if present.size != self.n_clusters:
            raise ValueError("every cluster id must have at least one member")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    def members(self, cluster_id: int) -> np.ndarray:
        return np.nonzero(self.labels == cluster_id)[0]

    def sizes(self) -> list[int]:
        return [int((self.labels == c).sum()) for c in range(self.n_clusters)]


@dataclass(frozen=True)
class CorrelationDistanceMatrix:
    """Symmetric matrix of 1 - |rank correlation|, zero diagonal."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.allclose(d, d.T, atol=1e-12):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0.0):
            raise ValueError("distance matrix diagonal must be zero")
        if d.min() < 0.0 or d.max() > 1.0:
            raise ValueError("distances must lie in [0, 1]")
        d.flags.writeable = False
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]


def sample_random_subset(n_total: int, k_percent: float,
                         rng_seed: int) -> SubsetMask:
    """Uniform sample of max(1, round(n_total * k_percent / 100)) variables."""
    if not 0.0 < k_percent < 100.0:
        raise ValueError(f"k_percent must be in (0, 100), got {k_percent}")
    size = max(1, int(np.floor(n_total * k_percent / 100.0 + 0.5)))
    rng = np.random.default_rng(rng_seed)
    indices = np.sort(rng.choice(n_total, size=size, replace=False))
    return SubsetMask(indices, n_total)


def spearman_matrix(train: RawSeries) -> np.ndarray:
    """Pairwise rank correlation of the variable columns.

    Ranks use the average-tie convention. A constant column has zero
    correlation with every other column and unit self-correlation.
    """
    if train.t < 2:
        raise TooShortError("need at least 2 timesteps for rank correlation")
    ranks = rankdata(train.values, method="average", axis=0)
    centered = ranks - ranks.mean(axis=0)
    norms = np.sqrt((centered * centered).sum(axis=0))
    safe = np.where(norms > 0, norms, 1.0)
    rho = (centered / safe).T @ (centered / safe)
    constant = norms == 0
    rho[constant, :] = 0.0
    rho[:, constant] = 0.0
    np.fill_diagonal(rho, 1.0)
    return np.clip(rho, -1.0, 1.0)


def correlation_distance(rho: np.ndarray) -> CorrelationDistanceMatrix:
    """Elementwise 1 - |rho|, clipped into [0, 1] with an exact zero diagonal."""
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("correlation matrix must be square")
    if not np.allclose(rho, rho.T, atol=1e-9):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(rho), 1.0, atol=1e-9):
        raise ValueError("correlation matrix must have a unit diagonal")
    d = np.clip(1.0 - np.abs(rho), 0.0, 1.0)
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return CorrelationDistanceMatrix(d)


def dbscan_clusters(dmat: CorrelationDistanceMatrix, eps: float,
                    min_pts: int) -> ClusterAssignment:
    """Density clustering on a precomputed distance matrix.

    Core points have at least min_pts neighbors within eps (self included).
    Clusters grow breadth-first from the lowest-index unvisited core, so
    border points deterministically join the first cluster that reaches
    them. Points reached by no core are labeled NOISE.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    d = dmat.d
    n = d.shape[0]
    within = d <= eps
    core = within.sum(axis=1) >= min_pts
    labels = np.full(n, NOISE, dtype=np.int64)
    cluster_id = 0
    for start in range(n):
        if labels[start] != NOISE or not core[start]:
            continue
        labels[start] = cluster_id
        queue = [start]
        head = 0
        while head < len(queue):
            point = queue[head]
            head += 1
            for neighbor in np.nonzero(within[point])[0]:
                if labels[neighbor] == NOISE:
                    labels[neighbor] = cluster_id
                    if core[neighbor]:
                        queue.append(int(neighbor))
        cluster_id += 1
    return ClusterAssignment(labels=labels, n_clusters=cluster_id)


def sample_correlated_subset(clusters: ClusterAssignment, c: int, size: int,
                             rng_seed: int) -> SubsetMask:
    """Sample the subset from the union of c randomly picked clusters.

    Noise variables are never eligible. If the union holds fewer than
    ``size`` variables the whole union is returned.
    """
    if clusters.n_clusters == 0:
        raise NoClustersError("no clusters to sample from")
    if not 1 <= c <= clusters.n_clusters:
        raise ValueError(
            f"c must be in [1, {clusters.n_clusters}], got {c}")
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(clusters.n_clusters, size=c, replace=False)
    union = np.nonzero(np.isin(clusters.labels, chosen))[0]
    if union.size <= size:
        picked = union
    else:
        picked = rng.choice(union, size=size, replace=False)
    return SubsetMask(np.sort(picked).astype(np.int64),
                      n_total=int(clusters.labels.size))
