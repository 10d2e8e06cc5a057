"""k-NN graph construction and symmetric adjacency normalization.

Nodes are feature vectors; each node is linked to its k nearest neighbors
under the Euclidean metric, the directed lists are symmetrized by union, and
edges carry Gaussian-kernel weights exp(-d^2 / sigma^2) with sigma set to the
mean selected-neighbor distance. Equidistant neighbors are broken toward the
smaller node id so construction is reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError, DimensionError, GraphConstructionError, ParameterError
from .sparse import SparseAdjacency

__all__ = [
    "NodeProvenance", "GraphBundle", "pairwise_distances",
    "knn_neighbor_lists", "knn_graph", "normalize_adjacency",
]


@dataclass(frozen=True)
class NodeProvenance:
    """Where one node came from: challenge category, video, frame, instance."""

    category: str
    video: str
    frame: int
    instance: int


@dataclass
class GraphBundle:
    """One graph: features, labels, adjacency and per-node provenance.

    Labels use 0 for static, 1 for moving and 255 for unlabeled; only nodes
    where ``labeled_mask`` is true ever have their label read.
    """

    features: np.ndarray
    labels: np.ndarray
    adjacency: SparseAdjacency
    provenance: list[NodeProvenance] = field(default_factory=list)
    sequence_id: str = ""

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise DimensionError("graph: features must be a 2-d matrix")
        if self.labels.shape != (n,):
            raise DimensionError("graph: one label per node required")
        if self.adjacency.n != n:
            raise DimensionError(f"graph: adjacency over {self.adjacency.n} nodes but "
                                 f"{n} feature rows")
        if not self.provenance:
            self.provenance = [NodeProvenance("unknown", self.sequence_id, i, 0)
                               for i in range(n)]
        if len(self.provenance) != n:
            raise DimensionError("graph: one provenance record per node required")
        bad = (self.labels != 0) & (self.labels != 1) & (self.labels != 255)
        if np.any(bad):
            raise DataError(f"graph: invalid label value at node {int(np.nonzero(bad)[0][0])}")
        finite = np.isfinite(self.features).all(axis=1)
        if not finite.all():
            raise DataError(f"graph: non-finite feature at node {int(np.nonzero(~finite)[0][0])}")

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels != 255

    @property
    def num_labeled(self) -> int:
        return int(np.count_nonzero(self.labeled_mask))

    def categories(self) -> list[str]:
        return [p.category for p in self.provenance]


def _check_features(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionError(f"features: expected (N, F) with N >= 1, got {x.shape}")
    finite = np.isfinite(x).all(axis=1)
    if not finite.all():
        raise DataError(f"features: non-finite value at node {int(np.nonzero(~finite)[0][0])}")
    return x


def pairwise_distances(x) -> np.ndarray:
    """Full Euclidean distance matrix; zero diagonal, symmetric."""
    x = _check_features(x)
    d = cdist(x, x)
    np.fill_diagonal(d, 0.0)
    return d


def knn_neighbor_lists(dist: np.ndarray, k: int) -> np.ndarray:
    """Per-node ids of the k nearest other nodes, ties toward smaller id.

    This is the directed intermediate of graph construction: row i holds
    exactly k neighbor ids sorted by (distance, id), never including i.
    """
    n = dist.shape[0]
    if not 1 <= k <= n - 1:
        raise DimensionError(f"knn_neighbor_lists: k={k} invalid for {n} nodes")
    ids = np.arange(n)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        order = np.lexsort((ids, dist[i]))
        order = order[order != i]
        out[i] = order[:k]
    return out


def knn_graph(x, k: int) -> SparseAdjacency:
    """Union-symmetrized k-NN graph with Gaussian edge weights.

    sigma is the mean of all directed selected-neighbor distances; when every
    selected distance is zero (all duplicates) the weights fall back to 1.
    Requesting k >= N clamps to N-1 with a warning.
    """
    x = _check_features(x)
    n = x.shape[0]
    if n < 2:
        raise GraphConstructionError(f"knn_graph: need at least 2 nodes, got {n}")
    if k < 1:
        raise ParameterError(f"knn_graph: k must be >= 1, got {k}")
    if k >= n:
        warnings.warn(f"knn_graph: k={k} >= N={n}, clamping to {n - 1}", RuntimeWarning)
        k = n - 1
    dist = pairwise_distances(x)
    neighbors = knn_neighbor_lists(dist, k)
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = neighbors.reshape(-1)
    selected = dist[rows, cols]
    sigma = float(selected.mean())

    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    d = dist[pairs[:, 0], pairs[:, 1]]
    if sigma > 0.0:
        w = np.exp(-(d / sigma) ** 2)
    else:
        w = np.ones_like(d)
    both_rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    both_cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    both_w = np.concatenate([w, w])
    return SparseAdjacency.from_edges(n, both_rows, both_cols, both_w)


def normalize_adjacency(a: SparseAdjacency) -> SparseAdjacency:
    """Symmetric normalization with self-loops: D^-1/2 (A + I) D^-1/2.

    D is the degree matrix of A + I, so every node has positive degree and
    the output keeps one self-loop entry per node with all values in (0, 1].
    """
    if a.has_self_loops:
        raise DataError("normalize_adjacency: input must not already have self-loops")
    deg = a.row_sums() + 1.0
    dinv = 1.0 / np.sqrt(deg)
    row_ids = np.concatenate([a.row_ids(), np.arange(a.n, dtype=np.int64)])
    col_ids = np.concatenate([a.col_indices, np.arange(a.n, dtype=np.int64)])
    vals = np.concatenate([a.weights, np.ones(a.n)])
    # group the degree factors first so (i, j) and (j, i) round identically
    vals = vals * (dinv[row_ids] * dinv[col_ids])
    return SparseAdjacency.from_edges(a.n, row_ids, col_ids, vals, has_self_loops=True)
