"""Row-compressed storage for symmetric weighted adjacency matrices.

Only non-zero entries are kept. The layout is classic CSR: ``row_offsets``
has one entry per node plus one, ``col_indices``/``weights`` hold the
column ids and edge weights of each row segment, sorted by column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DataError, DimensionError

__all__ = ["SparseAdjacency"]


@dataclass
class SparseAdjacency:
    """Structurally symmetric weighted adjacency of one graph or batch.

    Entry (i, j) exists iff (j, i) exists with the same weight, weights are
    strictly positive, and diagonal entries are only allowed when the matrix
    was produced by explicit self-loop augmentation (``has_self_loops``).
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    weights: np.ndarray
    has_self_loops: bool = False
    _csr_cache: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.row_offsets = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self._validate()

    def _validate(self):
        n = self.n
        if n < 0:
            raise DataError("adjacency: negative node count")
        if self.row_offsets.shape != (n + 1,):
            raise DataError(f"adjacency: row_offsets must have length {n + 1}")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != self.col_indices.size:
            raise DataError("adjacency: row_offsets do not span the entry arrays")
        if np.any(np.diff(self.row_offsets) < 0):
            raise DataError("adjacency: row_offsets must be nondecreasing")
        if self.col_indices.size != self.weights.size:
            raise DataError("adjacency: col_indices and weights length mismatch")
        if self.col_indices.size:
            if self.col_indices.min() < 0 or self.col_indices.max() >= n:
                raise DataError("adjacency: column index out of range")
            if not np.all(np.isfinite(self.weights)):
                raise DataError("adjacency: non-finite edge weight")
            if self.weights.min() <= 0.0:
                raise DataError("adjacency: edge weights must be positive")
        # sorted, duplicate-free columns within every row
        for i in range(n):
            seg = self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]
            if seg.size > 1 and np.any(np.diff(seg) <= 0):
                raise DataError(f"adjacency: row {i} columns not strictly increasing")
            if not self.has_self_loops and seg.size and np.any(seg == i):
                raise DataError(f"adjacency: unexpected self-loop at node {i}")
        csr = self.to_csr()
        if (csr != csr.T).nnz != 0:
            raise DataError("adjacency: not structurally symmetric with equal weights")

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    @property
    def num_undirected_edges(self) -> int:
        loops = int(np.sum(self.col_indices == self.row_ids())) if self.has_self_loops else 0
        return (self.nnz - loops) // 2 + loops

    def row_ids(self) -> np.ndarray:
        """Row id of every stored entry (the COO expansion of row_offsets)."""
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_offsets))

    @classmethod
    def from_edges(cls, n, rows, cols, weights, has_self_loops=False) -> "SparseAdjacency":
        """Build from parallel (row, col, weight) arrays; entries are sorted."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if not (rows.shape == cols.shape == weights.shape):
            raise DimensionError("from_edges: rows, cols, weights must align")
        order = np.lexsort((cols, rows))
        rows, cols, weights = rows[order], cols[order], weights[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(n, offsets, cols, weights, has_self_loops=has_self_loops)

    @classmethod
    def from_dense(cls, mat, has_self_loops=False) -> "SparseAdjacency":
        mat = np.asarray(mat, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"from_dense: expected square matrix, got {mat.shape}")
        rows, cols = np.nonzero(mat)
        return cls.from_edges(mat.shape[0], rows, cols, mat[rows, cols],
                              has_self_loops=has_self_loops)

    def to_csr(self) -> sp.csr_matrix:
        if self._csr_cache is None:
            self._csr_cache = sp.csr_matrix(
                (self.weights, self.col_indices, self.row_offsets), shape=(self.n, self.n)
            )
        return self._csr_cache

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=np.float64)
        out[self.row_ids(), self.col_indices] = self.weights
        return out

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.to_csr().sum(axis=1)).ravel()

    def permuted(self, perm) -> "SparseAdjacency":
        """Relabel nodes so new index perm[i] corresponds to old index i."""
        perm = np.asarray(perm, dtype=np.int64)
        rows = perm[self.row_ids()]
        cols = perm[self.col_indices]
        return SparseAdjacency.from_edges(self.n, rows, cols, self.weights,
                                          has_self_loops=self.has_self_loops)
