"""Block-diagonal composition of graphs into one disconnected batch.

Stacking per-graph adjacencies as diagonal blocks keeps the member graphs
disconnected while letting one forward pass cover all of them; features,
labels and provenance are concatenated in list order along the node axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BatchError, DataError, DimensionError
from .graphs import GraphBundle
from .sparse import SparseAdjacency

__all__ = ["BatchedGraph", "block_diag_batch", "split_rows"]


@dataclass
class BatchedGraph:
    """A merged GraphBundle plus the bookkeeping to undo the merge."""

    graph: GraphBundle
    offsets: np.ndarray  # starting node index of each member graph
    sizes: np.ndarray    # node count of each member graph

    def node_index(self, member: int, local_node: int) -> int:
        return int(self.offsets[member]) + int(local_node)


def block_diag_batch(graphs: list[GraphBundle]) -> BatchedGraph:
    """Merge graphs into one block-diagonal batch, in list order."""
    if not graphs:
        raise BatchError("block_diag_batch: empty graph list")
    width = graphs[0].feature_dim
    for g in graphs[1:]:
        if g.feature_dim != width:
            raise DataError(f"block_diag_batch: feature width mismatch, {width} vs "
                            f"{g.feature_dim}")
    sizes = np.array([g.n for g in graphs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])

    features = np.concatenate([g.features for g in graphs], axis=0)
    labels = np.concatenate([g.labels for g in graphs])
    provenance = [p for g in graphs for p in g.provenance]

    total = int(sizes.sum())
    row_offsets = [np.zeros(1, dtype=np.int64)]
    col_indices = []
    weights = []
    nnz_base = 0
    loops = any(g.adjacency.has_self_loops for g in graphs)
    for g, off in zip(graphs, offsets):
        adj = g.adjacency
        row_offsets.append(adj.row_offsets[1:] + nnz_base)
        col_indices.append(adj.col_indices + off)
        weights.append(adj.weights)
        nnz_base += adj.nnz
    merged = SparseAdjacency(
        total,
        np.concatenate(row_offsets),
        np.concatenate(col_indices) if col_indices else np.zeros(0, dtype=np.int64),
        np.concatenate(weights) if weights else np.zeros(0),
        has_self_loops=loops,
    )
    seq = "+".join(g.sequence_id for g in graphs if g.sequence_id)
    bundle = GraphBundle(features, labels, merged, provenance, sequence_id=seq)
    return BatchedGraph(bundle, offsets, sizes)


def split_rows(batch: BatchedGraph, rows: np.ndarray) -> list[np.ndarray]:
    """Slice a per-node row matrix back into per-graph pieces.

    Concatenating the returned slices reproduces ``rows`` exactly.
    """
    rows = np.asarray(rows)
    total = int(batch.sizes.sum())
    if rows.shape[0] != total:
        raise DimensionError(f"split_rows: expected {total} rows, got {rows.shape[0]}")
    return [rows[off:off + size] for off, size in zip(batch.offsets, batch.sizes)]
