"""Synthetic two-cluster node data for demos and end-to-end tests.

Nodes are drawn from two Gaussian clusters in feature space; one cluster
plays the moving class, the other the static class. Cluster centers sit at
+/- (separation / 2) along the all-ones direction.
"""

from __future__ import annotations

import numpy as np

from .graphs import GraphBundle, NodeProvenance, knn_graph
from .rng import generator

__all__ = ["two_cluster_features", "make_synthetic_graph"]


def two_cluster_features(n_nodes: int, feature_dim: int, separation: float,
                         seed: int, moving_fraction: float = 0.5,
                         categories: tuple[str, ...] = ("synthetic",),
                         video: str = "v0"):
    """Features, labels and provenance for one two-cluster graph."""
    rng = generator(seed)
    n_moving = int(round(n_nodes * moving_fraction))
    labels = np.zeros(n_nodes, dtype=np.uint8)
    labels[:n_moving] = 1
    direction = np.ones(feature_dim) / np.sqrt(feature_dim)
    centers = np.where(labels[:, None] == 1, 0.5 * separation, -0.5 * separation)
    features = centers * direction + rng.standard_normal((n_nodes, feature_dim))
    order = rng.permutation(n_nodes)
    features, labels = features[order], labels[order]
    provenance = [NodeProvenance(categories[i % len(categories)], video, i, 0)
                  for i in range(n_nodes)]
    return features, labels, provenance


def make_synthetic_graph(n_nodes: int = 300, feature_dim: int = 930, k: int = 40,
                         separation: float = 60.0, seed: int = 0,
                         categories: tuple[str, ...] = ("synthetic",),
                         sequence_id: str = "synthetic") -> GraphBundle:
    features, labels, provenance = two_cluster_features(
        n_nodes, feature_dim, separation, seed, categories=categories,
        video=sequence_id)
    adjacency = knn_graph(features, k)
    return GraphBundle(features, labels, adjacency, provenance,
                       sequence_id=sequence_id)
