import numpy as np
import pytest

from mosgnn.batching import block_diag_batch, split_rows
from mosgnn.errors import BatchError, DataError, DimensionError
from mosgnn.graphs import GraphBundle, normalize_adjacency
from mosgnn.model import Model, ModelConfig
from mosgnn.sparse import SparseAdjacency
from mosgnn.synthetic import make_synthetic_graph


def small_graph(n, f, seed, k=2):
    return make_synthetic_graph(n_nodes=n, feature_dim=f, k=k, separation=4.0,
                                seed=seed, sequence_id=f"g{seed}")


def test_single_graph_batch_identity():
    g = small_graph(5, 3, 1)
    batch = block_diag_batch([g])
    np.testing.assert_array_equal(batch.offsets, [0])
    np.testing.assert_array_equal(batch.graph.features, g.features)
    np.testing.assert_array_equal(batch.graph.adjacency.to_dense(),
                                  g.adjacency.to_dense())


def test_two_graph_batch_layout():
    g1 = small_graph(2, 3, 1, k=1)
    g2 = small_graph(3, 3, 2, k=1)
    batch = block_diag_batch([g1, g2])
    assert batch.graph.n == 5
    np.testing.assert_array_equal(batch.offsets, [0, 2])
    np.testing.assert_array_equal(batch.sizes, [2, 3])
    assert batch.node_index(1, 0) == 2
    # dense block-diagonal oracle
    expect = np.zeros((5, 5))
    expect[:2, :2] = g1.adjacency.to_dense()
    expect[2:, 2:] = g2.adjacency.to_dense()
    np.testing.assert_array_equal(batch.graph.adjacency.to_dense(), expect)
    # off-diagonal blocks exactly zero
    dense = batch.graph.adjacency.to_dense()
    assert np.all(dense[:2, 2:] == 0.0) and np.all(dense[2:, :2] == 0.0)


def test_empty_batch_rejected():
    with pytest.raises(BatchError):
        block_diag_batch([])


def test_feature_width_mismatch_rejected():
    with pytest.raises(DataError):
        block_diag_batch([small_graph(3, 3, 1), small_graph(3, 4, 2)])


def test_split_rows_roundtrip():
    g1 = small_graph(2, 3, 1, k=1)
    g2 = small_graph(3, 3, 2, k=1)
    batch = block_diag_batch([g1, g2])
    rows = np.arange(10).reshape(5, 2).astype(float)
    parts = split_rows(batch, rows)
    np.testing.assert_array_equal(parts[0], rows[:2])
    np.testing.assert_array_equal(parts[1], rows[2:])
    np.testing.assert_array_equal(np.concatenate(parts), rows)


def test_split_rows_shape_check():
    batch = block_diag_batch([small_graph(2, 3, 1, k=1)])
    with pytest.raises(DimensionError):
        split_rows(batch, np.zeros((3, 2)))


def test_normalization_commutes_with_batching():
    graphs = [small_graph(n, 4, seed) for seed, n in enumerate((4, 6, 5), start=1)]
    batch = block_diag_batch(graphs)
    normalized_after = normalize_adjacency(batch.graph.adjacency).to_dense()
    blocks = [normalize_adjacency(g.adjacency).to_dense() for g in graphs]
    expect = np.zeros_like(normalized_after)
    pos = 0
    for b in blocks:
        expect[pos:pos + b.shape[0], pos:pos + b.shape[0]] = b
        pos += b.shape[0]
    np.testing.assert_allclose(normalized_after, expect, atol=1e-12)


def test_batched_eval_forward_equals_per_graph_pairnorm_free():
    # pairnorm couples rows across the batch, so equivalence is stated for
    # the pairnorm-free variant
    cfg = ModelConfig(in_dim=4, hidden_dims=(6, 5, 4, 3), pairnorm=False, seed=9)
    model = Model(cfg)
    rng = np.random.default_rng(17)
    for _ in range(25):
        sizes = rng.integers(3, 9, size=rng.integers(2, 4))
        graphs = [small_graph(int(n), 4, int(rng.integers(0, 1000))) for n in sizes]
        batch = block_diag_batch(graphs)
        a_hat = normalize_adjacency(batch.graph.adjacency)
        merged = model.forward(a_hat, batch.graph.features).value
        singles = [model.forward(normalize_adjacency(g.adjacency), g.features).value
                   for g in graphs]
        np.testing.assert_allclose(merged, np.concatenate(singles), atol=1e-9)


def test_batch_of_one_equals_per_graph_full_model():
    cfg = ModelConfig(in_dim=4, hidden_dims=(6, 5, 4, 3), seed=9)
    model = Model(cfg)
    g = small_graph(7, 4, 3)
    batch = block_diag_batch([g])
    a = model.forward(normalize_adjacency(g.adjacency), g.features).value
    b = model.forward(normalize_adjacency(batch.graph.adjacency),
                      batch.graph.features).value
    np.testing.assert_array_equal(a, b)


def test_batch_preserves_labels_and_provenance_order():
    g1 = small_graph(2, 3, 1, k=1)
    g2 = small_graph(3, 3, 2, k=1)
    batch = block_diag_batch([g1, g2])
    np.testing.assert_array_equal(batch.graph.labels,
                                  np.concatenate([g1.labels, g2.labels]))
    assert batch.graph.provenance == g1.provenance + g2.provenance


def test_batch_with_self_loop_adjacencies():
    # normalized adjacencies batch the same way
    g1 = small_graph(3, 3, 1, k=1)
    g2 = small_graph(4, 3, 2, k=1)
    n1 = normalize_adjacency(g1.adjacency)
    n2 = normalize_adjacency(g2.adjacency)
    b1 = GraphBundle(g1.features, g1.labels, n1, g1.provenance, g1.sequence_id)
    b2 = GraphBundle(g2.features, g2.labels, n2, g2.provenance, g2.sequence_id)
    batch = block_diag_batch([b1, b2])
    assert batch.graph.adjacency.has_self_loops
    expect = np.zeros((7, 7))
    expect[:3, :3] = n1.to_dense()
    expect[3:, 3:] = n2.to_dense()
    np.testing.assert_array_equal(batch.graph.adjacency.to_dense(), expect)
