"""Inductive graph-network engine for moving vs. static object classification.

The package covers the full pipeline after feature extraction: k-NN graph
construction over node features, block-diagonal graph batching, a fixed
GCN-plus-PairNorm classifier with its own reverse-mode tape, SGD training
with validation-based model selection, F-measure evaluation, and bit-exact
file formats for features, graphs and checkpoints.
"""

__version__ = "0.1.0"

from .autodiff import (Parameter, Tensor, add_rowvec, backward, check_gradients,
                       dropout, log_softmax, matmul, nll_loss, pairnorm, relu,
                       spmm, zero_grad)
from .batching import BatchedGraph, block_diag_batch, split_rows
from .dataio import (Checkpoint, ExperimentManifest, FeatureSet, UNLABELED,
                     default_manifest_path, load_checkpoint, load_manifest,
                     read_features, read_graph, save_checkpoint, write_features,
                     write_graph)
from .errors import (BatchError, CheckpointError, DataError, DimensionError,
                     EvaluationError, FormatError, GraphConstructionError,
                     ManifestError, MosgnnError, NumericError, ParameterError,
                     StateError)
from .graphs import (GraphBundle, NodeProvenance, knn_graph, knn_neighbor_lists,
                     normalize_adjacency, pairwise_distances)
from .metrics import (CategoryReport, MetricsResult, category_report,
                      confusion_counts, format_category_table, mean_f_measure,
                      precision_recall_f)
from .model import Model, ModelConfig, init_params
from .rng import DropoutStreams, derive_seed, generator
from .sparse import SparseAdjacency
from .synthetic import make_synthetic_graph, two_cluster_features
from .training import (SGD, FitResult, TrainConfig, TrainReport, evaluate_graphs,
                       fit, train_epoch)
