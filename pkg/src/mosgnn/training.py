"""SGD-with-momentum training loop and validation-based model selection.

One optimization step covers one graph batch (batch size 1 by default, so
one graph per step). The update rule per parameter w with gradient g is

    g <- g + weight_decay * w
    v <- momentum * v + g
    w <- w - lr * v

with velocity buffers zero-initialized and persistent across steps. Model
selection keeps the parameters of the best validation F-measure on the
moving class, earlier epoch winning ties.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .batching import block_diag_batch
from .errors import DataError, NumericError, ParameterError
from .graphs import GraphBundle, normalize_adjacency
from .metrics import MetricsResult, confusion_counts, precision_recall_f
from .model import Model
from .rng import TAG_SHUFFLE, DropoutStreams, generator

__all__ = ["TrainConfig", "TrainReport", "FitResult", "SGD", "train_epoch",
           "evaluate_graphs", "fit"]


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    max_epochs: int = 500
    graphs_per_batch: int = 1
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.lr <= 0.0:
            raise ParameterError(f"train config: lr must be positive, got {self.lr}")
        if not (0.0 <= self.momentum < 1.0):
            raise ParameterError(f"train config: momentum must be in [0, 1), got "
                                 f"{self.momentum}")
        if self.weight_decay < 0.0:
            raise ParameterError("train config: weight_decay must be nonnegative")
        if self.max_epochs < 1:
            raise ParameterError("train config: max_epochs must be >= 1")
        if self.graphs_per_batch < 1:
            raise ParameterError("train config: graphs_per_batch must be >= 1")
        if self.eval_every < 1:
            raise ParameterError("train config: eval_every must be >= 1")

    def to_dict(self) -> dict:
        return {"lr": self.lr, "momentum": self.momentum,
                "weight_decay": self.weight_decay, "max_epochs": self.max_epochs,
                "graphs_per_batch": self.graphs_per_batch, "seed": self.seed,
                "eval_every": self.eval_every}


class SGD:
    """Momentum SGD with classic L2 weight decay folded into the gradient."""

    def __init__(self, params, lr: float, momentum: float = 0.0,
                 weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.weight_decay = float(weight_decay)
        self.velocities = {p.name: np.zeros_like(p.value) for p in self.params}

    def step(self):
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise NumericError(f"sgd: non-finite gradient in parameter {p.name!r}")
            g = p.grad + self.weight_decay * p.value
            v = self.velocities[p.name]
            v *= self.momentum
            v += g
            p.value -= self.lr * v

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_precision: float | None = None
    val_recall: float | None = None
    val_f: float | None = None

    def to_dict(self) -> dict:
        d = {"epoch": self.epoch, "train_loss": self.train_loss}
        if self.val_f is not None:
            d.update(val_precision=self.val_precision, val_recall=self.val_recall,
                     val_f=self.val_f)
        return d


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_f: float = -1.0
    wall_time_s: float = 0.0

    @property
    def num_evaluations(self) -> int:
        return sum(1 for e in self.epochs if e.val_f is not None)

    def to_dict(self) -> dict:
        # wall time deliberately excluded: serialized reports stay byte-stable
        return {"epochs": [e.to_dict() for e in self.epochs],
                "best_epoch": self.best_epoch, "best_val_f": self.best_val_f,
                "num_evaluations": self.num_evaluations}


@dataclass
class FitResult:
    best_params: dict[str, np.ndarray]
    best_epoch: int
    best_val_f: float
    report: TrainReport


def _check_train_graphs(graphs: list[GraphBundle]):
    if not graphs:
        raise DataError("training: no training graphs")
    for i, g in enumerate(graphs):
        if g.num_labeled == 0:
            name = g.sequence_id or f"graph {i}"
            raise DataError(f"training: {name} has no labeled nodes")


def train_epoch(model: Model, graphs: list[GraphBundle], cfg: TrainConfig,
                optimizer: SGD, epoch: int) -> float:
    """One pass over the training graphs in a seeded shuffled order."""
    order = generator(cfg.seed, TAG_SHUFFLE, epoch).permutation(len(graphs))
    losses = []
    step_index = 0
    for start in range(0, len(order), cfg.graphs_per_batch):
        chunk = [graphs[j] for j in order[start:start + cfg.graphs_per_batch]]
        if len(chunk) == 1:
            bundle = chunk[0]
        else:
            bundle = block_diag_batch(chunk).graph
        a_hat = normalize_adjacency(bundle.adjacency)
        streams = DropoutStreams(cfg.seed, epoch=epoch, step=step_index)
        out = model.forward(a_hat, bundle.features, training=True, dropout_rng=streams)
        loss = model.compute_loss(out, bundle.labels.astype(np.int64), bundle.labeled_mask)
        model.backward()
        optimizer.step()
        optimizer.zero_grad()
        losses.append(float(loss.value))
        step_index += 1
    return float(np.mean(losses))


def evaluate_graphs(model: Model, graphs: list[GraphBundle]) -> MetricsResult:
    """Eval-mode metrics over the pooled labeled nodes of all graphs."""
    counts = np.zeros(4, dtype=np.int64)
    for g in graphs:
        a_hat = normalize_adjacency(g.adjacency)
        pred = model.predict(a_hat, g.features)
        counts += np.array(confusion_counts(pred, g.labels.astype(np.int64),
                                            g.labeled_mask))
    return precision_recall_f(tuple(counts))


def fit(model: Model, train_graphs: list[GraphBundle], val_graphs: list[GraphBundle],
        cfg: TrainConfig, *, optimizer: SGD | None = None, start_epoch: int = 0,
        log_stream=None) -> FitResult:
    """Train up to cfg.max_epochs, returning the best-on-validation parameters.

    ``start_epoch`` resumes a run: epochs start_epoch+1 .. max_epochs execute
    with the same derived streams they would have had in an uninterrupted run,
    so a resumed trajectory reproduces the original bit for bit (given the
    optimizer state saved alongside the parameters).
    """
    _check_train_graphs(train_graphs)
    if not val_graphs:
        raise DataError("training: no validation graphs")
    for g in val_graphs:
        if g.num_labeled == 0:
            raise DataError("training: validation graph has no labeled nodes")
    for tg in train_graphs:
        if any(tg is vg for vg in val_graphs):
            raise DataError("training: a graph appears in both train and validation sets")
    if start_epoch < 0 or start_epoch >= cfg.max_epochs:
        raise ParameterError(f"fit: start_epoch {start_epoch} outside [0, "
                             f"{cfg.max_epochs})")
    if optimizer is None:
        optimizer = SGD(model.parameters(), cfg.lr, cfg.momentum, cfg.weight_decay)

    report = TrainReport()
    best_params = model.snapshot()
    best_f, best_epoch = -1.0, 0
    t0 = time.perf_counter()
    for epoch in range(start_epoch + 1, cfg.max_epochs + 1):
        train_loss = train_epoch(model, train_graphs, cfg, optimizer, epoch)
        record = EpochRecord(epoch=epoch, train_loss=train_loss)
        if epoch % cfg.eval_every == 0:
            val = evaluate_graphs(model, val_graphs)
            record.val_precision = val.precision
            record.val_recall = val.recall
            record.val_f = val.f_measure
            if val.f_measure > best_f:
                best_f = val.f_measure
                best_epoch = epoch
                best_params = model.snapshot()
        report.epochs.append(record)
        if log_stream is not None:
            log_stream.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    report.wall_time_s = time.perf_counter() - t0
    report.best_epoch = best_epoch
    report.best_val_f = best_f
    return FitResult(best_params=best_params, best_epoch=best_epoch,
                     best_val_f=best_f, report=report)
