"""The fixed node-classification network.

Pipeline, in execution order:

    [graph conv -> pairnorm -> relu -> dropout]  x 2
    [linear     -> pairnorm -> relu -> dropout]  x 2
    [dropout -> linear -> log_softmax]

which instantiates exactly 2 graph convolutions, 4 pairnorms, 4 relus,
5 dropouts and 3 linear maps. Graph convolutions propagate through the
normalized self-looped adjacency and carry no bias; with an identity
adjacency they collapse to plain linear maps and the whole network becomes
an ordinary multi-layer perceptron.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .errors import DimensionError, ParameterError, StateError
from .rng import TAG_INIT, DropoutStreams, generator
from .sparse import SparseAdjacency

__all__ = ["ModelConfig", "Model", "init_params", "PARAM_ORDER"]

# Canonical parameter order; checkpoints and optimizers follow it.
PARAM_ORDER = ("gcn1.W", "gcn2.W", "lin1.W", "lin1.b", "lin2.W", "lin2.b",
               "lin3.W", "lin3.b")


@dataclass(frozen=True)
class ModelConfig:
    in_dim: int = 930
    hidden_dims: tuple[int, int, int, int] = (512, 256, 128, 64)
    out_dim: int = 2
    dropout_p: float = 0.5
    pairnorm_scale: float = 1.0
    pairnorm: bool = True
    seed: int = 0

    def __post_init__(self):
        dims = (self.in_dim, *self.hidden_dims, self.out_dim)
        if len(self.hidden_dims) != 4:
            raise ParameterError("model config: exactly four hidden widths expected")
        if any(int(d) < 1 for d in dims):
            raise ParameterError(f"model config: all dimensions must be >= 1, got {dims}")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ParameterError(f"model config: dropout_p must be in [0, 1), got "
                                 f"{self.dropout_p}")
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))

    def weight_shapes(self) -> dict[str, tuple[int, int]]:
        h1, h2, h3, h4 = self.hidden_dims
        return {
            "gcn1.W": (self.in_dim, h1),
            "gcn2.W": (h1, h2),
            "lin1.W": (h2, h3), "lin1.b": (1, h3),
            "lin2.W": (h3, h4), "lin2.b": (1, h4),
            "lin3.W": (h4, self.out_dim), "lin3.b": (1, self.out_dim),
        }

    def to_dict(self) -> dict:
        return {
            "in_dim": self.in_dim, "hidden_dims": list(self.hidden_dims),
            "out_dim": self.out_dim, "dropout_p": self.dropout_p,
            "pairnorm_scale": self.pairnorm_scale, "pairnorm": self.pairnorm,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(in_dim=int(d["in_dim"]), hidden_dims=tuple(d["hidden_dims"]),
                   out_dim=int(d["out_dim"]), dropout_p=float(d["dropout_p"]),
                   pairnorm_scale=float(d["pairnorm_scale"]),
                   pairnorm=bool(d["pairnorm"]), seed=int(d["seed"]))


class Step(NamedTuple):
    kind: str        # gcn | linear | pairnorm | relu | dropout | log_softmax
    ref: str | int | None = None


def _build_plan(cfg: ModelConfig) -> tuple[Step, ...]:
    plan: list[Step] = []
    drop = 0
    for name in ("gcn1", "gcn2", "lin1", "lin2"):
        plan.append(Step("gcn" if name.startswith("gcn") else "linear", name))
        if cfg.pairnorm:
            plan.append(Step("pairnorm"))
        plan.append(Step("relu"))
        plan.append(Step("dropout", drop))
        drop += 1
    plan.append(Step("dropout", drop))
    plan.append(Step("linear", "lin3"))
    plan.append(Step("log_softmax"))
    return tuple(plan)


def init_params(cfg: ModelConfig) -> dict[str, ad.Parameter]:
    """Glorot-uniform weights, zero biases, reproducible from cfg.seed."""
    params: dict[str, ad.Parameter] = {}
    for index, name in enumerate(PARAM_ORDER):
        shape = cfg.weight_shapes()[name]
        if name.endswith(".b"):
            value = np.zeros(shape)
        else:
            fan_in, fan_out = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            value = generator(cfg.seed, TAG_INIT, index).uniform(-bound, bound, shape)
        params[name] = ad.Parameter(name, value)
    return params


class Model:
    """Parameters plus the fixed forward/backward pipeline."""

    def __init__(self, cfg: ModelConfig, params: dict[str, ad.Parameter] | None = None):
        self.cfg = cfg
        self.plan = _build_plan(cfg)
        if params is None:
            params = init_params(cfg)
        expected = cfg.weight_shapes()
        for name in PARAM_ORDER:
            if name not in params:
                raise ParameterError(f"model: missing parameter {name!r}")
            if params[name].value.shape != expected[name]:
                raise DimensionError(f"model: parameter {name!r} has shape "
                                     f"{params[name].value.shape}, expected {expected[name]}")
        self.params = {name: params[name] for name in PARAM_ORDER}
        self._last_loss: ad.Tensor | None = None

    def parameters(self) -> list[ad.Parameter]:
        return [self.params[name] for name in PARAM_ORDER]

    def zero_grad(self):
        ad.zero_grad(self.parameters())

    def layer_counts(self) -> Counter:
        return Counter(step.kind for step in self.plan)

    def forward(self, a_hat: SparseAdjacency, x, training: bool = False,
                dropout_rng: DropoutStreams | None = None) -> ad.Tensor:
        """Run the pipeline; returns per-node log-probabilities (N x out_dim)."""
        x = ad.as_tensor(x)
        if x.value.ndim != 2 or x.value.shape[1] != self.cfg.in_dim:
            raise DimensionError(f"forward: features must be (N, {self.cfg.in_dim}), got "
                                 f"{x.value.shape}")
        if a_hat.n != x.value.shape[0]:
            raise DimensionError(f"forward: adjacency over {a_hat.n} nodes but "
                                 f"{x.value.shape[0]} feature rows")
        if training and self.cfg.dropout_p > 0.0 and dropout_rng is None:
            raise ParameterError("forward: training mode requires dropout streams")
        h = x
        for step in self.plan:
            if step.kind == "gcn":
                h = ad.spmm(a_hat, ad.matmul(h, self.params[step.ref + ".W"]))
            elif step.kind == "linear":
                h = ad.add_rowvec(ad.matmul(h, self.params[step.ref + ".W"]),
                                  self.params[step.ref + ".b"])
            elif step.kind == "pairnorm":
                h = ad.pairnorm(h, scale=self.cfg.pairnorm_scale)
            elif step.kind == "relu":
                h = ad.relu(h)
            elif step.kind == "dropout":
                rng = dropout_rng.layer(step.ref) if training and dropout_rng else None
                h = ad.dropout(h, self.cfg.dropout_p, training, rng)
            elif step.kind == "log_softmax":
                h = ad.log_softmax(h)
            else:  # pragma: no cover
                raise StateError(f"forward: unknown step kind {step.kind!r}")
        return h

    def compute_loss(self, log_probs: ad.Tensor, labels, mask) -> ad.Tensor:
        """Masked mean NLL; records the tape so backward() can run."""
        loss = ad.nll_loss(log_probs, labels, mask)
        self._last_loss = loss
        return loss

    def backward(self):
        """Accumulate gradients of the recorded loss into the parameters."""
        if self._last_loss is None:
            raise StateError("backward: no recorded forward/loss on the tape")
        ad.backward(self._last_loss)
        self._last_loss = None

    def predict(self, a_hat: SparseAdjacency, x) -> np.ndarray:
        """Eval-mode class per node; exact ties resolve to class 0."""
        log_probs = self.forward(a_hat, x, training=False).value
        return np.argmax(log_probs, axis=1).astype(np.int64)

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copies of all parameter values, keyed by name."""
        return {name: p.value.copy() for name, p in self.params.items()}

    def load_values(self, values: dict[str, np.ndarray]):
        for name in PARAM_ORDER:
            if name not in values:
                raise ParameterError(f"model: snapshot missing parameter {name!r}")
            if values[name].shape != self.params[name].value.shape:
                raise DimensionError(f"model: snapshot shape mismatch for {name!r}")
            self.params[name].value[...] = values[name]
