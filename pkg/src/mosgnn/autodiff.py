"""Reverse-mode differentiation over dense 64-bit matrices.

This is a fixed-vocabulary tape, not a general autodiff system: exactly the
primitives needed by the node-classification model are differentiable. Each
operation returns a :class:`Tensor` holding the forward value, references to
its inputs, and a closure computing vector-Jacobian products. ``backward``
walks the tape once in reverse topological order and accumulates gradients
into :class:`Parameter` buffers, which persist until ``zero_grad``.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionError,
    EvaluationError,
    NumericError,
    ParameterError,
)
from .sparse import SparseAdjacency

__all__ = [
    "Tensor", "Parameter", "as_tensor", "matmul", "spmm", "relu", "dropout",
    "pairnorm", "log_softmax", "nll_loss", "add_rowvec", "backward",
    "zero_grad", "check_gradients",
]


class Tensor:
    """One node on the tape: a value plus how it was computed."""

    __slots__ = ("value", "grad", "parents", "vjp", "op")

    def __init__(self, value, parents=(), vjp=None, op="input"):
        self.value = value
        self.parents = tuple(parents)
        self.vjp = vjp
        self.op = op
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={np.shape(self.value)})"


class Parameter(Tensor):
    """Named trainable leaf with a persistent gradient accumulator."""

    __slots__ = ("name",)

    def __init__(self, name: str, value):
        value = np.array(value, dtype=np.float64)
        if value.ndim != 2:
            raise DimensionError(f"parameter {name!r}: expected 2-d value, got {value.shape}")
        super().__init__(value, op="parameter")
        self.name = name
        self.grad = np.zeros_like(value)

    def zero_grad(self):
        self.grad.fill(0.0)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def as_tensor(x) -> Tensor:
    """Wrap an array-like as a constant leaf; Tensors pass through."""
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=np.float64)
    return Tensor(arr, op="constant")


_wrap = as_tensor


def _mat(x: Tensor, opname: str) -> np.ndarray:
    if x.value.ndim != 2:
        raise DimensionError(f"{opname}: expected 2-d operand, got shape {x.value.shape}")
    return x.value


def matmul(a, b) -> Tensor:
    """Dense product a @ b with VJPs dA = G B^T and dB = A^T G."""
    a, b = _wrap(a), _wrap(b)
    av, bv = _mat(a, "matmul"), _mat(b, "matmul")
    if av.shape[1] != bv.shape[0]:
        raise DimensionError(f"matmul: inner dimensions differ, {av.shape} x {bv.shape}")

    def vjp(g):
        return g @ bv.T, av.T @ g

    return Tensor(av @ bv, (a, b), vjp, op="matmul")


def spmm(adj: SparseAdjacency, d) -> Tensor:
    """Sparse-times-dense product; gradient w.r.t. the dense operand only.

    The adjacency is symmetric, so the VJP A^T G equals A G.
    """
    d = _wrap(d)
    dv = _mat(d, "spmm")
    if adj.n != dv.shape[0]:
        raise DimensionError(f"spmm: adjacency has {adj.n} nodes but dense operand has "
                             f"{dv.shape[0]} rows")
    csr = adj.to_csr()

    def vjp(g):
        return (csr @ g,)

    return Tensor(csr @ dv, (d,), vjp, op="spmm")


def relu(x) -> Tensor:
    x = _wrap(x)
    xv = x.value
    mask = xv > 0.0  # subgradient at exactly 0 is taken as 0

    def vjp(g):
        return (g * mask,)

    return Tensor(np.where(mask, xv, 0.0), (x,), vjp, op="relu")


def dropout(x, p: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero entries with probability p, scale survivors by 1/(1-p).

    Eval mode is a pure identity. The sampled mask is saved on the tape, so
    the VJP applies exactly the same zeroing and scaling.
    """
    x = _wrap(x)
    if not (0.0 <= p < 1.0):
        raise ParameterError(f"dropout: p must be in [0, 1), got {p}")
    if not training or p == 0.0:
        def vjp_id(g):
            return (g,)
        return Tensor(x.value, (x,), vjp_id, op="dropout")
    if rng is None:
        raise ParameterError("dropout: training mode with p > 0 requires an rng")
    scaled_mask = (rng.random(x.value.shape) >= p) / (1.0 - p)

    def vjp(g):
        return (g * scaled_mask,)

    return Tensor(x.value * scaled_mask, (x,), vjp, op="dropout")


def pairnorm(x, scale: float = 1.0, eps: float = 1e-6) -> Tensor:
    """Center columns, then rescale so the mean squared row norm equals scale^2.

    With centered rows x~, the output is  s * sqrt(n) * x~ / sqrt(sum_i ||x~_i||^2 + eps).
    """
    x = _wrap(x)
    xv = _mat(x, "pairnorm")
    if xv.shape[0] < 1:
        raise DimensionError("pairnorm: need at least one row")
    n = xv.shape[0]
    centered = xv - xv.mean(axis=0, keepdims=True)
    total = float(np.sum(centered * centered))
    alpha = scale * np.sqrt(n) / np.sqrt(total + eps)

    def vjp(g):
        # y = alpha(t) * x~ with t = sum(x~^2); then pull back through centering.
        h = alpha * g - (alpha * float(np.sum(g * centered)) / (total + eps)) * centered
        return (h - h.mean(axis=0, keepdims=True),)

    return Tensor(alpha * centered, (x,), vjp, op="pairnorm")


def log_softmax(x) -> Tensor:
    """Row-wise x - logsumexp(x), max-subtracted for stability."""
    x = _wrap(x)
    xv = _mat(x, "log_softmax")
    if xv.shape[1] < 1:
        raise DimensionError("log_softmax: need at least one column")
    m = xv.max(axis=1, keepdims=True)
    lse = m + np.log(np.sum(np.exp(xv - m), axis=1, keepdims=True))
    out = xv - lse
    probs = np.exp(out)

    def vjp(g):
        return (g - probs * g.sum(axis=1, keepdims=True),)

    return Tensor(out, (x,), vjp, op="log_softmax")


def add_rowvec(x, b) -> Tensor:
    """Add a (1, c) row vector to every row of x (linear-layer bias)."""
    x, b = _wrap(x), _wrap(b)
    xv, bv = _mat(x, "add_rowvec"), _mat(b, "add_rowvec")
    if bv.shape != (1, xv.shape[1]):
        raise DimensionError(f"add_rowvec: bias shape {bv.shape} does not broadcast over "
                             f"{xv.shape}")

    def vjp(g):
        return g, g.sum(axis=0, keepdims=True)

    return Tensor(xv + bv, (x, b), vjp, op="add_rowvec")


def nll_loss(log_probs, targets, mask) -> Tensor:
    """Mean negative log likelihood over masked-in rows.

    ``targets`` are class column indices; rows where ``mask`` is false do not
    contribute. The VJP places -1/m at each selected (row, target) entry.
    """
    log_probs = _wrap(log_probs)
    lp = _mat(log_probs, "nll_loss")
    targets = np.asarray(targets)
    mask = np.asarray(mask, dtype=bool)
    if targets.shape != (lp.shape[0],) or mask.shape != (lp.shape[0],):
        raise DimensionError(f"nll_loss: targets/mask must have {lp.shape[0]} entries")
    rows = np.nonzero(mask)[0]
    if rows.size == 0:
        raise EvaluationError("nll_loss: no masked-in rows to evaluate")
    picked = targets[rows].astype(np.int64)
    if picked.size and (picked.min() < 0 or picked.max() >= lp.shape[1]):
        raise IndexError(f"nll_loss: target class out of range for {lp.shape[1]} columns")
    m = rows.size
    loss = -float(np.sum(lp[rows, picked])) / m

    def vjp(g):
        out = np.zeros_like(lp)
        out[rows, picked] = -float(g) / m
        return (out,)

    return Tensor(np.float64(loss), (log_probs,), vjp, op="nll_loss")


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(leaf) into every reachable Parameter's grad.

    The root must be scalar. Each tape node is visited exactly once, in
    reverse topological order; parameter gradients add onto whatever is
    already in their buffers.
    """
    if np.ndim(root.value) != 0:
        raise DimensionError("backward: root must be a scalar tensor")
    order = _topo_order(root)
    grads: dict[int, np.ndarray] = {id(root): np.float64(1.0)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad += g
        if node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


def zero_grad(params) -> None:
    for p in params:
        p.zero_grad()


def check_gradients(forward, params, h: float = 1e-5) -> float:
    """Compare analytic gradients against central finite differences.

    ``forward`` must be a deterministic closure over ``params`` returning a
    scalar loss Tensor (dropout in eval mode, or masks pinned by a fixed
    stream). Returns the max relative error over all parameter coordinates,
    with denominators floored at 1e-8.
    """
    if h <= 0.0:
        raise ParameterError(f"check_gradients: step must be positive, got {h}")
    params = list(params)
    zero_grad(params)
    loss = forward()
    if not np.isfinite(loss.value):
        raise NumericError("check_gradients: non-finite loss")
    backward(loss)
    analytic = [p.grad.copy() for p in params]

    def eval_loss() -> float:
        val = float(forward().value)
        if not np.isfinite(val):
            raise NumericError("check_gradients: non-finite loss during probing")
        return val

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.value.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up = eval_loss()
            flat[i] = saved - h
            down = eval_loss()
            flat[i] = saved
            fd = (up - down) / (2.0 * h)
            denom = max(abs(fd), abs(gflat[i]), 1e-8)
            worst = max(worst, abs(fd - gflat[i]) / denom)
    return worst
