"""Dense numeric substrate: a small MLP with hand-written backprop, the two
training losses, and a deterministic mini-batch optimizer.

Everything here works on float64 numpy arrays so that finite-difference
gradient checks stay meaningful.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

logger = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "identity")
CONTRASTIVE_MODES = ("full", "positive_only", "negative_only")
OPTIMIZERS = ("adam", "sgd")


class ConfigurationError(ValueError):
    """Raised when shapes or configuration values are inconsistent."""


class TrainingDivergedError(FloatingPointError):
    """Raised when a training loss becomes NaN or infinite."""


@dataclass(frozen=True)
class SgdConfig:
    """Mini-batch optimizer settings.

    ``optimizer`` selects the update rule: ``"adam"`` (default) or plain
    ``"sgd"``. Both are driven by the same seeded shuffle, so a fixed
    config reproduces a run bit for bit.
    """

    learning_rate: float = 3e-4
    batch_size: int = 256
    epochs: int = 1
    seed: int = 3407
    optimizer: str = "adam"

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 2:
            raise ConfigurationError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class Layer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str = "identity"

    @property
    def fan_in(self) -> int:
        return self.weight.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[1]


@dataclass
class Mlp:
    """A feed-forward network as an ordered list of dense layers."""

    layers: list[Layer] = field(default_factory=list)

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ConfigurationError(
                    f"layer widths do not chain: {prev.fan_out} -> {nxt.fan_in}"
                )
        for layer in self.layers:
            if layer.activation not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {layer.activation!r}")
            if layer.bias.shape != (layer.fan_out,):
                raise ConfigurationError("bias length must equal fan_out")

    @classmethod
    def init(cls, widths: Sequence[int], rng: np.random.Generator,
             activations: Sequence[str] | None = None) -> "Mlp":
        """Glorot-uniform weights, zero biases.

        By default hidden layers use relu and the last layer is linear.
        """
        if len(widths) < 2:
            raise ConfigurationError("need at least an input and an output width")
        n = len(widths) - 1
        if activations is None:
            activations = ["relu"] * (n - 1) + ["identity"]
        if len(activations) != n:
            raise ConfigurationError("one activation per layer required")
        layers = []
        for fan_in, fan_out, act in zip(widths[:-1], widths[1:], activations):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            layers.append(Layer(w, np.zeros(fan_out), act))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def out_dim(self) -> int:
        return self.layers[-1].fan_out

    def parameters(self) -> list[np.ndarray]:
        """Flat list [W0, b0, W1, b1, ...] sharing memory with the layers."""
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def copy(self) -> "Mlp":
        return Mlp([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])


def _activate(h: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(h, 0.0)
    return h


def mlp_forward(params: Mlp, x: np.ndarray) -> np.ndarray:
    return mlp_forward_cached(params, x)[-1]


def mlp_forward_cached(params: Mlp, x: np.ndarray) -> list[np.ndarray]:
    """Forward pass returning every layer output, input first."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.in_dim:
        raise ConfigurationError(
            f"input has shape {x.shape}, network expects (*, {params.in_dim})"
        )
    outputs = [x]
    for layer in params.layers:
        outputs.append(_activate(outputs[-1] @ layer.weight + layer.bias, layer.activation))
    return outputs


def mlp_backward(params: Mlp, outputs: list[np.ndarray], grad_out: np.ndarray):
    """Backpropagate ``grad_out`` (dLoss/dOutput) through the network.

    Returns ``(grads, grad_input)`` where ``grads`` is ordered like
    :meth:`Mlp.parameters`.
    """
    grads: list[np.ndarray] = []
    g = grad_out
    for i in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[i]
        if layer.activation == "relu":
            g = g * (outputs[i + 1] > 0)
        grads.append(g.sum(axis=0))
        grads.append(outputs[i].T @ g)
        g = g @ layer.weight.T
    grads.reverse()
    return grads, g


def reconstruction_loss(x: np.ndarray, x_hat: np.ndarray) -> tuple[float, np.ndarray]:
    """Sum over samples of squared row error, and its gradient w.r.t. ``x_hat``."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ConfigurationError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    diff = x_hat - x
    return float(np.sum(diff * diff)), 2.0 * diff


def batch_distance_matrix(z_batch: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances within a batch (B x B, zero diagonal)."""
    z_batch = np.asarray(z_batch, dtype=np.float64)
    if z_batch.ndim != 2 or z_batch.shape[0] < 2:
        raise ConfigurationError("a batch needs at least two rows")
    return squareform(pdist(z_batch))


def contrastive_loss(z_batch: np.ndarray, labels: np.ndarray, mode: str = "full",
                     d: np.ndarray | None = None,
                     stats: Counter | None = None) -> tuple[float, np.ndarray]:
    """Mean same-label distance minus mean different-label distance.

    Pairs are ordered ``(i, j)`` with ``i != j``. ``mode`` keeps both terms
    (``"full"``), only the pull term (``"positive_only"``) or only the push
    term (``"negative_only"``). A term whose pair set is empty in this batch
    contributes zero; the event is counted in ``stats`` when given.

    Returns the loss and its gradient with respect to ``z_batch``. Coincident
    points get a zero subgradient for their pair.
    """
    if mode not in CONTRASTIVE_MODES:
        raise ConfigurationError(f"unknown contrastive mode {mode!r}")
    z_batch = np.asarray(z_batch, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape != (z_batch.shape[0],):
        raise ConfigurationError(
            f"labels length {labels.shape} does not match batch of {z_batch.shape[0]}"
        )
    if d is None:
        d = batch_distance_matrix(z_batch)

    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    diff = labels[:, None] != labels[None, :]

    weights = np.zeros_like(d)
    if mode != "negative_only":
        n_pos = int(same.sum())
        if n_pos:
            weights[same] = 1.0 / n_pos
        elif stats is not None:
            stats["empty_positive"] += 1
    if mode != "positive_only":
        n_neg = int(diff.sum())
        if n_neg:
            weights[diff] = -1.0 / n_neg
        elif stats is not None:
            stats["empty_negative"] += 1

    loss = float(np.sum(weights * d))
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(d > 0, weights / d, 0.0)
    # d D_ij / d z_i = (z_i - z_j) / D_ij; weights are symmetric, hence the 2
    grad = 2.0 * (coef.sum(axis=1)[:, None] * z_batch - coef @ z_batch)
    return loss, grad


class _Adam:
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads, lr, rows=None):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if rows is not None:
                mr = self.beta1 * m[rows] + (1 - self.beta1) * g
                vr = self.beta2 * v[rows] + (1 - self.beta2) * g * g
                m[rows] = mr
                v[rows] = vr
                p[rows] -= lr * (mr / c1) / (np.sqrt(vr / c2) + self.eps)
            else:
                m *= self.beta1
                m += (1 - self.beta1) * g
                v *= self.beta2
                v += (1 - self.beta2) * g * g
                p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _Sgd:
    def __init__(self, params):
        pass

    def step(self, params, grads, lr, rows=None):
        for p, g in zip(params, grads):
            if rows is not None:
                p[rows] -= lr * g
            else:
                p -= lr * g


LossFn = Callable[[np.ndarray], tuple[float, list[np.ndarray]]]


def sgd_train(params: list[np.ndarray], loss_fn: LossFn, n_samples: int,
              cfg: SgdConfig, row_sparse: bool = False,
              batch_trace: list[float] | None = None) -> list[float]:
    """Run ``cfg.epochs`` of seeded mini-batch optimization, updating
    ``params`` in place.

    Parameters
    ----------
    params : list of ndarray
        Arrays to optimize. Mutated in place; pass copies to keep originals.
    loss_fn : callable
        ``loss_fn(batch_indices) -> (loss, grads)`` with ``grads`` aligned to
        ``params``.
    n_samples : int
        Number of samples shuffled into batches each epoch. The last batch
        may be short.
    cfg : SgdConfig
    row_sparse : bool
        When true, every parameter has one row per sample and ``loss_fn``
        returns gradients only for the batch rows; only those rows (and their
        optimizer state) are touched.
    batch_trace : list, optional
        If given, every batch loss is appended to it.

    Returns
    -------
    list of float
        Mean batch loss per epoch.
    """
    if n_samples < 1:
        raise ConfigurationError("no samples to train on")
    rng = np.random.default_rng(cfg.seed)
    opt = _Adam(params) if cfg.optimizer == "adam" else _Sgd(params)
    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_samples)
        losses = []
        for start in range(0, n_samples, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_fn(idx)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at epoch {epoch + 1}, batch starting at {start}"
                )
            if cfg.learning_rate > 0:
                opt.step(params, grads, cfg.learning_rate, rows=idx if row_sparse else None)
            losses.append(loss)
            if batch_trace is not None:
                batch_trace.append(loss)
        trace.append(float(np.mean(losses)))
        logger.debug("epoch %d/%d loss %.6g", epoch + 1, cfg.epochs, trace[-1])
    return trace
