"""Latent representation and its label-guided perturbation.

The autoencoder is trained once; its encoder output ``Z`` stays frozen for
the whole run. At every hierarchy level a perturbed copy ``Z'`` is derived
from that frozen ``Z`` (never from a previous ``Z'``) by minimizing the
structural contrastive loss under the current labels, or by adding scaled
uniform noise.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .graph import Partition
from .kernel import (
    ConfigurationError,
    Mlp,
    SgdConfig,
    contrastive_loss,
    mlp_backward,
    mlp_forward,
    mlp_forward_cached,
    reconstruction_loss,
    sgd_train,
)

logger = logging.getLogger(__name__)

PERTURBATION_MODES = ("contrastive_full", "positive_only", "negative_only", "random_noise")
PERTURBATION_TARGETS = ("embedding", "encoder")

_LOSS_MODE = {
    "contrastive_full": "full",
    "positive_only": "positive_only",
    "negative_only": "negative_only",
}


@dataclass(frozen=True)
class EncoderConfig:
    """Autoencoder shape and training schedule.

    The encoder is ``D -> *hidden -> latent_dim`` and the decoder mirrors it.
    With ``passthrough`` the data itself is used as the embedding and no
    network is trained.
    """

    hidden: tuple[int, ...] = (500, 500, 2000)
    latent_dim: int = 256
    epochs: int = 200
    sgd: SgdConfig = field(default_factory=SgdConfig)
    passthrough: bool = False

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ConfigurationError("latent_dim must be >= 1")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if any(w < 1 for w in self.hidden):
            raise ConfigurationError("hidden widths must be positive")


@dataclass(frozen=True)
class PerturbationConfig:
    """How ``Z'`` is produced from ``Z`` at each level.

    ``relative_step`` multiplies the learning rate by the global standard
    deviation of ``Z`` so that the perturbation scales with the embedding
    (embedding target only).
    ``target="encoder"`` fine-tunes a copy of the trained encoder instead of
    optimizing the embedding rows directly; it needs a trained encoder.
    """

    mode: str = "contrastive_full"
    sgd: SgdConfig = field(default_factory=lambda: SgdConfig(epochs=50))
    relative_step: bool = True
    target: str = "embedding"

    def __post_init__(self):
        if self.mode not in PERTURBATION_MODES:
            raise ConfigurationError(f"unknown perturbation mode {self.mode!r}")
        if self.target not in PERTURBATION_TARGETS:
            raise ConfigurationError(f"unknown perturbation target {self.target!r}")


@dataclass
class Autoencoder:
    encoder: Mlp
    decoder: Mlp

    def encode(self, x: np.ndarray) -> np.ndarray:
        return mlp_forward(self.encoder, x)

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        return mlp_forward(self.decoder, self.encode(x))


@dataclass
class TrainedEmbedding:
    z: np.ndarray
    loss_trace: list[float]
    autoencoder: Autoencoder | None = None


def build_autoencoder(in_dim: int, cfg: EncoderConfig) -> Autoencoder:
    rng = np.random.default_rng(cfg.sgd.seed)
    enc_widths = [in_dim, *cfg.hidden, cfg.latent_dim]
    encoder = Mlp.init(enc_widths, rng)
    decoder = Mlp.init(enc_widths[::-1], rng)
    return Autoencoder(encoder, decoder)


def train_autoencoder(x: np.ndarray, cfg: EncoderConfig) -> TrainedEmbedding:
    """Fit the autoencoder on ``x`` and return the frozen embedding."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ConfigurationError("need at least two samples")
    if cfg.passthrough:
        return TrainedEmbedding(x.copy(), [])

    ae = build_autoencoder(x.shape[1], cfg)
    enc, dec = ae.encoder, ae.decoder
    params = enc.parameters() + dec.parameters()

    def loss_fn(idx):
        xb = x[idx]
        enc_out = mlp_forward_cached(enc, xb)
        dec_out = mlp_forward_cached(dec, enc_out[-1])
        loss, g = reconstruction_loss(xb, dec_out[-1])
        dec_grads, g_latent = mlp_backward(dec, dec_out, g)
        enc_grads, _ = mlp_backward(enc, enc_out, g_latent)
        return loss, enc_grads + dec_grads

    sgd = SgdConfig(cfg.sgd.learning_rate, cfg.sgd.batch_size, cfg.epochs,
                    cfg.sgd.seed, cfg.sgd.optimizer)
    trace = sgd_train(params, loss_fn, x.shape[0], sgd)
    return TrainedEmbedding(ae.encode(x), trace, ae)


def random_noise(z: np.ndarray, seed: int) -> np.ndarray:
    """``Z + U`` with ``U`` uniform in [-1, 1] rescaled to ``std(U) = std(Z)``."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=z.shape)
    su = u.std()
    return z + (u * (z.std() / su) if su > 0 else u * 0.0)


def perturb(z: np.ndarray, q: Partition, cfg: PerturbationConfig,
            x: np.ndarray | None = None, autoencoder: Autoencoder | None = None,
            trace: list[float] | None = None) -> np.ndarray:
    """Return a perturbed copy of ``z`` guided by the labels ``q``.

    ``z`` is never modified. In the contrastive modes the per-epoch mean
    batch loss is appended to ``trace`` when one is given.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != q.n:
        raise ConfigurationError(f"embedding has {z.shape[0]} rows, labels have {q.n}")

    if cfg.mode == "random_noise":
        return random_noise(z, cfg.sgd.seed)

    loss_mode = _LOSS_MODE[cfg.mode]
    if q.k < 2 and loss_mode != "positive_only":
        logger.warning("single-class labels: the push-apart term vanishes")

    lr = cfg.sgd.learning_rate
    if cfg.relative_step and cfg.target == "embedding":
        lr *= float(z.std())
    sgd = SgdConfig(lr, cfg.sgd.batch_size, cfg.sgd.epochs, cfg.sgd.seed, cfg.sgd.optimizer)
    labels = q.labels
    stats: Counter = Counter()

    if cfg.target == "encoder":
        if autoencoder is None or x is None:
            raise ConfigurationError("encoder target needs the trained autoencoder and the data")
        enc = autoencoder.encoder.copy()
        x = np.asarray(x, dtype=np.float64)

        def enc_loss(idx):
            if idx.size < 2:
                return 0.0, [np.zeros_like(p) for p in enc.parameters()]
            out = mlp_forward_cached(enc, x[idx])
            loss, g = contrastive_loss(out[-1], labels[idx], loss_mode, stats=stats)
            grads, _ = mlp_backward(enc, out, g)
            return loss, grads

        epoch_trace = sgd_train(enc.parameters(), enc_loss, q.n, sgd)
        z_prime = mlp_forward(enc, x)
    else:
        z_prime = z.copy()

        def emb_loss(idx):
            if idx.size < 2:
                return 0.0, [np.zeros((idx.size, z.shape[1]))]
            loss, g = contrastive_loss(z_prime[idx], labels[idx], loss_mode, stats=stats)
            return loss, [g]

        epoch_trace = sgd_train([z_prime], emb_loss, q.n, sgd, row_sparse=True)

    if stats:
        logger.debug("empty pair sets during perturbation: %s", dict(stats))
    if trace is not None:
        trace.extend(epoch_trace)
    return z_prime
