"""End-to-end run: embed, build the merge hierarchy, score every level by
nearest-neighbor consensus and keep the best one."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .consensus import ConsensusRecord, nnc_score
from .graph import Partition, merge_step
from .kernel import ConfigurationError
from .representation import EncoderConfig, PerturbationConfig, perturb, train_autoencoder

logger = logging.getLogger(__name__)

SELECT_FROM = ("original", "perturbed")


@dataclass(frozen=True)
class RunConfig:
    """Full run configuration.

    ``seed`` overrides the seeds of the encoder and perturbation optimizers.
    ``score=False`` builds the hierarchy on ``Z`` only, without perturbing.
    """

    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    select_from: str = "original"
    seed: int = 3407
    score: bool = True

    def __post_init__(self):
        if self.select_from not in SELECT_FROM:
            raise ConfigurationError(f"select_from must be one of {SELECT_FROM}")

    def seeded(self) -> "RunConfig":
        enc = replace(self.encoder, sgd=replace(self.encoder.sgd, seed=self.seed))
        pert = replace(self.perturbation, sgd=replace(self.perturbation.sgd, seed=self.seed))
        return replace(self, encoder=enc, perturbation=pert)


@dataclass
class RunResult:
    records: list[ConsensusRecord]
    hierarchy: list[Partition]
    chosen: ConsensusRecord | None
    labels: Partition
    z_dim: int
    ae_loss: list[float]
    cl_loss: list[list[float]]
    config: RunConfig
    warnings: list[str] = field(default_factory=list)

    @property
    def k_star(self) -> int:
        return self.labels.k


PerturbObserver = Callable[[int, np.ndarray, Partition, np.ndarray], None]


def select_record(records: list[ConsensusRecord]) -> ConsensusRecord:
    """Highest score; the earliest level wins a tie."""
    best = records[0]
    for rec in records[1:]:
        if rec.nnc > best.nnc:
            best = rec
    return best


def run(x: np.ndarray, cfg: RunConfig | None = None,
        observer: PerturbObserver | None = None) -> RunResult:
    """Cluster ``x`` and pick the number of clusters by consensus.

    ``observer(level, z_in, labels, z_prime)`` is called after every
    perturbation; it must not modify its arguments.
    """
    cfg = (cfg or RunConfig()).seeded()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 4:
        raise ConfigurationError("need a 2-D dataset with at least 4 samples")
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("dataset contains NaN or infinite values")

    emb = train_autoencoder(x, cfg.encoder)
    z = emb.z
    z.setflags(write=False)

    g = merge_step(z, Partition.singletons(x.shape[0]))
    hierarchy = [g]
    records: list[ConsensusRecord] = []
    cl_loss: list[list[float]] = []
    level = 1
    while g.k >= 3:
        start = time.perf_counter()
        g_next = merge_step(z, g)
        if cfg.score:
            trace: list[float] = []
            z_prime = perturb(z, g, cfg.perturbation, x=x, autoencoder=emb.autoencoder,
                              trace=trace)
            if observer is not None:
                observer(level, z, g, z_prime)
            g_prime = merge_step(z_prime, g)
            score = nnc_score(g_next, g_prime)
            records.append(ConsensusRecord(
                level=level + 1, k=g_next.k, labels=g_next, k_perturbed=g_prime.k,
                nnc=score, seconds=time.perf_counter() - start, perturbed_labels=g_prime,
            ))
            cl_loss.append(trace)
            logger.info("level %d: K=%d K'=%d NNC=%.4f", level + 1, g_next.k, g_prime.k, score)
        hierarchy.append(g_next)
        g = g_next
        level += 1

    warnings = []
    if records:
        chosen = select_record(records)
        labels = chosen.labels if cfg.select_from == "original" else chosen.perturbed_labels
    else:
        chosen = None
        labels = hierarchy[0]
        if cfg.score:
            msg = f"first merge already produced K={labels.k}; nothing to score"
            logger.warning(msg)
            warnings.append(msg)

    return RunResult(records, hierarchy, chosen, labels, z.shape[1], emb.loss_trace,
                     cl_loss, cfg, warnings)


def hierarchy_trace(result: RunResult) -> list[tuple[int, float]]:
    """``(K, NNC)`` per scored level, K decreasing."""
    if not result.records:
        raise ConfigurationError("run produced no scored levels")
    return [(r.k, r.nnc) for r in result.records]
