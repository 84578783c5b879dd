"""Partition agreement: the nearest-neighbor consensus score and the external
clustering metrics (ACC, NMI, purity, pairwise F-score)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Partition
from .kernel import ConfigurationError


@dataclass(frozen=True)
class ConsensusRecord:
    """One scored hierarchy level."""

    level: int
    k: int
    labels: Partition
    k_perturbed: int
    nnc: float
    seconds: float
    perturbed_labels: Partition | None = None


def _check_lengths(p: Partition, q: Partition) -> None:
    if p.n != q.n:
        raise ConfigurationError(f"partitions cover {p.n} and {q.n} samples")


def confusion(p: Partition, q: Partition) -> np.ndarray:
    """``counts[a, b]`` = number of samples labelled ``a`` in ``p`` and ``b`` in ``q``."""
    _check_lengths(p, q)
    counts = np.zeros((p.k, q.k), dtype=np.int64)
    np.add.at(counts, (p.labels, q.labels), 1)
    return counts


def hungarian_max(counts: np.ndarray) -> tuple[list[tuple[int, int]], int]:
    """Maximum-weight one-to-one matching of rows to columns.

    A rectangular matrix is zero-padded to square first, so surplus labels
    stay unmatched. Returns the matched ``(row, col)`` pairs that lie inside
    the original matrix and the matched total.
    """
    counts = np.asarray(counts)
    if counts.ndim != 2 or counts.size == 0:
        raise ConfigurationError("need a non-empty 2-D matrix")
    n = max(counts.shape)
    padded = np.zeros((n, n), dtype=counts.dtype)
    padded[:counts.shape[0], :counts.shape[1]] = counts
    rows, cols = linear_sum_assignment(padded, maximize=True)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols)
             if r < counts.shape[0] and c < counts.shape[1]]
    total = padded[rows, cols].sum()
    return pairs, total.item()


def nnc_score(p: Partition, q: Partition) -> float:
    """Fraction of samples on which two partitions agree under the best
    one-to-one relabeling."""
    _, matched = hungarian_max(confusion(p, q))
    return matched / p.n


def metric_acc(pred: Partition, truth: Partition) -> float:
    return nnc_score(pred, truth)


def _entropy(counts: np.ndarray, n: int) -> float:
    prob = counts[counts > 0] / n
    return float(-np.sum(prob * np.log(prob)))


def metric_nmi(pred: Partition, truth: Partition) -> float:
    """Mutual information normalized by the geometric mean of the entropies."""
    c = confusion(pred, truth)
    n = pred.n
    h_pred = _entropy(c.sum(axis=1), n)
    h_truth = _entropy(c.sum(axis=0), n)
    if h_pred == 0.0 or h_truth == 0.0:
        return 1.0 if pred.k == 1 and truth.k == 1 else 0.0
    joint = c[c > 0] / n
    outer = np.outer(c.sum(axis=1), c.sum(axis=0))[c > 0] / (n * n)
    mi = float(np.sum(joint * np.log(joint / outer)))
    return max(0.0, min(1.0, mi / np.sqrt(h_pred * h_truth)))


def metric_purity(pred: Partition, truth: Partition) -> float:
    return float(confusion(pred, truth).max(axis=1).sum()) / pred.n


def _pairs(counts: np.ndarray) -> int:
    counts = counts.astype(np.int64)
    return int(np.sum(counts * (counts - 1) // 2))


def metric_fscore(pred: Partition, truth: Partition) -> float:
    """Pairwise F1 over same-cluster sample pairs."""
    c = confusion(pred, truth)
    tp = _pairs(c)
    pred_pairs = _pairs(c.sum(axis=1))
    truth_pairs = _pairs(c.sum(axis=0))
    precision = tp / pred_pairs if pred_pairs else 0.0
    recall = tp / truth_pairs if truth_pairs else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def external_metrics(pred: Partition, truth: Partition) -> dict[str, float]:
    return {
        "acc": metric_acc(pred, truth),
        "nmi": metric_nmi(pred, truth),
        "pur": metric_purity(pred, truth),
        "f": metric_fscore(pred, truth),
    }
