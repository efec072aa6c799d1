"""Logloss and AUC as used for evaluation, plus a quadratic AUC oracle."""

import logging
from typing import List, Optional, Sequence

import numpy as np

from app.schemas.reports import EvalMetrics

logger = logging.getLogger(__name__)

PROB_CLIP = 1e-7


def logloss(probabilities: Sequence[float], labels: Sequence[float]) -> float:
    """-(1/n) sum [y ln p + (1-y) ln(1-p)], p clipped to [1e-7, 1 - 1e-7]."""
    p = np.clip(np.asarray(probabilities, dtype=np.float64), PROB_CLIP, 1.0 - PROB_CLIP)
    y = np.asarray(labels, dtype=np.float64)
    if p.size == 0:
        raise ValueError("logloss of an empty set is undefined")
    if p.shape != y.shape:
        raise ValueError(f"{p.shape[0]} scores but {y.shape[0]} labels")
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def _class_counts(labels: np.ndarray):
    n_pos = int((labels == 1).sum())
    n_neg = int(labels.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined unless both classes are present")
    return n_pos, n_neg


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their rank span."""
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    boundaries = np.flatnonzero(np.diff(sorted_scores)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [scores.shape[0]]))
    tied_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    ranks[order] = np.repeat(tied_rank, ends - starts)
    return ranks


def auc(scores: Sequence[float], labels: Sequence[float]) -> float:
    """Mann-Whitney AUC via average ranks; tied cross-class pairs count 1/2."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape:
        raise ValueError(f"{s.shape[0]} scores but {y.shape[0]} labels")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos, n_neg = _class_counts(y)
    ranks = _average_ranks(s)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_bruteforce(scores: Sequence[float], labels: Sequence[float]) -> float:
    """Count every (positive, negative) pair; test oracle, O(n+ n-)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n_pos, n_neg = _class_counts(y)
    pos, neg = s[y == 1], s[y == 0]
    wins = 0.0
    for score in pos:
        wins += float((score > neg).sum()) + 0.5 * float((score == neg).sum())
    return wins / (n_pos * n_neg)


class MetricAccumulator:
    """Streaming logloss sum plus the (score, label) buffer AUC needs."""

    def __init__(self):
        self._loss_sum = 0.0
        self._scores: List[np.ndarray] = []
        self._labels: List[np.ndarray] = []
        self.n = 0

    def update(self, probabilities: np.ndarray, labels: np.ndarray) -> None:
        p = np.asarray(probabilities, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64)
        if p.size == 0:
            return
        self._loss_sum += logloss(p, y) * p.size
        self._scores.append(p)
        self._labels.append(y)
        self.n += p.size

    def result(self) -> EvalMetrics:
        if self.n == 0:
            raise ValueError("no predictions accumulated")
        scores = np.concatenate(self._scores)
        labels = np.concatenate(self._labels)
        try:
            value: Optional[float] = auc(scores, labels)
        except ValueError:
            logger.warning("AUC undefined: evaluation labels contain a single class")
            value = None
        return EvalMetrics(logloss=self._loss_sum / self.n, auc=value, n=self.n, n_pos=int(labels.sum()))


def evaluate(model, params, examples, chunk: int = 8192) -> EvalMetrics:
    """Score examples in chunks and summarise logloss / AUC."""
    acc = MetricAccumulator()
    acc.update(model.predict(examples, params, chunk=chunk), examples.labels)
    return acc.result()
