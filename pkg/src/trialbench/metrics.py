"""Confusion algebra and evaluation metrics.

Everything downstream scores models through this module: exact confusion
counts, accuracy, F1, the Matthews correlation coefficient, rank-based
AUC, percentile-bootstrap confidence intervals and cross-replicate
standard errors.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from trialbench import rng as rngmod
from trialbench.errors import ShapeError, UndefinedMetricError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for field in ("tp", "fp", "fn", "tn"):
            if getattr(self, field) < 0:
                raise ShapeError(f"negative confusion count {field}")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _binary(arr, name):
    arr = np.asarray(arr)
    if not np.isin(arr, (0, 1)).all():
        raise ShapeError(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Exact counts with positive class 1."""
    y_true = _binary(y_true, "y_true")
    y_pred = _binary(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    return ConfusionCounts(
        tp=int(((y_true == 1) & (y_pred == 1)).sum()),
        fp=int(((y_true == 0) & (y_pred == 1)).sum()),
        fn=int(((y_true == 1) & (y_pred == 0)).sum()),
        tn=int(((y_true == 0) & (y_pred == 0)).sum()))


def accuracy(c: ConfusionCounts) -> float:
    if c.n == 0:
        raise UndefinedMetricError("accuracy of zero predictions")
    return (c.tp + c.tn) / c.n


def f1(c: ConfusionCounts) -> float:
    """Harmonic mean of precision and recall; 0 when either is undefined."""
    if c.tp + c.fp == 0 or c.tp + c.fn == 0:
        return 0.0
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def mcc(c: ConfusionCounts, strict: bool = False) -> float:
    """Matthews correlation coefficient.

    (tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)). A zero factor
    in the denominator makes the coefficient undefined; the convention
    here returns 0 (random-equivalent). Pass strict=True to raise
    instead, which the bootstrap uses to redraw degenerate resamples.
    """
    denom = ((c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn))
    if denom == 0:
        if strict:
            raise UndefinedMetricError("MCC denominator has a zero factor")
        return 0.0
    # integer products stay exact well past any realistic count
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def mcc_degenerate(c: ConfusionCounts) -> bool:
    return ((c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)) == 0


def auc_roc(y_true, scores) -> float:
    """P(score of a positive > score of a negative) with half credit for ties.

    Computed from midranks in O(n log n); exactly the pair-counting value.
    """
    y_true = _binary(y_true, "y_true")
    scores = np.asarray(scores, dtype=np.float64)
    if y_true.shape != scores.shape:
        raise ShapeError("y_true and scores differ in length")
    n_pos = int(y_true.sum())
    n_neg = y_true.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(y_true.size)
    sorted_scores = scores[order]
    i = 0
    while i < sorted_scores.size:
        j = i
        while j + 1 < sorted_scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum_pos = float(ranks[y_true == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def bootstrap_ci(y_true, y_pred, metric, B: int = 1000, level: float = 0.95,
                 seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval of metric(confusion(resampled rows)).

    A resample on which the metric is undefined is redrawn, up to 10*B
    attempts in total.
    """
    y_true = _binary(y_true, "y_true")
    y_pred = _binary(y_pred, "y_pred")
    n = y_true.size
    if n < 10:
        raise ShapeError(f"bootstrap needs at least 10 rows, got {n}")
    gen = rngmod.spawn(seed, "bootstrap-ci")
    values = np.empty(B)
    attempts = 0
    got = 0
    while got < B:
        attempts += 1
        if attempts > 10 * B:
            raise UndefinedMetricError("bootstrap exhausted redraw budget; "
                                       "metric undefined on most resamples")
        rows = gen.integers(0, n, size=n)
        try:
            values[got] = metric(confusion(y_true[rows], y_pred[rows]))
        except UndefinedMetricError:
            continue
        got += 1
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(values, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def strict_mcc(c: ConfusionCounts) -> float:
    return mcc(c, strict=True)


def se_over_replicates(values) -> float:
    """Sample standard deviation divided by sqrt(n)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ShapeError("standard error needs at least 2 replicates")
    return float(values.std(ddof=1) / math.sqrt(values.size))


@dataclass(frozen=True)
class EvalReport:
    """One model evaluation: point metrics plus an MCC interval."""

    accuracy: float
    f1: float
    mcc: float
    auc: float
    mcc_ci: tuple[float, float]
    n: int

    def to_doc(self) -> dict:
        return {"accuracy": self.accuracy, "f1": self.f1, "mcc": self.mcc,
                "auc": self.auc, "mcc_ci": list(self.mcc_ci), "n": self.n}

    @classmethod
    def from_doc(cls, doc: dict) -> "EvalReport":
        return cls(accuracy=doc["accuracy"], f1=doc["f1"], mcc=doc["mcc"],
                   auc=doc["auc"], mcc_ci=tuple(doc["mcc_ci"]), n=int(doc["n"]))

    def to_json(self) -> str:
        return json.dumps(self.to_doc())


def evaluate(y_true, y_pred, scores, ci_seed: int = 0, B: int = 1000) -> EvalReport:
    """Full report for one prediction set."""
    c = confusion(y_true, y_pred)
    try:
        auc = auc_roc(y_true, scores)
    except UndefinedMetricError:
        auc = float("nan")
    ci = bootstrap_ci(y_true, y_pred, strict_mcc, B=B, seed=ci_seed)
    return EvalReport(accuracy=accuracy(c), f1=f1(c), mcc=mcc(c), auc=auc,
                      mcc_ci=ci, n=c.n)
