"""Greedy forward feature selection validated by stratified k-fold MCC.

One greedy ordering is computed per (model spec, dataset, seed) up to
the largest requested fraction; each fraction then truncates that
ordering, which makes the prefix property across fractions exact.
Candidate units are source features: the indicator block of a one-hot
encoded categorical is added or skipped as a whole.
"""

import json
from dataclasses import dataclass

import numpy as np

from trialbench import metrics
from trialbench.dataset import Dataset
from trialbench.errors import HyperparameterError
from trialbench.models import ModelSpec, fit
from trialbench.preprocess import feature_groups, stratified_kfold

FRACTIONS = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class SelectionTrace:
    selected: tuple            # source feature names, in selection order
    scores: tuple              # mean CV MCC after each addition
    stopping_reason: str       # fraction_reached | no_improvement

    def __post_init__(self):
        if len(self.selected) != len(self.scores):
            raise HyperparameterError("trace lengths differ")
        if len(set(self.selected)) != len(self.selected):
            raise HyperparameterError("selected features repeat")

    def to_doc(self):
        return {"selected": list(self.selected), "scores": list(self.scores),
                "stopping_reason": self.stopping_reason}

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_doc(), fh, indent=2)
            fh.write("\n")


def _cv_mcc(spec, X, y, col_idx, fold_plans):
    scores = []
    for plan in fold_plans:
        tr = list(plan.train)
        te = list(plan.test)
        model = fit(spec, X[np.ix_(tr, col_idx)], y[tr])
        pred = model.predict(X[np.ix_(te, col_idx)])
        scores.append(metrics.mcc(metrics.confusion(y[te], pred)))
    return float(np.mean(scores))


def greedy_ordering(spec: ModelSpec, train: Dataset, max_features: int,
                    min_gain: float = 1e-4, seed: int = 0, k: int = 5):
    """Greedy forward ordering of source features with its score path.

    Folds are fixed once and reused for every candidate at every step.
    Stops early when the best addition improves the running score by
    less than min_gain. Returns (names, scores, stopped_early).
    """
    X = train.matrix()
    y = np.asarray(train.labels)
    groups = feature_groups(train.specs)
    fold_plans = stratified_kfold(train, k=k, seed=seed)
    selected: list[str] = []
    selected_cols: list[int] = []
    scores: list[float] = []
    current = -np.inf
    while len(selected) < min(max_features, len(groups)):
        best = None
        for name, cols in groups:
            if name in selected:
                continue
            cand_score = _cv_mcc(spec, X, y, selected_cols + cols, fold_plans)
            if best is None or cand_score > best[0]:
                best = (cand_score, name, cols)
        if best is None:
            break
        gain = best[0] - (current if np.isfinite(current) else 0.0)
        if selected and gain < min_gain:
            return selected, scores, True
        if not selected and best[0] < min_gain:
            return selected, scores, True
        current = best[0]
        selected.append(best[1])
        selected_cols.extend(best[2])
        scores.append(best[0])
    return selected, scores, False


def forward_select(spec: ModelSpec, train: Dataset, fraction: float,
                   min_gain: float = 1e-4, seed: int = 0, k: int = 5,
                   ordering=None) -> SelectionTrace:
    """SelectionTrace for one inclusion fraction.

    Pass ordering (from greedy_ordering at the largest fraction) to
    truncate a precomputed path; otherwise one is computed here.
    """
    groups = feature_groups(train.specs)
    d = len(groups)
    target = int(np.ceil(fraction * d))
    if target < 1:
        raise HyperparameterError(f"fraction {fraction} selects no features "
                                  f"out of {d}")
    if ordering is None:
        ordering = greedy_ordering(spec, train, target, min_gain, seed, k)
    names, scores, stopped_early = ordering
    if len(names) >= target:
        return SelectionTrace(tuple(names[:target]), tuple(scores[:target]),
                              "fraction_reached")
    return SelectionTrace(tuple(names), tuple(scores), "no_improvement"
                          if stopped_early else "fraction_reached")
