"""Stacked ensemble: boosted trees and the RBF SVM under a logistic meta-model.

Level-1 probabilities are produced out-of-fold (stratified k-fold inside
the training set) so the meta-model never sees a level-1 prediction made
on its own training rows; the level-1 models are then refitted on the
full training set for prediction time.
"""

import numpy as np

from trialbench import rng as rngmod
from trialbench.models import hgb, svm
from trialbench.models.base import FittedModel, ModelSpec, constant_label_model
from trialbench.models.logistic import LogisticModel, fit_logistic_weights, sigmoid


def _oof_folds(y, k, seed):
    """Stratified fold ids for stacking's internal split (array level)."""
    gen = rngmod.spawn(seed, "stacking-folds")
    fold_of = np.empty(y.size, dtype=int)
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        members = members[gen.permutation(members.size)]
        fold_of[members] = np.arange(members.size) % k
    return fold_of


def _level1_specs(spec):
    hgb_params = dict(spec.get("hgbc", {"max_depth": 3, "learning_rate": 0.1,
                                        "l2": 1.0, "n_stages": 100}))
    svm_params = dict(spec.get("svm", {"C": 1.0, "gamma": "1/d"}))
    return (ModelSpec("hgbc", hgb_params, seed=spec.seed),
            ModelSpec("svm_rbf", svm_params, seed=spec.seed))


def _fit_level1(l1_spec, X, y):
    degenerate = constant_label_model(l1_spec, X, y)
    if degenerate is not None:
        return degenerate
    return (hgb if l1_spec.family == "hgbc" else svm).fit(l1_spec, X, y)


class StackingModel(FittedModel):
    def __init__(self, spec, n_features, level1, meta):
        super().__init__(spec, n_features)
        self.level1 = level1      # list of fitted level-1 models
        self.meta = meta          # LogisticModel over level-1 scores

    def _level1_scores(self, X):
        return np.column_stack([m.score(X) for m in self.level1])

    def score(self, X):
        X = self._check_width(X)
        return self.meta.score(self._level1_scores(X))

    def params_doc(self):
        return {"level1": [m.to_doc() for m in self.level1],
                "meta": self.meta.to_doc(), "n_features": self.n_features}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "StackingModel":
        from trialbench.models import model_from_doc
        level1 = [model_from_doc(doc) for doc in params["level1"]]
        meta = model_from_doc(params["meta"])
        return cls(spec, params["n_features"], level1, meta)


def fit(spec, X, y):
    k = int(spec.get("k", 5))
    k = min(k, int((y == 0).sum()), int((y == 1).sum()))
    k = max(k, 2)
    l1_specs = _level1_specs(spec)
    fold_of = _oof_folds(y, k, spec.seed)
    oof = np.zeros((X.shape[0], len(l1_specs)))
    for fold in range(k):
        holdout = fold_of == fold
        for s, l1_spec in enumerate(l1_specs):
            model = _fit_level1(l1_spec, X[~holdout], y[~holdout])
            oof[holdout, s] = model.score(X[holdout])
    w, b = fit_logistic_weights(oof, y.astype(np.float64),
                                l2=float(spec.get("meta_l2", 1e-3)))
    meta = LogisticModel(ModelSpec("logistic_regression",
                                   {"l2": spec.get("meta_l2", 1e-3)},
                                   seed=spec.seed), w, b)
    level1 = [_fit_level1(l1_spec, X, y) for l1_spec in l1_specs]
    return StackingModel(spec, X.shape[1], level1, meta)
