"""Exhaustive grid search scored by stratified cross-validated MCC.

Every grid cell sees the same folds. The score table holds one row per
(cell, fold) plus the cell mean; selection is argmax mean score with
ties resolved to the lexicographically earliest cell in declared axis
order, then the winner is refitted on the full training set.
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from trialbench import metrics
from trialbench.dataset import Dataset
from trialbench.errors import HyperparameterError, UndefinedMetricError
from trialbench.models import ModelSpec, fit
from trialbench.models.base import validate_hyperparams
from trialbench.preprocess import stratified_kfold


@dataclass(frozen=True)
class GridSpec:
    """Finite hyperparameter axes for one family.

    Axis order matters: cells are enumerated in the declared order and
    ties in mean score go to the earliest cell.
    """

    family: str
    axes: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "axes", {k: list(v) for k, v in self.axes.items()})
        for name, values in self.axes.items():
            if not values:
                raise HyperparameterError(f"grid axis {name!r} is empty")

    def cells(self, seed: int = 0, threshold: float = 0.5):
        names = list(self.axes)
        for combo in itertools.product(*(self.axes[n] for n in names)):
            params = dict(zip(names, combo))
            yield ModelSpec(self.family, params, seed=seed, threshold=threshold)

    @property
    def n_cells(self) -> int:
        out = 1
        for values in self.axes.values():
            out *= len(values)
        return out

    def to_doc(self) -> dict:
        return {"family": self.family, "axes": dict(self.axes)}

    @classmethod
    def from_doc(cls, doc) -> "GridSpec":
        return cls(doc["family"], doc.get("axes", {}))


def default_grids() -> dict[str, GridSpec]:
    """Small standard grids; serialized into run configs as data."""
    return {g.family: g for g in (
        GridSpec("knn", {"k": [3, 5, 9, 15]}),
        GridSpec("gp_laplace", {"gamma": ["1/d", 0.01, 0.1, 1.0]}),
        GridSpec("gaussian_nb", {}),
        GridSpec("qda", {"shrinkage": [0.0, 0.1]}),
        GridSpec("decision_tree", {"max_depth": [3, 5, None]}),
        GridSpec("adaboost", {"n_stages": [50, 200]}),
        GridSpec("random_forest", {"n_trees": [100, 300]}),
        GridSpec("mlp_bfgs", {"hidden": [[16], [32], [64, 32]],
                              "l2": [1e-4, 1e-2]}),
        GridSpec("hgbc", {"max_depth": [3, 6, None],
                          "learning_rate": [0.05, 0.1, 0.3],
                          "l2": [0.0, 1.0, 10.0]}),
        GridSpec("svm_rbf", {"C": [0.1, 1.0, 10.0, 100.0],
                             "gamma": ["1/d", 0.01, 0.1, 1.0]}),
        GridSpec("stacking", {}),
        GridSpec("logistic_regression", {"l2": [1e-3, 1e-1, 1.0]}),
    )}


def desk_grids() -> dict[str, GridSpec]:
    """Slimmed grids for desk-scale simulation runs.

    Small-sample replicates (hundreds of rows) want the small-gamma
    kernel regime and shallow boosted trees; the full default_grids stay
    the benchmark default.
    """
    return {g.family: g for g in (
        GridSpec("svm_rbf", {"C": [10.0, 100.0], "gamma": [0.003, 0.01]}),
        GridSpec("hgbc", {"max_depth": [2, 3], "learning_rate": [0.3],
                          "l2": [1.0], "n_stages": [100]}),
        GridSpec("logistic_regression", {"l2": [1e-3, 1e-1, 1.0]}),
        GridSpec("mlp_bfgs", {"hidden": [[16]], "l2": [1e-2]}),
    )}


SCORERS = {"mcc": metrics.mcc, "accuracy": metrics.accuracy, "f1": metrics.f1}


@dataclass(frozen=True)
class GridSearchResult:
    best_spec: ModelSpec
    best_score: float
    table: list  # dicts: cell index, hyperparams, fold scores, mean, flagged
    best_model: object

    def table_rows(self):
        """Flat rows (one per cell per fold plus a mean row) for CSV output."""
        rows = []
        for entry in self.table:
            for fold, s in enumerate(entry["fold_scores"]):
                rows.append({"cell": entry["cell"], "fold": fold,
                             "score": s, **entry["hyperparams"]})
            rows.append({"cell": entry["cell"], "fold": "mean",
                         "score": entry["mean_score"], **entry["hyperparams"]})
        return rows


def _eval_cell(spec, fold_data, scorer):
    scores = []
    for X_tr, y_tr, X_te, y_te in fold_data:
        try:
            model = fit(spec, X_tr, y_tr)
            scores.append(float(scorer(metrics.confusion(y_te, model.predict(X_te)))))
        except UndefinedMetricError:
            scores.append(float("nan"))
    arr = np.asarray(scores)
    if np.isnan(arr).all():
        return scores, float("-inf"), True
    return scores, float(np.nanmean(arr)), bool(np.isnan(arr).any())


def grid_search(grid: GridSpec, train: Dataset, k: int = 5, scorer="mcc",
                seed: int = 0, threshold: float = 0.5,
                threads: int = 1) -> GridSearchResult:
    """Mean CV score for every cell; best cell refitted on all of train."""
    scorer_fn = SCORERS[scorer] if isinstance(scorer, str) else scorer
    X = train.matrix()
    y = np.asarray(train.labels)
    plans = stratified_kfold(train, k=k, seed=seed)
    fold_data = [(X[list(p.train)], y[list(p.train)],
                  X[list(p.test)], y[list(p.test)]) for p in plans]
    specs = list(grid.cells(seed=seed, threshold=threshold))
    for spec in specs:
        validate_hyperparams(spec)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda s: _eval_cell(s, fold_data, scorer_fn), specs))
    else:
        results = [_eval_cell(s, fold_data, scorer_fn) for s in specs]

    table = []
    best_idx = None
    best_mean = float("-inf")
    for idx, (spec, (fold_scores, mean_score, flagged)) in enumerate(
            zip(specs, results)):
        table.append({"cell": idx, "hyperparams": dict(spec.hyperparams),
                      "fold_scores": fold_scores, "mean_score": mean_score,
                      "flagged": flagged})
        if mean_score > best_mean:  # strict: first (lexicographic) cell wins ties
            best_mean = mean_score
            best_idx = idx
    if best_idx is None or not np.isfinite(best_mean):
        # every cell degenerate: fall back to the first cell, flagged
        best_idx = 0
        best_mean = table[0]["mean_score"]
    best_spec = specs[best_idx]
    best_model = fit(best_spec, X, y)
    return GridSearchResult(best_spec, float(best_mean), table, best_model)
