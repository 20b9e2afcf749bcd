"""Model interface: specs, fitted-model contract, validation, serialization.

Twelve binary classifier families share one fit/predict/score surface.
A FittedModel is immutable; predict and score are pure functions of the
stored parameters. Probability families threshold their score at 0.5
(configurable), margin families at 0. Families that declare a decision
tie-break to the lower class index use a strict comparison at the
threshold.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from trialbench.errors import HyperparameterError, ShapeError

FAMILIES = ("knn", "gp_laplace", "gaussian_nb", "qda", "decision_tree",
            "adaboost", "random_forest", "mlp_bfgs", "hgbc", "svm_rbf",
            "stacking", "logistic_regression")

MODEL_DOC_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    """A classifier family plus its hyperparameters and seed."""

    family: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise HyperparameterError(f"unknown model family {self.family!r}")
        object.__setattr__(self, "hyperparams", dict(self.hyperparams))

    def get(self, name, default):
        return self.hyperparams.get(name, default)

    def to_doc(self) -> dict:
        return {"family": self.family, "hyperparams": dict(self.hyperparams),
                "seed": self.seed, "threshold": self.threshold}

    @classmethod
    def from_doc(cls, doc: dict) -> "ModelSpec":
        return cls(family=doc["family"], hyperparams=doc.get("hyperparams", {}),
                   seed=int(doc.get("seed", 0)),
                   threshold=float(doc.get("threshold", 0.5)))


class FittedModel:
    """Base contract for trained predictors.

    Subclasses set is_margin (score is a signed margin rather than a
    probability), optionally tie_to_lower (exact threshold hits go to
    class 0), and implement score() plus parameter (de)serialization.
    """

    is_margin = False
    tie_to_lower = False

    def __init__(self, spec: ModelSpec, n_features: int):
        self.spec = spec
        self.n_features = int(n_features)

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def threshold(self) -> float:
        return self.spec.threshold

    def score(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        s = self.score(X)
        cut = 0.0 if self.is_margin else self.threshold
        if self.tie_to_lower:
            return (s > cut).astype(np.int8)
        return (s >= cut).astype(np.int8)

    def params_doc(self) -> dict:
        raise NotImplementedError

    def to_doc(self) -> dict:
        return {"version": MODEL_DOC_VERSION, "spec": self.spec.to_doc(),
                "params": self.params_doc()}

    def to_json(self) -> str:
        return json.dumps(self.to_doc())

    def _check_width(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected (n, {self.n_features}) features, "
                             f"got {X.shape}")
        return X


class ConstantModel(FittedModel):
    """Degenerate predictor returned when the training labels are constant."""

    def __init__(self, spec, n_features, label):
        super().__init__(spec, n_features)
        self.label = int(label)

    def score(self, X):
        X = self._check_width(X)
        return np.full(X.shape[0], float(self.label))

    def predict(self, X):
        X = self._check_width(X)
        return np.full(X.shape[0], self.label, dtype=np.int8)

    def params_doc(self):
        return {"kind": "constant", "label": self.label,
                "n_features": self.n_features}


def validate_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"y length {y.shape} does not match {X.shape[0]} rows")
    if not np.isfinite(X).all():
        raise ShapeError("X contains non-finite values; impute or drop first")
    if not np.isin(y, (0, 1)).all():
        raise ShapeError("y must contain only 0 and 1")
    return X, y.astype(np.int8)


def constant_label_model(spec, X, y):
    """ConstantModel when y has a single value, else None."""
    if np.all(y == y[0]):
        warnings.warn(f"training labels are constant ({int(y[0])}); "
                      f"{spec.family} degrades to a constant predictor",
                      stacklevel=3)
        return ConstantModel(spec, X.shape[1], int(y[0]))
    return None


# -- hyperparameter validation ------------------------------------------------


def _require(cond, message):
    if not cond:
        raise HyperparameterError(message)


def _positive_int(spec, name, default):
    v = spec.get(name, default)
    _require(isinstance(v, (int, np.integer)) and v >= 1,
             f"{spec.family}.{name} must be a positive integer, got {v!r}")
    return int(v)


def _nonneg_float(spec, name, default):
    v = spec.get(name, default)
    _require(isinstance(v, (int, float, np.floating)) and v >= 0,
             f"{spec.family}.{name} must be nonnegative, got {v!r}")
    return float(v)


def _gamma_value(spec, default="1/d"):
    v = spec.get("gamma", default)
    if v == "1/d":
        return v
    _require(isinstance(v, (int, float, np.floating)) and v > 0,
             f'{spec.family}.gamma must be positive or "1/d", got {v!r}')
    return float(v)


def resolve_gamma(gamma, n_features: int) -> float:
    return 1.0 / n_features if gamma == "1/d" else float(gamma)


def _depth(spec, name="max_depth", default=None):
    v = spec.get(name, default)
    if v is None:
        return None
    _require(isinstance(v, (int, np.integer)) and v >= 1,
             f"{spec.family}.{name} must be None or a positive integer, got {v!r}")
    return int(v)


def validate_hyperparams(spec: ModelSpec) -> None:
    """Raise HyperparameterError on any out-of-range hyperparameter."""
    fam = spec.family
    if fam == "knn":
        _positive_int(spec, "k", 5)
    elif fam == "svm_rbf":
        c = spec.get("C", 1.0)
        _require(isinstance(c, (int, float, np.floating)) and c > 0,
                 f"svm_rbf.C must be positive, got {c!r}")
        _gamma_value(spec)
    elif fam == "gp_laplace":
        _gamma_value(spec)
    elif fam == "hgbc":
        bins = spec.get("max_bins", 255)
        _require(isinstance(bins, (int, np.integer)) and 2 <= bins <= 255,
                 f"hgbc.max_bins must be in [2, 255], got {bins!r}")
        _positive_int(spec, "n_stages", 100)
        lr = spec.get("learning_rate", 0.1)
        _require(isinstance(lr, (int, float, np.floating)) and lr > 0,
                 f"hgbc.learning_rate must be positive, got {lr!r}")
        _nonneg_float(spec, "l2", 1.0)
        _depth(spec)
    elif fam == "mlp_bfgs":
        hidden = spec.get("hidden", (32,))
        _require(hasattr(hidden, "__len__") and len(hidden) > 0
                 and all(isinstance(h, (int, np.integer)) and h >= 1 for h in hidden),
                 f"mlp_bfgs.hidden must be a nonempty tuple of sizes, got {hidden!r}")
        _nonneg_float(spec, "l2", 1e-4)
    elif fam == "adaboost":
        _positive_int(spec, "n_stages", 50)
    elif fam == "random_forest":
        _positive_int(spec, "n_trees", 100)
        _depth(spec)
    elif fam == "decision_tree":
        _depth(spec)
        _positive_int(spec, "min_samples_leaf", 1)
    elif fam == "logistic_regression":
        _nonneg_float(spec, "l2", 1e-3)
    elif fam == "qda":
        sh = spec.get("shrinkage", 0.0)
        _require(isinstance(sh, (int, float, np.floating)) and 0 <= sh <= 1,
                 f"qda.shrinkage must be in [0, 1], got {sh!r}")
    elif fam == "stacking":
        _positive_int(spec, "k", 5)
