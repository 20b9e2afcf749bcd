"""Dispatch over the twelve classifier families."""

import numpy as np

from trialbench.errors import ShapeError
from trialbench.models import (adaboost, forest, gp, hgb, knn, logistic, mlp,
                               naive_bayes, qda, stacking, svm, tree)
from trialbench.models.base import (FAMILIES, ConstantModel, FittedModel,
                                    ModelSpec, constant_label_model,
                                    validate_hyperparams, validate_xy)

_MODULES = {
    "knn": knn,
    "gp_laplace": gp,
    "gaussian_nb": naive_bayes,
    "qda": qda,
    "decision_tree": tree,
    "adaboost": adaboost,
    "random_forest": forest,
    "mlp_bfgs": mlp,
    "hgbc": hgb,
    "svm_rbf": svm,
    "stacking": stacking,
    "logistic_regression": logistic,
}

_MODEL_CLASSES = {
    "knn": knn.KnnModel,
    "gp_laplace": gp.GpLaplaceModel,
    "gaussian_nb": naive_bayes.GaussianNBModel,
    "qda": qda.QdaModel,
    "decision_tree": tree.DecisionTreeModel,
    "adaboost": adaboost.AdaBoostModel,
    "random_forest": forest.RandomForestModel,
    "mlp_bfgs": mlp.MlpModel,
    "hgbc": hgb.HgbcModel,
    "svm_rbf": svm.SvmRbfModel,
    "stacking": stacking.StackingModel,
    "logistic_regression": logistic.LogisticModel,
}


def fit(spec: ModelSpec, X, y) -> FittedModel:
    """Train one classifier; deterministic under (spec.seed, inputs).

    Constant labels degrade every family to a constant predictor with a
    warning rather than an error.
    """
    validate_hyperparams(spec)
    X, y = validate_xy(X, y)
    degenerate = constant_label_model(spec, X, y)
    if degenerate is not None:
        return degenerate
    return _MODULES[spec.family].fit(spec, X, y)


def predict(fm: FittedModel, X) -> np.ndarray:
    return fm.predict(X)


def score(fm: FittedModel, X) -> np.ndarray:
    return fm.score(X)


def model_from_doc(doc: dict) -> FittedModel:
    """Rebuild a fitted model from its serialized document."""
    if doc.get("version") != 1:
        raise ShapeError(f"unsupported model document version {doc.get('version')!r}")
    spec = ModelSpec.from_doc(doc["spec"])
    params = doc["params"]
    if params.get("kind") == "constant":
        return ConstantModel(spec, params["n_features"], params["label"])
    return _MODEL_CLASSES[spec.family].from_doc(spec, params)


__all__ = ["FAMILIES", "ModelSpec", "FittedModel", "ConstantModel", "fit",
           "predict", "score", "model_from_doc", "validate_hyperparams"]
