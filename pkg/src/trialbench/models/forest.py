"""Random forest: bagged Gini trees with per-node feature subsampling."""

import math

import numpy as np

from trialbench import rng as rngmod
from trialbench.models.base import FittedModel, ModelSpec
from trialbench.models.tree import build_tree, tree_apply


def _mtry(max_features, d):
    if max_features == "sqrt" or max_features is None:
        return max(1, int(math.ceil(math.sqrt(d))))
    return max(1, min(int(max_features), d))


class RandomForestModel(FittedModel):
    def __init__(self, spec, n_features, trees):
        super().__init__(spec, n_features)
        self.trees = trees

    def score(self, X):
        X = self._check_width(X)
        total = np.zeros(X.shape[0])
        for nodes in self.trees:
            total += tree_apply(nodes, X)
        return total / len(self.trees)

    def params_doc(self):
        return {"trees": self.trees, "n_features": self.n_features}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "RandomForestModel":
        return cls(spec, params["n_features"], params["trees"])


def fit(spec, X, y):
    n, d = X.shape
    n_trees = int(spec.get("n_trees", 100))
    mtry = _mtry(spec.get("max_features", "sqrt"), d)
    max_depth = spec.get("max_depth", None)
    min_leaf = int(spec.get("min_samples_leaf", 1))
    trees = []
    for t in range(n_trees):
        gen = rngmod.spawn(spec.seed, "random-forest", t)
        rows = gen.integers(0, n, size=n)
        trees.append(build_tree(X, y, rows=rows, max_depth=max_depth,
                                min_samples_leaf=min_leaf, rng=gen, mtry=mtry))
    return RandomForestModel(spec, d, trees)
