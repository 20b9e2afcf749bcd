"""Gaussian naive Bayes: per-class independent Gaussians per feature."""

import math

import numpy as np

from trialbench.models.base import FittedModel, ModelSpec

VAR_FLOOR = 1e-9


class GaussianNBModel(FittedModel):
    def __init__(self, spec, n_features, mean, var, log_prior):
        super().__init__(spec, n_features)
        self.mean = mean          # (2, d)
        self.var = var            # (2, d), floored
        self.log_prior = log_prior  # (2,)

    def _log_joint(self, X):
        out = np.empty((X.shape[0], 2))
        for cls in (0, 1):
            z = (X - self.mean[cls]) ** 2 / self.var[cls]
            out[:, cls] = (self.log_prior[cls]
                           - 0.5 * (np.log(2.0 * math.pi * self.var[cls]).sum()
                                    + z.sum(axis=1)))
        return out

    def score(self, X):
        X = self._check_width(X)
        lj = self._log_joint(X)
        shift = lj.max(axis=1, keepdims=True)
        p = np.exp(lj - shift)
        return p[:, 1] / p.sum(axis=1)

    def params_doc(self):
        return {"mean": self.mean.tolist(), "var": self.var.tolist(),
                "log_prior": self.log_prior.tolist()}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "GaussianNBModel":
        mean = np.array(params["mean"])
        return cls(spec, mean.shape[1], mean, np.array(params["var"]),
                   np.array(params["log_prior"]))


def fit(spec, X, y):
    mean = np.empty((2, X.shape[1]))
    var = np.empty((2, X.shape[1]))
    log_prior = np.empty(2)
    for cls in (0, 1):
        rows = X[y == cls]
        mean[cls] = rows.mean(axis=0)
        var[cls] = np.maximum(rows.var(axis=0), VAR_FLOOR)
        log_prior[cls] = math.log(rows.shape[0] / X.shape[0])
    return GaussianNBModel(spec, X.shape[1], mean, var, log_prior)
