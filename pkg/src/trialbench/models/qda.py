"""Quadratic discriminant analysis with shrinkage-regularized covariances.

Class covariances can be shrunk toward a scaled identity,
(1 - shrinkage) * S + shrinkage * (trace(S)/d) * I, which keeps the
discriminants usable on strongly correlated features. Equal
discriminants fall to the lower class index.
"""

import numpy as np

from trialbench.errors import NumericalError
from trialbench.models.base import FittedModel, ModelSpec

_JITTERS = (0.0, 1e-9, 1e-6, 1e-3)


def _factor(cov):
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("class covariance not factorizable even with jitter")


class QdaModel(FittedModel):
    tie_to_lower = True

    def __init__(self, spec, n_features, means, covs, log_prior):
        super().__init__(spec, n_features)
        self.means = means      # (2, d)
        self.covs = covs        # (2, d, d)
        self.log_prior = log_prior
        self._chol = [_factor(covs[cls]) for cls in (0, 1)]
        self._log_det = [2.0 * np.log(np.diag(c)).sum() for c in self._chol]

    def discriminants(self, X) -> np.ndarray:
        X = self._check_width(X)
        out = np.empty((X.shape[0], 2))
        for cls in (0, 1):
            diff = X - self.means[cls]
            # forward solve L z = diff^T, then |z|^2 is the Mahalanobis term
            lz = np.linalg.solve(self._chol[cls], diff.T)
            maha = (lz ** 2).sum(axis=0)
            out[:, cls] = (-0.5 * self._log_det[cls] - 0.5 * maha
                           + self.log_prior[cls])
        return out

    def score(self, X):
        d = self.discriminants(X)
        shift = d.max(axis=1, keepdims=True)
        p = np.exp(d - shift)
        return p[:, 1] / p.sum(axis=1)

    def params_doc(self):
        return {"means": self.means.tolist(), "covs": self.covs.tolist(),
                "log_prior": self.log_prior.tolist()}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "QdaModel":
        means = np.array(params["means"])
        return cls(spec, means.shape[1], means, np.array(params["covs"]),
                   np.array(params["log_prior"]))


def fit(spec, X, y):
    d = X.shape[1]
    shrinkage = float(spec.get("shrinkage", 0.0))
    means = np.empty((2, d))
    covs = np.empty((2, d, d))
    log_prior = np.empty(2)
    for cls in (0, 1):
        rows = X[y == cls]
        means[cls] = rows.mean(axis=0)
        centered = rows - means[cls]
        cov = centered.T @ centered / rows.shape[0]
        if shrinkage > 0.0:
            cov = (1.0 - shrinkage) * cov \
                + shrinkage * (np.trace(cov) / d) * np.eye(d)
        # variance floor keeps degenerate classes factorizable
        cov[np.diag_indices(d)] = np.maximum(np.diag(cov), 1e-9)
        covs[cls] = cov
        log_prior[cls] = np.log(rows.shape[0] / X.shape[0])
    return QdaModel(spec, d, means, covs, log_prior)
