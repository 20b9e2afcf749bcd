"""Gaussian process classifier with the Laplace approximation.

An RBF-kernel GP prior over a latent function is squashed through the
logistic link. The posterior mode is found by the stabilized Newton
iteration (W^1/2 formulation); predictions average the logistic over
the Gaussian latent marginal with 9-node Gauss-Hermite quadrature.
"""

import numpy as np

from trialbench import kernels
from trialbench.errors import NumericalError
from trialbench.models.base import FittedModel, ModelSpec, resolve_gamma
from trialbench.models.logistic import sigmoid

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)
_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(9)


def _cholesky_b(K, w):
    sw = np.sqrt(w)
    b = np.eye(K.shape[0]) + sw[:, None] * K * sw[None, :]
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(b + jitter * np.eye(K.shape[0])), sw
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("Laplace inner matrix not factorizable")


def laplace_mode(K, y_pm, tol: float = 1e-8, max_iter: int = 100) -> np.ndarray:
    """Latent posterior mode: the fixed point f = K * grad log p(y | f).

    y_pm holds labels in {-1, +1}; the likelihood is logistic. Newton
    steps use the W^1/2-stabilized system and iterate until the update
    norm drops to tol.
    """
    K = np.asarray(K, dtype=np.float64)
    t = (np.asarray(y_pm, dtype=np.float64) + 1.0) / 2.0
    f = np.zeros(K.shape[0])
    for _ in range(max_iter):
        pi = sigmoid(f)
        w = np.maximum(pi * (1.0 - pi), 1e-12)
        grad = t - pi
        chol, sw = _cholesky_b(K, w)
        b_vec = w * f + grad
        inner = np.linalg.solve(chol, sw * (K @ b_vec))
        a = b_vec - sw * np.linalg.solve(chol.T, inner)
        f_new = K @ a
        if float(np.linalg.norm(f_new - f)) <= tol:
            return f_new
        f = f_new
    raise NumericalError(f"Laplace Newton iteration did not reach {tol} "
                         f"in {max_iter} steps")


class GpLaplaceModel(FittedModel):
    def __init__(self, spec, n_features, X_train, grad_at_mode, w_at_mode,
                 gamma):
        super().__init__(spec, n_features)
        self.X_train = np.asarray(X_train, dtype=np.float64)
        self.grad_at_mode = np.asarray(grad_at_mode, dtype=np.float64)
        self.w_at_mode = np.asarray(w_at_mode, dtype=np.float64)
        self.gamma = float(gamma)
        K = np.exp(-self.gamma * kernels.pairwise_sq_dists(self.X_train,
                                                           self.X_train))
        self._chol, self._sw = _cholesky_b(K, self.w_at_mode)

    def score(self, X):
        X = self._check_width(X)
        k_star = np.exp(-self.gamma * kernels.pairwise_sq_dists(self.X_train, X))
        mean = k_star.T @ self.grad_at_mode
        v = np.linalg.solve(self._chol, self._sw[:, None] * k_star)
        var = np.maximum(1.0 - (v * v).sum(axis=0), 1e-12)
        # E[sigmoid(f*)] under N(mean, var), Gauss-Hermite with 9 nodes
        z = mean[:, None] + np.sqrt(2.0 * var)[:, None] * _GH_NODES[None, :]
        return (sigmoid(z) @ _GH_WEIGHTS) / np.sqrt(np.pi)

    def params_doc(self):
        return {"X_train": self.X_train.tolist(),
                "grad_at_mode": self.grad_at_mode.tolist(),
                "w_at_mode": self.w_at_mode.tolist(),
                "gamma": self.gamma, "n_features": self.n_features}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "GpLaplaceModel":
        return cls(spec, params["n_features"], np.array(params["X_train"]),
                   np.array(params["grad_at_mode"]),
                   np.array(params["w_at_mode"]), params["gamma"])


def fit(spec, X, y):
    gamma = resolve_gamma(spec.get("gamma", "1/d"), X.shape[1])
    y_pm = np.where(y == 1, 1.0, -1.0)
    K = np.exp(-gamma * kernels.pairwise_sq_dists(X, X))
    f_hat = laplace_mode(K, y_pm)
    pi = sigmoid(f_hat)
    t = (y_pm + 1.0) / 2.0
    return GpLaplaceModel(spec, X.shape[1], X, t - pi,
                          np.maximum(pi * (1.0 - pi), 1e-12), gamma)
