"""L2-regularized logistic regression fit by Newton iteration.

The bias is unpenalized. The Hessian gets the ridge term plus a small
floor, so separable data stays solvable at any l2 in the grid.
"""

import numpy as np

from trialbench.models.base import FittedModel, ModelSpec


def sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_logistic_weights(X, y, l2, max_iter=100, tol=1e-8):
    """Newton-Raphson on the penalized cross-entropy; returns (w, b)."""
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(max_iter):
        z = X @ w + b
        p = sigmoid(z)
        grad_w = X.T @ (p - y) / n + l2 * w
        grad_b = float((p - y).mean())
        if max(np.abs(grad_w).max(initial=0.0), abs(grad_b)) <= tol:
            break
        r = np.maximum(p * (1.0 - p), 1e-12)
        xa = np.column_stack([X, np.ones(n)])
        h = (xa * r[:, None]).T @ xa / n
        h[np.arange(d), np.arange(d)] += l2
        h[np.arange(d + 1), np.arange(d + 1)] += 1e-12
        step = np.linalg.solve(h, np.append(grad_w, grad_b))
        w -= step[:d]
        b -= step[d]
    return w, b


class LogisticModel(FittedModel):
    def __init__(self, spec, weights, bias):
        super().__init__(spec, len(weights))
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)

    def score(self, X):
        X = self._check_width(X)
        return sigmoid(X @ self.weights + self.bias)

    def params_doc(self):
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "LogisticModel":
        return cls(spec, np.array(params["weights"]), params["bias"])


def fit(spec, X, y):
    w, b = fit_logistic_weights(X, y.astype(np.float64),
                                l2=float(spec.get("l2", 1e-3)),
                                max_iter=int(spec.get("max_iter", 100)),
                                tol=float(spec.get("tol", 1e-8)))
    return LogisticModel(spec, w, b)
