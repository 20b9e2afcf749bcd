"""Feedforward neural net trained by full-batch BFGS.

Tanh hidden layers, a single logistic output unit, mean cross-entropy
loss with an L2 weight penalty (biases unpenalized). The gradient comes
from backpropagation and is exposed for finite-difference checking.
"""

import numpy as np

from trialbench import rng as rngmod
from trialbench.models.base import FittedModel, ModelSpec
from trialbench.models.logistic import sigmoid
from trialbench.models.optim import bfgs_minimize


def layer_shapes(n_in, hidden):
    sizes = [n_in] + list(hidden) + [1]
    return [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]


def pack(weights, biases):
    return np.concatenate([w.ravel() for w in weights]
                          + [b.ravel() for b in biases])


def unpack(theta, shapes):
    weights, biases = [], []
    pos = 0
    for rows, cols in shapes:
        weights.append(theta[pos:pos + rows * cols].reshape(rows, cols))
        pos += rows * cols
    for _, cols in shapes:
        biases.append(theta[pos:pos + cols])
        pos += cols
    return weights, biases


def forward(theta, shapes, X):
    weights, biases = unpack(theta, shapes)
    activations = [X]
    a = X
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ w + b)
        activations.append(a)
    z_out = a @ weights[-1] + biases[-1]
    p = sigmoid(z_out[:, 0])
    return p, activations, weights, biases


def loss_and_grad(theta, shapes, X, y, l2):
    """Penalized cross-entropy and its gradient via backpropagation."""
    n = X.shape[0]
    p, activations, weights, biases = forward(theta, shapes, X)
    eps = 1e-12
    ce = -(y * np.log(p + eps) + (1.0 - y) * np.log(1.0 - p + eps)).mean()
    penalty = 0.5 * l2 * sum(float((w * w).sum()) for w in weights) / n
    delta = ((p - y) / n)[:, None]
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta + l2 * weights[layer] / n
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (1.0 - activations[layer] ** 2)
    return float(ce + penalty), pack(grad_w, grad_b)


def init_params(shapes, seed):
    gen = rngmod.spawn(seed, "mlp-init")
    weights, biases = [], []
    for rows, cols in shapes:
        limit = np.sqrt(6.0 / (rows + cols))
        weights.append(gen.uniform(-limit, limit, size=(rows, cols)))
        biases.append(np.zeros(cols))
    return pack(weights, biases)


class MlpModel(FittedModel):
    def __init__(self, spec, n_features, hidden, theta, converged=True):
        super().__init__(spec, n_features)
        self.hidden = tuple(int(h) for h in hidden)
        self.theta = np.asarray(theta, dtype=np.float64)
        self.converged = converged
        self._shapes = layer_shapes(n_features, self.hidden)

    def score(self, X):
        X = self._check_width(X)
        p, *_ = forward(self.theta, self._shapes, X)
        return p

    def params_doc(self):
        return {"hidden": list(self.hidden), "theta": self.theta.tolist(),
                "n_features": self.n_features, "converged": self.converged}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "MlpModel":
        return cls(spec, params["n_features"], params["hidden"],
                   np.array(params["theta"]), params.get("converged", True))


def fit(spec, X, y):
    hidden = tuple(int(h) for h in spec.get("hidden", (32,)))
    l2 = float(spec.get("l2", 1e-4))
    shapes = layer_shapes(X.shape[1], hidden)
    theta0 = init_params(shapes, spec.seed)
    y_f = y.astype(np.float64)
    result = bfgs_minimize(lambda t: loss_and_grad(t, shapes, X, y_f, l2),
                           theta0, tol=float(spec.get("tol", 1e-6)),
                           max_iter=int(spec.get("max_iter", 400)))
    return MlpModel(spec, X.shape[1], hidden, result.x, result.converged)
