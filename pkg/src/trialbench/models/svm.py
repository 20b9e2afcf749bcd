"""Support vector machine with an RBF kernel, trained by SMO.

The dual is solved by the deterministic SMO kernel; decisions use the
raw margin (threshold 0). For score-based consumers (AUC, stacking) the
margin is passed through a Platt-style sigmoid fitted on the training
margins with the usual smoothed targets.
"""

import numpy as np

from trialbench import kernels
from trialbench.errors import ShapeError
from trialbench.models.base import FittedModel, ModelSpec, resolve_gamma
from trialbench.models.logistic import sigmoid


def smo_solve(K, y_pm, C, tol=1e-3, max_passes=10000):
    """Solve the SVM dual on a precomputed Gram matrix.

    K must be symmetric; y_pm holds labels in {-1, +1}. Returns
    (alpha, b) with 0 <= alpha <= C, sum(alpha * y) = 0 and KKT
    violations within tol at convergence.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"Gram matrix must be square, got {K.shape}")
    if not np.array_equal(K, K.T):
        raise ShapeError("Gram matrix must be symmetric")
    if not C > 0:
        raise ShapeError(f"C must be positive, got {C}")
    alpha, b, _converged = kernels.smo_solve(K, y_pm, C, tol, max_passes)
    return alpha, b


def kkt_violations(K, y_pm, alpha, b, C) -> np.ndarray:
    """Per-point violation of the KKT optimality conditions."""
    u = K @ (alpha * y_pm) + b
    margins = y_pm * u
    viol = np.zeros_like(margins)
    at_zero = alpha <= 1e-12
    at_c = alpha >= C - 1e-12
    interior = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    viol[interior] = np.abs(margins[interior] - 1.0)
    return viol


def fit_platt(margins, y, max_iter=100):
    """Newton fit of p = sigmoid(a*m + c) with Platt's smoothed targets."""
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, c = 1.0, 0.0
    for _ in range(max_iter):
        p = sigmoid(a * margins + c)
        grad_a = float(((p - t) * margins).mean())
        grad_c = float((p - t).mean())
        if max(abs(grad_a), abs(grad_c)) < 1e-10:
            break
        r = np.maximum(p * (1.0 - p), 1e-12)
        haa = float((r * margins * margins).mean()) + 1e-12
        hac = float((r * margins).mean())
        hcc = float(r.mean()) + 1e-12
        det = haa * hcc - hac * hac
        if det <= 0:
            break
        a -= (hcc * grad_a - hac * grad_c) / det
        c -= (haa * grad_c - hac * grad_a) / det
    return float(a), float(c)


class SvmRbfModel(FittedModel):
    is_margin = True

    def __init__(self, spec, n_features, support, sv_coef, bias, gamma,
                 platt=None):
        super().__init__(spec, n_features)
        self.support = np.asarray(support, dtype=np.float64)   # (m, d)
        self.sv_coef = np.asarray(sv_coef, dtype=np.float64)   # alpha_i * y_i
        self.bias = float(bias)
        self.gamma = float(gamma)
        self.platt = platt  # (a, c) or None

    def margin(self, X) -> np.ndarray:
        X = self._check_width(X)
        if self.support.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        kx = np.exp(-self.gamma * kernels.pairwise_sq_dists(X, self.support))
        return kx @ self.sv_coef + self.bias

    def score(self, X):
        m = self.margin(X)
        if self.platt is None:
            return m
        a, c = self.platt
        return sigmoid(a * m + c)

    def predict(self, X):
        return (self.margin(X) >= 0.0).astype(np.int8)

    def params_doc(self):
        return {"support": self.support.tolist(),
                "sv_coef": self.sv_coef.tolist(), "bias": self.bias,
                "gamma": self.gamma,
                "platt": list(self.platt) if self.platt else None,
                "n_features": self.n_features}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "SvmRbfModel":
        platt = params.get("platt")
        return cls(spec, params["n_features"], np.array(params["support"]),
                   np.array(params["sv_coef"]), params["bias"],
                   params["gamma"], tuple(platt) if platt else None)


def fit(spec, X, y):
    gamma = resolve_gamma(spec.get("gamma", "1/d"), X.shape[1])
    C = float(spec.get("C", 1.0))
    tol = float(spec.get("tol", 1e-3))
    max_passes = int(spec.get("max_passes", 10000))
    y_pm = np.where(y == 1, 1.0, -1.0)
    K = np.exp(-gamma * kernels.pairwise_sq_dists(X, X))
    alpha, b = smo_solve(K, y_pm, C, tol, max_passes)
    sv = alpha > 1e-12
    platt = None
    if spec.get("calibrate", True):
        margins = K[:, sv] @ (alpha * y_pm)[sv] + b
        platt = fit_platt(margins, y)
    return SvmRbfModel(spec, X.shape[1], X[sv], (alpha * y_pm)[sv], b, gamma,
                       platt=platt)
