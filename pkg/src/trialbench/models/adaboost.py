"""Adaptive boosting of decision stumps.

Classic discrete boosting on labels in {-1, +1}: each stage fits the
stump with the smallest weighted error, reweights the sample, and adds
the stump with weight alpha = 0.5 ln((1 - err)/err). Stages are only
accepted while their weighted error stays below one half; the margin
sum is the decision score.
"""

import math

import numpy as np

from trialbench.models.base import FittedModel, ModelSpec

_ERR_FLOOR = 1e-12


def _best_stump(X, y_pm, w, sort_orders):
    """Minimum weighted-error stump over all features and polarities.

    A stump is (feature, threshold, left_sign): predict left_sign where
    x <= threshold and -left_sign elsewhere. Scanning features and
    thresholds in ascending order keeps ties deterministic.
    """
    best = None
    for j, order in enumerate(sort_orders):
        v = X[order, j]
        boundary = v[:-1] != v[1:]
        if not boundary.any():
            continue
        w_pos_total = float((w * (y_pm > 0)).sum())
        prefix = np.cumsum(w[order] * y_pm[order])[:-1]  # sum_left(w * y)
        cum_w = np.cumsum(w[order])[:-1]                 # sum_left(w)
        left_pos = (cum_w + prefix) / 2.0
        left_neg = cum_w - left_pos
        right_pos = w_pos_total - left_pos
        err_left_plus = left_neg + right_pos   # predict +1 left, -1 right
        err_left_minus = 1.0 - err_left_plus   # weights are normalized
        for sign, err in ((1.0, err_left_plus), (-1.0, err_left_minus)):
            masked = np.where(boundary, err, np.inf)
            i = int(np.argmin(masked))
            if not np.isfinite(masked[i]):
                continue
            e = float(masked[i])
            if best is None or e < best[0] - 1e-15:
                thr = (v[i] + v[i + 1]) / 2.0
                best = (e, j, float(thr), sign)
    return best


class AdaBoostModel(FittedModel):
    is_margin = True

    def __init__(self, spec, n_features, stumps):
        super().__init__(spec, n_features)
        self.stumps = stumps  # list of (alpha, feature, threshold, left_sign)

    def score(self, X):
        X = self._check_width(X)
        margin = np.zeros(X.shape[0])
        for alpha, feature, threshold, left_sign in self.stumps:
            h = np.where(X[:, feature] <= threshold, left_sign, -left_sign)
            margin += alpha * h
        return margin

    def params_doc(self):
        return {"stumps": [list(s) for s in self.stumps],
                "n_features": self.n_features}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "AdaBoostModel":
        return cls(spec, params["n_features"],
                   [tuple(s) for s in params["stumps"]])


def fit(spec, X, y):
    n = X.shape[0]
    y_pm = np.where(y == 1, 1.0, -1.0)
    w = np.full(n, 1.0 / n)
    sort_orders = [np.argsort(X[:, j], kind="stable") for j in range(X.shape[1])]
    stumps = []
    for _ in range(int(spec.get("n_stages", 50))):
        found = _best_stump(X, y_pm, w, sort_orders)
        if found is None:
            break
        err, feature, threshold, left_sign = found
        if err >= 0.5 - _ERR_FLOOR:
            break  # no weak learner better than chance remains
        err = max(err, _ERR_FLOOR)
        alpha = 0.5 * math.log((1.0 - err) / err)
        stumps.append((alpha, feature, threshold, left_sign))
        h = np.where(X[:, feature] <= threshold, left_sign, -left_sign)
        w *= np.exp(-alpha * y_pm * h)
        w /= w.sum()
        if err <= _ERR_FLOOR:
            break  # perfect stage; further reweighting is degenerate
    return AdaBoostModel(spec, X.shape[1], stumps)
