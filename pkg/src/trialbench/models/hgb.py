"""Histogram-based gradient boosting for binary classification.

Continuous features are bucketed into at most max_bins quantile bins
once, so every split search scans bin statistics instead of sorted
values. Stage trees are grown on the logistic loss gradients/hessians;
the split gain is

    GL^2/(HL + l2) + GR^2/(HR + l2) - G^2/(H + l2)

maximized over prefix boundaries, and a leaf contributes
-G/(H + l2) scaled by the learning rate.
"""

import math

import numpy as np

from trialbench import kernels
from trialbench.models.base import FittedModel, ModelSpec
from trialbench.models.logistic import sigmoid

#: re-export of the split kernel under its operation name
hgb_best_split = kernels.best_split


def bin_edges(col, max_bins: int) -> np.ndarray:
    """Bin boundaries for one feature: midpoints of up to max_bins quantiles."""
    uniq = np.unique(col)
    if uniq.size <= max_bins:
        return (uniq[1:] + uniq[:-1]) / 2.0
    qs = np.quantile(col, np.arange(1, max_bins) / max_bins)
    return np.unique(qs)


def bin_features(X, max_bins: int):
    """Quantile-bin every column; returns (codes uint8, edges per column)."""
    n, d = X.shape
    codes = np.empty((n, d), dtype=np.uint8)
    edges = []
    for j in range(d):
        e = bin_edges(X[:, j], max_bins)
        edges.append(e)
        codes[:, j] = np.searchsorted(e, X[:, j], side="right")
    return np.ascontiguousarray(codes), edges


def _grow_stage_tree(codes, edges, rows, grad, hess, n_bins, l2, max_depth,
                     min_leaf):
    """One regression tree on (grad, hess); returns a flat node list.

    Inner nodes carry the real-valued threshold recovered from the bin
    edge, so prediction never needs the binning.
    """
    nodes = []

    def grow(node_rows, depth):
        idx = len(nodes)
        nodes.append(None)
        gsum, hsum, count = kernels.build_histograms(codes, node_rows, grad,
                                                     hess, n_bins)
        # bin sums of any one feature add up to the node totals
        g_tot = float(gsum[0].sum())
        h_tot = float(hsum[0].sum())
        depth_left = max_depth is None or depth < max_depth
        feature = bin_idx = -1
        if depth_left and node_rows.size >= 2 * min_leaf:
            feature, bin_idx, gain = kernels.best_split(gsum, hsum, count, l2,
                                                        min_leaf)
        if feature < 0:
            nodes[idx] = {"value": -g_tot / (h_tot + l2) if h_tot + l2 > 0 else 0.0}
            return idx
        go_left = codes[node_rows, feature] <= bin_idx
        left = grow(node_rows[go_left], depth + 1)
        right = grow(node_rows[~go_left], depth + 1)
        nodes[idx] = {"feature": int(feature), "bin": int(bin_idx),
                      "threshold": float(edges[feature][bin_idx]),
                      "left": left, "right": right}
        return idx

    grow(rows, 0)
    return nodes


def _stage_apply(nodes, X):
    out = np.empty(X.shape[0])
    stack = [(0, np.arange(X.shape[0]))]
    while stack:
        idx, rows = stack.pop()
        if rows.size == 0:
            continue
        node = nodes[idx]
        if "value" in node:
            out[rows] = node["value"]
            continue
        go_left = X[rows, node["feature"]] < node["threshold"]
        stack.append((node["left"], rows[go_left]))
        stack.append((node["right"], rows[~go_left]))
    return out


class HgbcModel(FittedModel):
    def __init__(self, spec, n_features, base_score, learning_rate, stages,
                 train_log_loss=None):
        super().__init__(spec, n_features)
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.stages = stages
        self.train_log_loss = train_log_loss  # per-stage, for diagnostics

    def decision(self, X) -> np.ndarray:
        X = self._check_width(X)
        f = np.full(X.shape[0], self.base_score)
        for nodes in self.stages:
            f += self.learning_rate * _stage_apply(nodes, X)
        return f

    def score(self, X):
        return sigmoid(self.decision(X))

    def params_doc(self):
        return {"base_score": self.base_score,
                "learning_rate": self.learning_rate,
                "stages": self.stages, "n_features": self.n_features}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "HgbcModel":
        return cls(spec, params["n_features"], params["base_score"],
                   params["learning_rate"], params["stages"])


def log_loss(y, p):
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())


def fit(spec, X, y):
    n, d = X.shape
    max_bins = int(spec.get("max_bins", 255))
    l2 = float(spec.get("l2", 1.0))
    lr = float(spec.get("learning_rate", 0.1))
    n_stages = int(spec.get("n_stages", 100))
    max_depth = spec.get("max_depth", 3)
    min_leaf = int(spec.get("min_samples_leaf", 1))

    codes, edges = bin_features(X, max_bins)
    n_bins = max((e.size + 1 for e in edges), default=1)
    y_f = y.astype(np.float64)
    base = math.log(y_f.mean() / (1.0 - y_f.mean()))
    f = np.full(n, base)
    rows = np.arange(n, dtype=np.int64)
    stages = []
    losses = []
    for _ in range(n_stages):
        p = sigmoid(f)
        grad = p - y_f
        hess = p * (1.0 - p)
        nodes = _grow_stage_tree(codes, edges, rows, grad, hess, n_bins, l2,
                                 max_depth, min_leaf)
        update = _stage_apply_codes(nodes, codes)
        f += lr * update
        stages.append(nodes)
        losses.append(log_loss(y_f, sigmoid(f)))
    return HgbcModel(spec, d, base, lr, stages, train_log_loss=losses)


def _stage_apply_codes(nodes, codes):
    """Apply a stage tree to the training rows via their bin codes."""
    out = np.empty(codes.shape[0])
    stack = [(0, np.arange(codes.shape[0]))]
    while stack:
        idx, rows = stack.pop()
        if rows.size == 0:
            continue
        node = nodes[idx]
        if "value" in node:
            out[rows] = node["value"]
            continue
        go_left = codes[rows, node["feature"]] <= node["bin"]
        stack.append((node["left"], rows[go_left]))
        stack.append((node["right"], rows[~go_left]))
    return out
