"""CART decision tree with the Gini criterion.

Splits are searched exhaustively over features and midpoint thresholds;
equal-gain candidates resolve to the lowest feature index, then the
lowest threshold. The same builder serves the standalone tree and the
random forest (which passes a feature-subsampling rng).
"""

import numpy as np

from trialbench.models.base import FittedModel, ModelSpec


def _gini(pos, total):
    p = pos / total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split_on(X, y, rows, feature, min_leaf):
    """Best (gain, threshold) for one feature, or None."""
    values = X[rows, feature]
    order = np.argsort(values, kind="stable")
    v = values[order]
    t = y[rows][order].astype(np.float64)
    m = rows.size
    pos_left = np.cumsum(t)[:-1]
    n_left = np.arange(1, m)
    boundary = v[:-1] != v[1:]
    if min_leaf > 1:
        boundary &= (n_left >= min_leaf) & (m - n_left >= min_leaf)
    if not boundary.any():
        return None
    total_pos = pos_left[-1] + t[-1]
    parent = _gini(total_pos, m)
    n_right = m - n_left
    gini_l = 1.0 - (pos_left / n_left) ** 2 - ((n_left - pos_left) / n_left) ** 2
    pos_right = total_pos - pos_left
    gini_r = 1.0 - (pos_right / n_right) ** 2 - ((n_right - pos_right) / n_right) ** 2
    gain = parent - (n_left * gini_l + n_right * gini_r) / m
    gain = np.where(boundary, gain, -np.inf)
    best = int(np.argmax(gain))  # first max: lowest threshold wins ties
    if gain[best] <= 0.0:
        return None
    threshold = (v[best] + v[best + 1]) / 2.0
    return float(gain[best]), threshold


def build_tree(X, y, rows=None, max_depth=None, min_samples_leaf=1,
               rng=None, mtry=None):
    """Grow a tree depth-first; returns a flat node list.

    Inner nodes are {"feature", "threshold", "left", "right"}; leaves
    are {"p": class-1 fraction, "n": samples}. When rng and mtry are
    given, each node considers a random feature subset (forest mode).
    """
    if rows is None:
        rows = np.arange(X.shape[0])
    nodes = []

    def grow(node_rows, depth):
        idx = len(nodes)
        nodes.append(None)
        ys = y[node_rows]
        p1 = float(ys.mean())
        depth_left = max_depth is None or depth < max_depth
        if p1 in (0.0, 1.0) or not depth_left or node_rows.size < 2 * min_samples_leaf:
            nodes[idx] = {"p": p1, "n": int(node_rows.size)}
            return idx
        if rng is not None and mtry is not None and mtry < X.shape[1]:
            features = np.sort(rng.choice(X.shape[1], size=mtry, replace=False))
        else:
            features = range(X.shape[1])
        best = None
        for j in features:
            found = _best_split_on(X, y, node_rows, j, min_samples_leaf)
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], j, found[1])
        if best is None:
            nodes[idx] = {"p": p1, "n": int(node_rows.size)}
            return idx
        _, feature, threshold = best
        go_left = X[node_rows, feature] <= threshold
        left = grow(node_rows[go_left], depth + 1)
        right = grow(node_rows[~go_left], depth + 1)
        nodes[idx] = {"feature": int(feature), "threshold": float(threshold),
                      "left": left, "right": right}
        return idx

    grow(np.asarray(rows), 0)
    return nodes


def tree_apply(nodes, X) -> np.ndarray:
    """Leaf class-1 fraction for every row of X."""
    out = np.empty(X.shape[0])
    stack = [(0, np.arange(X.shape[0]))]
    while stack:
        idx, rows = stack.pop()
        if rows.size == 0:
            continue
        node = nodes[idx]
        if "p" in node:
            out[rows] = node["p"]
            continue
        go_left = X[rows, node["feature"]] <= node["threshold"]
        stack.append((node["left"], rows[go_left]))
        stack.append((node["right"], rows[~go_left]))
    return out


class DecisionTreeModel(FittedModel):
    def __init__(self, spec, n_features, nodes):
        super().__init__(spec, n_features)
        self.nodes = nodes

    def score(self, X):
        return tree_apply(self.nodes, self._check_width(X))

    def params_doc(self):
        return {"nodes": self.nodes, "n_features": self.n_features}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "DecisionTreeModel":
        return cls(spec, params["n_features"], params["nodes"])


def fit(spec, X, y):
    nodes = build_tree(X, y, max_depth=spec.get("max_depth", None),
                       min_samples_leaf=int(spec.get("min_samples_leaf", 1)))
    return DecisionTreeModel(spec, X.shape[1], nodes)
