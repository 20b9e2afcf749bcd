"""k-nearest-neighbor classifier over Euclidean distance.

Neighbor order is (distance, training index), so equidistant points
resolve deterministically; vote ties go to class 0.
"""

import numpy as np

from trialbench import kernels
from trialbench.models.base import FittedModel, ModelSpec


class KnnModel(FittedModel):
    tie_to_lower = True

    def __init__(self, spec, X, y):
        super().__init__(spec, X.shape[1])
        self.X = np.array(X)
        self.y = np.array(y, dtype=np.int8)
        self.k = min(int(spec.get("k", 5)), X.shape[0])

    def score(self, X):
        X = self._check_width(X)
        dists = kernels.pairwise_sq_dists(X, self.X)
        order = np.argsort(dists, axis=1, kind="stable")[:, :self.k]
        return self.y[order].mean(axis=1)

    def params_doc(self):
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_doc(cls, spec: ModelSpec, params: dict) -> "KnnModel":
        return cls(spec, np.array(params["X"], dtype=np.float64),
                   np.array(params["y"], dtype=np.int8))


def fit(spec, X, y):
    return KnnModel(spec, X, y)
