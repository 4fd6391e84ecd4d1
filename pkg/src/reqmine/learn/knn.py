import numpy as np
import scipy.sparse as sp


class KNearestNeighbors:
    """Vote-fraction kNN: cosine similarity on sparse input, Euclidean distance on dense."""

    kind = "knn"

    def __init__(self, k=5, metric="auto"):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.metric = metric

    def fit(self, x, y):
        self.sparse = sp.issparse(x)
        self.metric_ = self.metric if self.metric != "auto" else ("cosine" if self.sparse else "euclidean")
        self.x = sp.csr_matrix(x, dtype=float) if self.sparse else np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=int)
        self.majority = int((self.y == 1).sum() > (self.y == 0).sum())
        return self

    def _distances(self, x):
        if self.metric_ == "cosine":
            a = sp.csr_matrix(x, dtype=float) if sp.issparse(x) else sp.csr_matrix(np.asarray(x, dtype=float))
            b = sp.csr_matrix(self.x)
            na = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
            nb = np.sqrt(np.asarray(b.multiply(b).sum(axis=1)).ravel())
            sim = np.asarray((a @ b.T).todense())
            denom = np.outer(np.where(na > 0, na, 1), np.where(nb > 0, nb, 1))
            return 1.0 - sim / denom
        a = x.toarray() if sp.issparse(x) else np.asarray(x, dtype=float)
        b = self.x.toarray() if sp.issparse(self.x) else self.x
        d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2 * a @ b.T
        return np.sqrt(np.maximum(d2, 0))

    def predict_scores(self, x):
        n = x.shape[0]
        if n == 0:
            return np.zeros((0, 2))
        dist = np.round(self._distances(x), 12)
        k = min(self.k, self.y.size)
        nn = np.argsort(dist, axis=1, kind="stable")[:, :k]
        frac = self.y[nn].mean(axis=1)
        return np.column_stack([1 - frac, frac])

    def params(self):
        x = sp.csr_matrix(self.x)
        return {
            "sparse": self.sparse,
            "metric": self.metric_,
            "shape": list(x.shape),
            "indptr": x.indptr.tolist(),
            "indices": x.indices.tolist(),
            "data": x.data.tolist(),
            "y": self.y.tolist(),
        }

    def load(self, p):
        x = sp.csr_matrix((p["data"], p["indices"], p["indptr"]), shape=tuple(p["shape"]))
        self.sparse = p["sparse"]
        self.metric_ = p["metric"]
        self.x = x if self.sparse else x.toarray()
        self.y = np.asarray(p["y"], dtype=int)
        self.majority = int((self.y == 1).sum() > (self.y == 0).sum())
        return self
