import math

import numpy as np
import scipy.sparse as sp

from .._rng import derive_rng


def _dense(x):
    return x.toarray() if sp.issparse(x) else np.asarray(x, dtype=float)


def _leaf_vote(counts, tie_class):
    if counts[0] == counts[1]:
        return tie_class
    return int(counts[1] > counts[0])


class DecisionTree:
    """Binary CART tree with Gini splits over a random feature subset at each node.

    Nodes are stored in flat arrays; ``feature == -1`` marks a leaf.
    """

    def __init__(self, max_depth=None, min_leaf=1, max_features=None, rng=None, tie_class=0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.rng = rng
        self.tie_class = tie_class

    def _best_split(self, x, y, idx):
        n = idx.size
        d = x.shape[1]
        m = self.max_features or d
        perm = self.rng.permutation(d) if m < d else np.arange(d)
        total1 = y[idx].sum()
        for start in range(0, d, m):
            feats = perm[start : start + m]
            sub = x[np.ix_(idx, feats)]
            # constant columns cannot split; skipping them saves the sort on sparse data
            varying = sub.max(axis=0) > sub.min(axis=0)
            if not varying.any():
                continue
            feats, sub = feats[varying], sub[:, varying]
            order = np.argsort(sub, axis=0, kind="stable")
            vals = np.take_along_axis(sub, order, axis=0)
            ys = y[idx][order]
            left1 = np.cumsum(ys, axis=0)[:-1]
            n_left = np.arange(1, n)[:, None]
            n_right = n - n_left
            right1 = total1 - left1
            p_l = left1 / n_left
            p_r = right1 / n_right
            gini = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
            valid = (vals[1:] > vals[:-1]) & (n_left >= self.min_leaf) & (n_right >= self.min_leaf)
            if not valid.any():
                continue
            gini = np.where(valid, gini, np.inf)
            flat = int(np.argmin(gini.T))  # feature-major: first feature, then lowest threshold
            j, pos = divmod(flat, n - 1)
            thr = (vals[pos, j] + vals[pos + 1, j]) / 2
            return int(feats[j]), float(thr)
        return None

    def fit(self, x, y, sample_idx=None):
        x = _dense(x)
        y = np.asarray(y, dtype=int)
        idx0 = np.arange(x.shape[0]) if sample_idx is None else np.asarray(sample_idx)
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node():
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append([0, 0])
            return len(feature) - 1

        root = new_node()
        stack = [(root, idx0, 0)]
        while stack:
            node, idx, depth = stack.pop()
            ys = y[idx]
            counts = [int((ys == 0).sum()), int((ys == 1).sum())]
            value[node] = counts
            if (
                counts[0] == 0
                or counts[1] == 0
                or (self.max_depth is not None and depth >= self.max_depth)
                or idx.size < 2 * self.min_leaf
            ):
                continue
            split = self._best_split(x, y, idx)
            if split is None:
                continue
            f, thr = split
            go_left = x[idx, f] <= thr
            feature[node], threshold[node] = f, thr
            l, r = new_node(), new_node()
            left[node], right[node] = l, r
            stack.append((r, idx[~go_left], depth + 1))
            stack.append((l, idx[go_left], depth + 1))
        self.feature = np.array(feature)
        self.threshold = np.array(threshold)
        self.left = np.array(left)
        self.right = np.array(right)
        self.value = np.array(value)
        return self

    def apply(self, x):
        x = _dense(x)
        node = np.zeros(x.shape[0], dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nd = node[rows]
            go_left = x[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, x):
        leaves = self.apply(x)
        return np.array([_leaf_vote(self.value[l], self.tie_class) for l in leaves], dtype=int)

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d, tie_class=0):
        t = cls(tie_class=tie_class)
        t.feature = np.asarray(d["feature"], dtype=int)
        t.threshold = np.asarray(d["threshold"], dtype=float)
        t.left = np.asarray(d["left"], dtype=int)
        t.right = np.asarray(d["right"], dtype=int)
        t.value = np.asarray(d["value"], dtype=int).reshape(-1, 2)
        return t


class RandomForest:
    """Bagged Gini trees with ``sqrt(d)`` candidate features per split; scores are vote fractions."""

    kind = "random_forest"

    def __init__(self, n_trees=100, max_depth=None, min_leaf=1, bootstrap=True, seed=0):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, x, y):
        x = _dense(x)
        y = np.asarray(y, dtype=int)
        n, d = x.shape
        self.majority = int((y == 1).sum() > (y == 0).sum())
        m = max(1, int(math.sqrt(d)))
        self.trees = []
        for t in range(self.n_trees):
            rng = derive_rng(self.seed, "tree", t)
            sample = rng.integers(0, n, size=n) if self.bootstrap else None
            tree = DecisionTree(self.max_depth, self.min_leaf, m, rng, self.majority)
            self.trees.append(tree.fit(x, y, sample))
        return self

    def predict_scores(self, x):
        x = _dense(x)
        if not self.trees or x.shape[0] == 0:
            return np.zeros((x.shape[0], 2))
        votes = np.mean([tree.predict(x) for tree in self.trees], axis=0)
        return np.column_stack([1 - votes, votes])

    def params(self):
        return {"majority": self.majority, "trees": [t.to_dict() for t in self.trees]}

    def load(self, p):
        self.majority = int(p["majority"])
        self.trees = [DecisionTree.from_dict(t, self.majority) for t in p["trees"]]
        return self
