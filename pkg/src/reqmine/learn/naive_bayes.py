import numpy as np
import scipy.sparse as sp

from ..errors import TrainingError


class DomainError(TrainingError):
    pass


def _logsumexp_rows(a):
    m = a.max(axis=1, keepdims=True)
    return m + np.log(np.exp(a - m).sum(axis=1, keepdims=True))


class MultinomialNB:
    kind = "multinomial_nb"

    def __init__(self, alpha=1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = alpha

    def fit(self, x, y):
        values = x.data if sp.issparse(x) else np.asarray(x)
        if values.size and values.min() < 0:
            raise DomainError("multinomial_nb needs non-negative features; use gaussian_nb for embeddings")
        counts = np.vstack([np.asarray(x[y == c].sum(axis=0)).ravel() for c in (0, 1)])
        smoothed = counts + self.alpha
        self.feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
        n_c = np.array([(y == 0).sum(), (y == 1).sum()], dtype=float)
        self.class_log_prior = np.log(n_c / n_c.sum())
        return self

    def joint_log_likelihood(self, x):
        return np.asarray(x @ self.feature_log_prob.T) + self.class_log_prior

    def predict_scores(self, x):
        jll = self.joint_log_likelihood(x)
        return np.exp(jll - _logsumexp_rows(jll))

    def params(self):
        return {"class_log_prior": self.class_log_prior.tolist(), "feature_log_prob": self.feature_log_prob.tolist()}

    def load(self, p):
        self.class_log_prior = np.asarray(p["class_log_prior"])
        self.feature_log_prob = np.asarray(p["feature_log_prob"])
        return self


class GaussianNB:
    kind = "gaussian_nb"

    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def fit(self, x, y):
        x = x.toarray() if sp.issparse(x) else np.asarray(x, dtype=float)
        self.theta = np.vstack([x[y == c].mean(axis=0) for c in (0, 1)])
        self.var = np.maximum(np.vstack([x[y == c].var(axis=0) for c in (0, 1)]), self.var_floor)
        n_c = np.array([(y == 0).sum(), (y == 1).sum()], dtype=float)
        self.class_log_prior = np.log(n_c / n_c.sum())
        return self

    def joint_log_likelihood(self, x):
        x = x.toarray() if sp.issparse(x) else np.asarray(x, dtype=float)
        out = []
        for c in (0, 1):
            ll = -0.5 * np.log(2 * np.pi * self.var[c]).sum()
            ll = ll - 0.5 * (((x - self.theta[c]) ** 2) / self.var[c]).sum(axis=1)
            out.append(ll + self.class_log_prior[c])
        return np.column_stack(out)

    def predict_scores(self, x):
        jll = self.joint_log_likelihood(x)
        return np.exp(jll - _logsumexp_rows(jll))

    def params(self):
        return {"class_log_prior": self.class_log_prior.tolist(), "theta": self.theta.tolist(), "var": self.var.tolist()}

    def load(self, p):
        self.class_log_prior = np.asarray(p["class_log_prior"])
        self.theta = np.asarray(p["theta"])
        self.var = np.asarray(p["var"])
        return self
