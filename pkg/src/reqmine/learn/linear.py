import numpy as np
import scipy.sparse as sp

from .._rng import derive_rng


def _with_bias(x):
    ones = np.ones((x.shape[0], 1))
    if sp.issparse(x):
        return sp.hstack([x, sp.csr_matrix(ones)], format="csr")
    return np.hstack([np.asarray(x, dtype=float), ones])


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1 / (1 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1 + ez)
    return out


class LogisticRegression:
    """L2-regularized logistic regression fitted by full-batch gradient descent.

    Step sizes come from Armijo backtracking; the bias is not penalized.
    """

    kind = "logreg"

    def __init__(self, l2_lambda=1e-3, max_iter=500, tol=1e-6):
        self.l2_lambda = l2_lambda
        self.max_iter = max_iter
        self.tol = tol

    def _loss_grad(self, xb, s, w):
        z = np.asarray(xb @ w).ravel()
        m = s * z
        loss = np.mean(np.logaddexp(0, -m))
        r = -s * _sigmoid(-m)
        grad = np.asarray(xb.T @ r).ravel() / xb.shape[0]
        pen = w.copy()
        pen[-1] = 0.0
        loss += 0.5 * self.l2_lambda * float(pen @ pen)
        grad += self.l2_lambda * pen
        return loss, grad

    def fit(self, x, y):
        xb = _with_bias(x)
        s = np.where(np.asarray(y) == 1, 1.0, -1.0)
        w = np.zeros(xb.shape[1])
        step = 1.0
        loss, grad = self._loss_grad(xb, s, w)
        self.n_iter = 0
        for it in range(self.max_iter):
            gnorm2 = float(grad @ grad)
            if np.sqrt(gnorm2) < self.tol:
                break
            step *= 2.0
            while True:
                cand = w - step * grad
                c_loss, c_grad = self._loss_grad(xb, s, cand)
                if c_loss <= loss - 0.5 * step * gnorm2 or step < 1e-12:
                    break
                step *= 0.5
            w, loss, grad = cand, c_loss, c_grad
            self.n_iter = it + 1
        self.coef = w[:-1]
        self.intercept = float(w[-1])
        return self

    def decision_function(self, x):
        return np.asarray(x @ self.coef).ravel() + self.intercept

    def predict_scores(self, x):
        p = _sigmoid(self.decision_function(x))
        return np.column_stack([1 - p, p])

    def params(self):
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    def load(self, p):
        self.coef = np.asarray(p["coef"], dtype=float)
        self.intercept = float(p["intercept"])
        return self


class LinearSVM:
    """Hinge-loss linear SVM trained with the Pegasos step schedule ``1/(lambda*t)``.

    A constant feature stands in for the bias. Rows are visited in a seeded
    shuffled order each epoch; the returned weights average the end-of-epoch
    iterates of the second half of training.
    """

    kind = "linear_svm"

    MIN_STEPS = 6000

    def __init__(self, l2_lambda=1e-3, epochs=20, seed=0):
        self.l2_lambda = l2_lambda
        self.epochs = epochs
        self.seed = seed

    def fit(self, x, y):
        xb = _with_bias(x)
        s = np.where(np.asarray(y) == 1, 1.0, -1.0)
        n, d = xb.shape
        lam = self.l2_lambda
        rng = derive_rng(self.seed, "svm-shuffle")
        v = np.zeros(d)
        scale = 1.0  # w = scale * v
        if sp.issparse(xb):
            xb = sp.csr_matrix(xb)
            rows = [(xb.indices[xb.indptr[i] : xb.indptr[i + 1]], xb.data[xb.indptr[i] : xb.indptr[i + 1]]) for i in range(n)]
        else:
            full = np.arange(d)
            rows = [(full, xb[i]) for i in range(n)]
        t = 0
        # small sets get extra epochs; a few hundred 1/(lambda*t) steps are far from converged
        epochs = max(self.epochs, -(-self.MIN_STEPS // n))
        # the last iterate is noisy, so average end-of-epoch iterates over the second half
        avg, n_avg = np.zeros(d), 0
        for epoch in range(epochs):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (lam * t)
                idx, val = rows[i]
                margin = s[i] * scale * float(v[idx] @ val)
                scale *= 1.0 - eta * lam
                if scale <= 0.0:
                    v[:] = 0.0
                    scale = 1.0
                if margin < 1.0:
                    v[idx] += (eta * s[i] / scale) * val
                if scale < 1e-9:
                    v *= scale
                    scale = 1.0
            if 2 * (epoch + 1) > epochs:
                avg += scale * v
                n_avg += 1
        w = avg / n_avg
        self.coef = w[:-1]
        self.intercept = float(w[-1])
        return self

    def decision_function(self, x):
        return np.asarray(x @ self.coef).ravel() + self.intercept

    def predict_scores(self, x):
        m = self.decision_function(x)
        return np.column_stack([-m, m])

    def params(self):
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    def load(self, p):
        self.coef = np.asarray(p["coef"], dtype=float)
        self.intercept = float(p["intercept"])
        return self
