"""Classifiers and oversampling. Labels are binary: 1 = requirement, 0 = non-requirement."""

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError
from .forest import RandomForest
from .knn import KNearestNeighbors
from .linear import LinearSVM, LogisticRegression
from .naive_bayes import DomainError, GaussianNB, MultinomialNB
from .smote import SmoteConfig, SmoteResult, balance, smote

MODEL_FORMAT = "reqmine-model"
MODEL_VERSION = 1

KINDS = ("multinomial_nb", "gaussian_nb", "logreg", "linear_svm", "random_forest", "knn")
ALIASES = {
    "nb": "nb",
    "naive_bayes": "nb",
    "mnb": "multinomial_nb",
    "gnb": "gaussian_nb",
    "lr": "logreg",
    "logistic": "logreg",
    "svm": "linear_svm",
    "svc": "linear_svm",
    "rf": "random_forest",
    "forest": "random_forest",
    "kneighbors": "knn",
}

DEFAULT_HYPERPARAMS = {
    "multinomial_nb": {"alpha": 1.0},
    "gaussian_nb": {"var_floor": 1e-9},
    "logreg": {"l2_lambda": 1e-3, "max_iter": 500, "tol": 1e-6},
    "linear_svm": {"l2_lambda": 1e-3, "epochs": 20},
    "random_forest": {"n_trees": 100, "max_depth": None, "min_leaf": 1, "bootstrap": True},
    "knn": {"k": 5, "metric": "auto"},
}

DEFAULT_GRIDS = {
    "nb": {"alpha": [0.1, 0.5, 1.0]},
    "multinomial_nb": {"alpha": [0.1, 0.5, 1.0]},
    "gaussian_nb": {"var_floor": [1e-9]},
    "logreg": {"l2_lambda": [1e-4, 1e-3, 1e-2]},
    "linear_svm": {"l2_lambda": [1e-4, 1e-3, 1e-2]},
    "random_forest": {"n_trees": [50, 100], "max_depth": [8, 16]},
    "knn": {"k": [3, 5, 11]},
}


def canonical_kind(name):
    name = ALIASES.get(name, name)
    if name != "nb" and name not in KINDS:
        raise ValueError(f"unknown model kind {name!r}")
    return name


def resolve_kind(name, sparse_features):
    """Map the ``nb`` alias to multinomial NB on sparse counts, Gaussian NB on dense embeddings."""
    name = canonical_kind(name)
    if name == "nb":
        return "multinomial_nb" if sparse_features else "gaussian_nb"
    return name


@dataclass
class ModelSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.kind = canonical_kind(self.kind)
        if self.kind == "nb":
            raise ValueError("resolve 'nb' to multinomial_nb or gaussian_nb before building a ModelSpec")
        unknown = set(self.hyperparams) - set(DEFAULT_HYPERPARAMS[self.kind])
        if unknown:
            raise ValueError(f"unknown hyperparameter(s) for {self.kind}: {', '.join(sorted(unknown))}")
        hp = self.full_hyperparams()
        if self.kind == "multinomial_nb" and hp["alpha"] <= 0:
            raise ValueError("alpha must be positive")
        if self.kind == "knn" and hp["k"] < 1:
            raise ValueError("k must be >= 1")
        if self.kind == "random_forest" and hp["n_trees"] < 1:
            raise ValueError("n_trees must be >= 1")

    def full_hyperparams(self):
        return {**DEFAULT_HYPERPARAMS[self.kind], **self.hyperparams}

    def to_dict(self):
        return {"kind": self.kind, "hyperparams": self.full_hyperparams(), "seed": self.seed}


def _estimator(spec):
    hp = spec.full_hyperparams()
    if spec.kind == "multinomial_nb":
        return MultinomialNB(hp["alpha"])
    if spec.kind == "gaussian_nb":
        return GaussianNB(hp["var_floor"])
    if spec.kind == "logreg":
        return LogisticRegression(hp["l2_lambda"], hp["max_iter"], hp["tol"])
    if spec.kind == "linear_svm":
        return LinearSVM(hp["l2_lambda"], hp["epochs"], spec.seed)
    if spec.kind == "random_forest":
        return RandomForest(hp["n_trees"], hp["max_depth"], hp["min_leaf"], hp["bootstrap"], spec.seed)
    return KNearestNeighbors(hp["k"], hp["metric"])


def _raw(x):
    return x.data if hasattr(x, "feature_names") else x


@dataclass
class TrainedModel:
    spec: ModelSpec
    n_features: int
    majority_class: int
    estimator: object

    @property
    def kind(self):
        return self.spec.kind

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            **self.spec.to_dict(),
            "n_features": self.n_features,
            "majority_class": self.majority_class,
            "params": self.estimator.params(),
        }

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            from ..errors import SchemaError

            raise SchemaError(f"not a {MODEL_FORMAT} v{MODEL_VERSION} file")
        spec = ModelSpec(d["kind"], d["hyperparams"], d["seed"])
        est = _estimator(spec).load(d["params"])
        return cls(spec, d["n_features"], d["majority_class"], est)


def train(spec, x, y):
    x = _raw(x)
    y = np.asarray(y, dtype=int)
    if x.shape[0] < 2:
        raise TrainingError("need at least two training rows")
    if x.shape[0] != y.size:
        raise TrainingError(f"{x.shape[0]} rows but {y.size} labels")
    if not set(np.unique(y)) <= {0, 1}:
        raise TrainingError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise TrainingError("training labels contain a single class")
    majority = int((y == 1).sum() > (y == 0).sum())
    est = _estimator(spec).fit(x, y)
    return TrainedModel(spec, x.shape[1], majority, est)


def _check(model, x):
    if x.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {x.shape[1]}")


def predict_scores(model, x):
    """Per-class scores, shape (n, 2): probabilities (NB, logreg), margins (SVM), vote fractions (forest, kNN)."""
    x = _raw(x)
    _check(model, x)
    if x.shape[0] == 0:
        return np.zeros((0, 2))
    return model.estimator.predict_scores(x)


def decide(scores, majority_class):
    """Argmax over two classes; exact ties go to the majority training class."""
    labels = (scores[:, 1] > scores[:, 0]).astype(int)
    labels[scores[:, 1] == scores[:, 0]] = majority_class
    return labels


def predict(model, x):
    x = _raw(x)
    _check(model, x)
    if x.shape[0] == 0:
        return np.zeros(0, dtype=int)
    return decide(predict_scores(model, x), model.majority_class)


__all__ = [
    "ALIASES", "DEFAULT_GRIDS", "DEFAULT_HYPERPARAMS", "DomainError", "KINDS", "ModelSpec",
    "SmoteConfig", "SmoteResult", "TrainedModel", "balance", "canonical_kind", "decide",
    "predict", "predict_scores", "resolve_kind", "smote", "train",
]
