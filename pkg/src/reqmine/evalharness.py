"""Stratified cross-validation, grid search, metrics, and report tables."""

import hashlib
import itertools
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_rng
from .errors import PlanError, ReqmineError
from .features import FeatureSpec, align_precomputed, assemble, embed_matrix, fit_tfidf, transform_tfidf
from .labels import LABELS, REQUIREMENT
from .learn import DEFAULT_GRIDS, DEFAULT_HYPERPARAMS, ModelSpec, SmoteConfig, balance, canonical_kind, predict, resolve_kind, train
from .signals import SignalTags
from .textnorm import ProcessedSentence

log = logging.getLogger(__name__)

ABLATION_ROWS = (
    ("base", False, False),
    ("+interrogative", True, False),
    ("+keyword", False, True),
    ("+interrogative+keyword", True, True),
)


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int
    eval_folds: tuple = ()

    def __post_init__(self):
        self.assignments = np.asarray(self.assignments, dtype=int)
        if not self.eval_folds:
            self.eval_folds = tuple(range(self.k))

    def split(self, fold):
        test = np.flatnonzero(self.assignments == fold)
        train_idx = np.flatnonzero(self.assignments != fold)
        return train_idx, test


def stratified_kfold(labels, k=10, seed=0):
    """Shuffle each class with a seeded generator, then deal rows round-robin into ``k`` folds."""
    y = np.asarray(labels)
    if k < 2:
        raise PlanError("k must be >= 2")
    if y.size < k:
        raise PlanError(f"{y.size} rows cannot fill k={k} folds")
    classes, counts = np.unique(y, return_counts=True)
    # a class with fewer than k rows leaves some folds without it, which is
    # still within one of proportional; a singleton class cannot be both
    # trained on and tested
    small = [f"{c} ({n})" for c, n in zip(classes, counts) if n < 2]
    if small:
        raise PlanError(f"class(es) too small to stratify over k={k} folds: {', '.join(small)}")
    rng = derive_rng(seed, "kfold")
    assign = np.empty(y.size, dtype=int)
    offset = 0
    for c in classes:
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return FoldPlan(k, assign, seed)


def holdout_plan(labels, test_fraction=0.2, seed=0):
    """Stratified single split: fold 0 is the test set, fold 1 the training set."""
    if not 0 < test_fraction < 1:
        raise PlanError("test_fraction must lie in (0, 1)")
    y = np.asarray(labels)
    rng = derive_rng(seed, "holdout")
    assign = np.ones(y.size, dtype=int)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(test_fraction * idx.size))
        if n_test == 0 or n_test == idx.size:
            raise PlanError(f"class {c} too small for a {test_fraction:.0%} holdout")
        assign[idx[:n_test]] = 0
    return FoldPlan(2, assign, seed, (0,))


@dataclass
class Metrics:
    per_class: dict
    macro: dict
    confusion: dict
    zero_division: list = field(default_factory=list)

    def to_dict(self):
        return {"per_class": self.per_class, "macro": self.macro, "confusion": self.confusion, "zero_division": self.zero_division}


def _prf(tp, fp, fn, flags, name):
    if tp + fp:
        p = tp / (tp + fp)
    else:
        p = 0.0
        flags.append(f"{name}:precision")
    if tp + fn:
        r = tp / (tp + fn)
    else:
        r = 0.0
        flags.append(f"{name}:recall")
    f = 2 * p * r / (p + r) if p + r else 0.0
    return {"precision": p, "recall": r, "f1": f}


def compute_metrics(y_true, y_pred, class_names=LABELS):
    """Per-class and macro-averaged precision/recall/F1 for binary 0/1 labels."""
    t = np.asarray(y_true, dtype=int)
    p = np.asarray(y_pred, dtype=int)
    if t.size != p.size:
        raise ValueError(f"length mismatch: {t.size} truths vs {p.size} predictions")
    if t.size == 0:
        raise ValueError("need at least one prediction")
    flags, per_class = [], {}
    matrix = [[int(((t == a) & (p == b)).sum()) for b in (0, 1)] for a in (0, 1)]
    for c, name in enumerate(class_names):
        tp = matrix[c][c]
        fp = matrix[1 - c][c]
        fn = matrix[c][1 - c]
        per_class[name] = _prf(tp, fp, fn, flags, name)
    macro = {m: float(np.mean([per_class[n][m] for n in class_names])) for m in ("precision", "recall", "f1")}
    pos = class_names[1]
    confusion = {
        "matrix": matrix,
        "positive_class": pos,
        "tp": matrix[1][1],
        "fp": matrix[0][1],
        "fn": matrix[1][0],
        "tn": matrix[0][0],
    }
    return Metrics(per_class, macro, confusion, flags)


@dataclass
class LabeledCorpus:
    sentences: list
    tags: list
    y: np.ndarray
    word_vectors: object = None
    precomputed: tuple | None = None  # (ref -> vector table, dim)

    @property
    def refs(self):
        return [s.ref for s in self.sentences]

    @classmethod
    def from_records(cls, records, word_vectors=None, precomputed=None):
        sents = [ProcessedSentence.from_dict(r) for r in records]
        tags = [SignalTags.from_dict(r["signals"]) for r in records]
        y = np.array([1 if r["label"] == REQUIREMENT else 0 for r in records], dtype=int)
        return cls(sents, tags, y, word_vectors, precomputed)

    def fingerprint(self):
        h = hashlib.sha256()
        for s, t, lab in zip(self.sentences, self.tags, self.y):
            h.update(json.dumps([s.to_dict(), t.to_dict(), int(lab)], sort_keys=True).encode("utf-8"))
        return h.hexdigest()


@dataclass
class FoldResult:
    fold: int
    metrics: Metrics
    n_train: int
    n_test: int
    n_synthetic: int
    train_features: list


def _seed_int(seed, *keys):
    return int(derive_rng(seed, *keys).integers(0, 2**31 - 1))


class Evaluator:
    """Runs cross-validation cells over one corpus and fold plan, caching fold features."""

    def __init__(self, corpus, plan, smote_cfg=None, seed=0, presplit_smote=False, use_bigrams=True):
        self.corpus = corpus
        self.plan = plan
        self.smote_cfg = smote_cfg
        self.seed = seed
        self.presplit_smote = presplit_smote
        self.use_bigrams = use_bigrams
        self._text_cache = {}
        self._cells = {}
        self._smote_cache = {}

    def text_matrices(self, text_rep, train_idx, test_idx, key):
        """Text features for one split; anything fitted sees training rows only."""
        ck = (text_rep, key)
        if ck in self._text_cache:
            return self._text_cache[ck]
        sents = self.corpus.sentences
        tr = [sents[i] for i in train_idx]
        te = [sents[i] for i in test_idx]
        if text_rep == "tfidf":
            model = fit_tfidf(tr, use_bigrams=self.use_bigrams)
            out = transform_tfidf(model, tr), transform_tfidf(model, te)
        elif text_rep == "wordvec_avg":
            if self.corpus.word_vectors is None:
                raise ReqmineError("wordvec_avg features need a word-vector file")
            out = embed_matrix(tr, self.corpus.word_vectors), embed_matrix(te, self.corpus.word_vectors)
        else:
            if self.corpus.precomputed is None:
                raise ReqmineError("precomputed features need an embedding file")
            table, dim = self.corpus.precomputed
            out = align_precomputed(table, dim, [s.ref for s in tr]), align_precomputed(table, dim, [s.ref for s in te])
        self._text_cache[ck] = out
        return out

    def fold_features(self, spec, train_idx, test_idx, key):
        xtr, xte = self.text_matrices(spec.text_rep, train_idx, test_idx, key)
        tags = self.corpus.tags
        return (
            assemble(xtr, [tags[i] for i in train_idx], spec),
            assemble(xte, [tags[i] for i in test_idx], spec),
        )

    def cross_validate(self, model, hyperparams, spec):
        """Per-fold metrics for one (model, hyperparameters, feature spec) cell."""
        sparse = spec.text_rep == "tfidf"
        kind = resolve_kind(model, sparse)
        cell_key = (spec.name, kind, json.dumps(hyperparams, sort_keys=True))
        if cell_key in self._cells:
            return self._cells[cell_key]
        if self.presplit_smote:
            results = self._cross_validate_presplit(kind, hyperparams, spec)
        else:
            results = []
            for fold in self.plan.eval_folds:
                tr, te = self.plan.split(fold)
                xtr, xte = self.fold_features(spec, tr, te, fold)
                ytr, yte = self.corpus.y[tr], self.corpus.y[te]
                try:
                    results.append(self._fit_eval(kind, hyperparams, spec, fold, xtr, ytr, xte, yte))
                except ReqmineError as exc:
                    raise type(exc)(f"fold {fold}: {exc}") from exc
        self._cells[cell_key] = results
        return results

    def _fit_eval(self, kind, hyperparams, spec, fold, xtr, ytr, xte, yte):
        xd, yd, n_syn = self._balanced(spec, fold, xtr, ytr)
        mspec = ModelSpec(kind, hyperparams, _seed_int(self.seed, "model", kind, fold))
        model = train(mspec, xd, yd)
        pred = predict(model, xte.data)
        return FoldResult(fold, compute_metrics(yte, pred), int(yd.size), int(yte.size), n_syn, xtr.feature_names)

    def _balanced(self, spec, fold, xtr, ytr):
        # depends only on (feature spec, fold), so every model in the grid shares it
        ck = (spec.name, fold)
        if ck not in self._smote_cache:
            xd, yd, n_syn = xtr.data, ytr, 0
            if self.smote_cfg is not None:
                rng = derive_rng(self.seed, "smote", spec.name, fold)
                xd, yd, res = balance(xd, ytr, self.smote_cfg, rng=rng)
                n_syn = 0 if res is None else res.synthetic.shape[0]
            self._smote_cache[ck] = (xd, yd, n_syn)
        return self._smote_cache[ck]

    def _cross_validate_presplit(self, kind, hyperparams, spec):
        # Balance first, split afterwards: synthetic rows built from test rows leak into training.
        n = len(self.corpus.sentences)
        everything = np.arange(n)
        x, _ = self.fold_features(spec, everything, everything[:0], "all")
        xd, yd = x.data, self.corpus.y
        if self.smote_cfg is not None:
            xd, yd, _ = balance(xd, yd, self.smote_cfg, rng=derive_rng(self.seed, "smote", spec.name, "presplit"))
        plan = stratified_kfold(yd, self.plan.k, self.plan.seed) if len(self.plan.eval_folds) > 1 else holdout_plan(yd, 0.2, self.plan.seed)
        results = []
        for fold in plan.eval_folds:
            tr, te = plan.split(fold)
            mspec = ModelSpec(kind, hyperparams, _seed_int(self.seed, "model", kind, fold))
            model = train(mspec, xd[tr], yd[tr])
            pred = predict(model, xd[te])
            results.append(FoldResult(fold, compute_metrics(yd[te], pred), int(tr.size), int(te.size), int(yd.size - n), x.feature_names))
        return results

    def grid_search(self, model, grid, spec):
        """Evaluate every grid point; best is highest mean macro-F, then precision, then grid order."""
        kind = resolve_kind(model, spec.text_rep == "tfidf")
        # the nb alias may resolve to gaussian_nb, which has no smoothing alpha
        grid = {k: v for k, v in grid.items() if k in DEFAULT_HYPERPARAMS[kind]}
        cells = []
        for hp in expand_grid(grid):
            folds = self.cross_validate(model, hp, spec)
            cells.append(summarize_cell(model, kind, hp, spec, folds))
        best = cells[0]
        for c in cells[1:]:
            if (c["mean"]["f1"], c["mean"]["precision"]) > (best["mean"]["f1"], best["mean"]["precision"]):
                best = c
        return best, cells


def expand_grid(grid):
    if not grid:
        return [{}]
    keys = list(grid)
    for k in keys:
        if not isinstance(grid[k], list) or not grid[k]:
            raise ValueError(f"grid entry {k!r} must be a non-empty list")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _mean_sd(values):
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def summarize_cell(model, kind, hyperparams, spec, folds):
    mean, sd = {}, {}
    for m in ("precision", "recall", "f1"):
        mean[m], sd[m] = _mean_sd([f.metrics.macro[m] for f in folds])
    per_class = {
        name: {m: _mean_sd([f.metrics.per_class[name][m] for f in folds])[0] for m in ("precision", "recall", "f1")}
        for name in LABELS
    }
    return {
        "feature_spec": spec.name,
        "model": model,
        "kind": kind,
        "hyperparams": hyperparams,
        "mean": mean,
        "sd": sd,
        "per_class_mean": per_class,
        "folds": [
            {"fold": f.fold, "n_train": f.n_train, "n_test": f.n_test, "n_synthetic": f.n_synthetic, **f.metrics.to_dict()}
            for f in folds
        ],
    }


def cross_validate(model_spec, feature_spec, corpus, plan, smote_cfg=None, seed=0, presplit_smote=False):
    """Functional entry point: per-fold results for ``model_spec`` (a ModelSpec or kind name)."""
    ev = Evaluator(corpus, plan, smote_cfg, seed, presplit_smote)
    if isinstance(model_spec, ModelSpec):
        return ev.cross_validate(model_spec.kind, dict(model_spec.hyperparams), feature_spec)
    return ev.cross_validate(model_spec, {}, feature_spec)


def grid_search(grids, models, feature_spec, corpus, plan, smote_cfg=None, seed=0):
    """Best hyperparameters per model plus every evaluated cell."""
    ev = Evaluator(corpus, plan, smote_cfg, seed)
    out = {}
    for m in models:
        grid = grids.get(m, DEFAULT_GRIDS.get(canonical_kind(m), {}))
        best, cells = ev.grid_search(m, grid, feature_spec)
        out[m] = {"best": best, "cells": cells}
    return out


@dataclass
class EvalConfig:
    seed: int = 7
    k: int = 10
    mode: str = "kfold"
    test_fraction: float = 0.2
    representations: list = field(default_factory=lambda: ["tfidf"])
    models: dict = field(default_factory=lambda: {m: None for m in ("nb", "logreg", "linear_svm", "random_forest", "knn")})
    ablation: dict | None = field(default_factory=lambda: {"model": "nb", "text_rep": "tfidf"})
    smote: dict | None = field(default_factory=lambda: {"k_neighbors": 5, "target_ratio": 1.0})
    unsafe_presplit_smote: bool = False
    use_bigrams: bool = True

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown evaluation setting(s): {', '.join(sorted(unknown))}")
        cfg = cls(**d)
        if cfg.mode not in ("kfold", "holdout"):
            raise ValueError("mode must be kfold or holdout")
        return cfg

    def to_dict(self):
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def run_evaluation(corpus, cfg):
    """Full benchmark: representation tables plus the signal-feature ablation."""
    if cfg.mode == "kfold":
        plan = stratified_kfold(corpus.y, cfg.k, cfg.seed)
    else:
        plan = holdout_plan(corpus.y, cfg.test_fraction, cfg.seed)
    smote_cfg = SmoteConfig(**cfg.smote) if cfg.smote else None
    ev = Evaluator(corpus, plan, smote_cfg, cfg.seed, cfg.unsafe_presplit_smote, cfg.use_bigrams)
    tables = {"representations": {}, "ablation": None}
    for rep in cfg.representations:
        spec = FeatureSpec(rep)
        rows = []
        for model, grid in cfg.models.items():
            grid = grid if grid is not None else DEFAULT_GRIDS.get(canonical_kind(model), {})
            log.info("grid search %s on %s", model, rep)
            best, _ = ev.grid_search(model, grid, spec)
            rows.append(_table_row(model, best))
        tables["representations"][rep] = _star(rows)
    if cfg.ablation:
        model = cfg.ablation.get("model", "nb")
        rep = cfg.ablation.get("text_rep", "tfidf")
        grid = cfg.ablation.get("grid") or cfg.models.get(model) or DEFAULT_GRIDS.get(canonical_kind(model), {})
        rows = []
        for label, q, kw in ABLATION_ROWS:
            best, _ = ev.grid_search(model, grid, FeatureSpec(rep, q, kw))
            rows.append({"row": label, **_table_row(model, best)})
        tables["ablation"] = {"model": model, "text_rep": rep, "rows": _star(rows)}
    cells = [summarize_cell(k[1], k[1], json.loads(k[2]), FeatureSpec.parse(k[0]), v) for k, v in ev._cells.items()]
    cells.sort(key=lambda c: (c["feature_spec"], c["kind"], json.dumps(c["hyperparams"], sort_keys=True)))
    return {
        "schema": "report",
        "version": 1,
        "metric": "macro_f1",
        "run": {
            "seed": cfg.seed,
            "mode": cfg.mode,
            "k": plan.k if cfg.mode == "kfold" else None,
            "test_fraction": cfg.test_fraction if cfg.mode == "holdout" else None,
            "n_rows": int(corpus.y.size),
            "class_counts": {LABELS[0]: int((corpus.y == 0).sum()), LABELS[1]: int((corpus.y == 1).sum())},
            "corpus_sha256": corpus.fingerprint(),
            "config": cfg.to_dict(),
            "smote": "presplit (leaky)" if cfg.unsafe_presplit_smote else ("in-fold" if smote_cfg else "off"),
        },
        "cells": cells,
        "tables": tables,
    }


def _table_row(model, best):
    return {
        "model": model,
        "kind": best["kind"],
        "feature_spec": best["feature_spec"],
        "hyperparams": best["hyperparams"],
        "precision": best["mean"]["precision"],
        "recall": best["mean"]["recall"],
        "f1": best["mean"]["f1"],
        "f1_sd": best["sd"]["f1"],
    }


def _star(rows):
    if rows:
        top = max(r["f1"] for r in rows)
        for r in rows:
            r["best"] = r["f1"] == top
    return rows


REP_TITLES = {
    "tfidf": "TF-IDF",
    "wordvec_avg": "Word vectors (averaged)",
    "precomputed": "Sentence embeddings (precomputed)",
}
MODEL_TITLES = {
    "multinomial_nb": "Naive Bayes",
    "gaussian_nb": "Naive Bayes",
    "logreg": "Logistic Regression",
    "linear_svm": "Linear SVC",
    "random_forest": "Random Forest",
    "knn": "K-Neighbors",
}


def _fmt_rows(title, header, rows):
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    line = "  ".join("-" * w for w in widths)
    out = [title, line, "  ".join(str(h).ljust(w) for h, w in zip(header, widths)), line]
    out += ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)) for r in rows]
    out.append(line)
    return "\n".join(out)


def render_report(report):
    """Aligned text tables: one per representation, then the feature ablation. ``*`` marks the best F."""
    parts = [f"Metric: macro-averaged precision / recall / F1 ({report['run']['mode']}, seed {report['run']['seed']})"]
    for rep, rows in report["tables"]["representations"].items():
        body = [
            [MODEL_TITLES.get(r["kind"], r["kind"]), f"{r['precision']:.2f}", f"{r['recall']:.2f}", f"{r['f1']:.2f}" + ("*" if r["best"] else "")]
            for r in rows
        ]
        parts.append(_fmt_rows(f"Classifiers on {REP_TITLES.get(rep, rep)}", ["Model", "Precision", "Recall", "F-Score"], body))
    abl = report["tables"].get("ablation")
    if abl:
        name = f"{MODEL_TITLES.get(abl['rows'][0]['kind'], abl['model'])} + {REP_TITLES.get(abl['text_rep'], abl['text_rep'])}"
        body = [
            [
                name + ("" if r["row"] == "base" else " + " + r["row"][1:].replace("+", " + ").replace("interrogative", "Interrogative").replace("keyword", "Keyword")),
                f"{r['precision']:.2f}",
                f"{r['recall']:.2f}",
                f"{r['f1']:.2f}" + ("*" if r["best"] else ""),
            ]
            for r in abl["rows"]
        ]
        parts.append(_fmt_rows("Signal-feature ablation", ["Features", "Precision", "Recall", "F-Score"], body))
    return "\n\n".join(parts) + "\n"
