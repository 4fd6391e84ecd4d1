"""Extractive summarization (TextRank, LexRank, SumBasic) and ROUGE-n scoring."""

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

METHODS = ("sumbasic", "textrank", "lexrank")


@dataclass
class SummaryConfig:
    method: str = "textrank"
    ratio: float = 0.3
    top_k: int | None = None
    damping: float = 0.85
    lexrank_threshold: float = 0.1
    tol: float = 1e-6
    max_iter: int = 200

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown summarization method {self.method!r}")
        if not 0 < self.ratio <= 1:
            raise ValueError("ratio must lie in (0, 1]")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass
class RougeScore:
    n: int
    precision: float
    recall: float
    f1: float

    def to_dict(self):
        return {"n": self.n, "precision": self.precision, "recall": self.recall, "f1": self.f1}


def _tokens(s):
    return s.tokens if hasattr(s, "tokens") else list(s)


def textrank_graph(sentences):
    """Symmetric overlap/log-length similarity matrix with zero diagonal."""
    sets = [set(_tokens(s)) for s in sentences]
    n = len(sets)
    w = np.zeros((n, n))
    for i in range(n):
        if len(sets[i]) < 2:
            continue
        for j in range(i + 1, n):
            if len(sets[j]) < 2:
                continue
            shared = len(sets[i] & sets[j])
            if shared:
                w[i, j] = w[j, i] = shared / (math.log(len(sets[i])) + math.log(len(sets[j])))
    return w


def _sentence_tfidf(sentences):
    docs = [Counter(_tokens(s)) for s in sentences]
    n = len(docs)
    df = Counter(t for d in docs for t in d)
    vocab = sorted(df)
    col = {t: i for i, t in enumerate(vocab)}
    m = np.zeros((n, len(vocab)))
    for r, d in enumerate(docs):
        for t, c in d.items():
            m[r, col[t]] = c * (math.log((1 + n) / (1 + df[t])) + 1)
    return m


def lexrank_graph(sentences, threshold=0.1):
    """Binary adjacency of sentence pairs whose TF-IDF cosine is at least ``threshold``."""
    m = _sentence_tfidf(sentences)
    norms = np.linalg.norm(m, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = m / safe[:, None]
    sim = unit @ unit.T
    adj = (sim >= threshold - 1e-12) & (norms[:, None] > 0) & (norms[None, :] > 0)
    np.fill_diagonal(adj, False)
    return adj.astype(float)


def pagerank(weights, damping=0.85, tol=1e-6, max_iter=200):
    """Damped stationary distribution of the row-normalized graph.

    Rows without outgoing weight jump uniformly. Iteration stops once the L1
    distance to the fixed point is provably below ``tol``; for a contraction
    with factor ``damping`` that bound is ``damping / (1 - damping)`` times the
    last step.
    """
    n = weights.shape[0]
    if n == 1:
        return np.array([1.0])
    out = weights.sum(axis=1)
    dangling = out == 0
    trans = np.divide(weights, out[:, None], out=np.zeros_like(weights), where=~dangling[:, None])
    scores = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        spread = scores @ trans + scores[dangling].sum() / n
        nxt = (1 - damping) / n + damping * spread
        nxt /= nxt.sum()
        delta = np.abs(nxt - scores).sum()
        scores = nxt
        if delta * damping / (1 - damping) < tol:
            break
    return scores


def textrank_scores(sentences, cfg=None):
    cfg = cfg or SummaryConfig()
    if not sentences:
        raise ValueError("textrank needs at least one sentence")
    return pagerank(textrank_graph(sentences), cfg.damping, cfg.tol, cfg.max_iter)


def lexrank_scores(sentences, cfg=None):
    cfg = cfg or SummaryConfig(method="lexrank")
    if not sentences:
        raise ValueError("lexrank needs at least one sentence")
    return pagerank(lexrank_graph(sentences, cfg.lexrank_threshold), cfg.damping, cfg.tol, cfg.max_iter)


def sumbasic_select(sentences, k, return_order=False):
    n = len(sentences)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    toks = [_tokens(s) for s in sentences]
    counts = Counter(t for ts in toks for t in ts)
    total = sum(counts.values())
    prob = {w: c / total for w, c in counts.items()}
    chosen, remaining = [], set(range(n))

    def mean_p(i):
        return sum(prob[t] for t in toks[i]) / len(toks[i]) if toks[i] else 0.0

    for _ in range(k):
        pool = sorted(remaining)
        live = {t for i in pool for t in toks[i]}
        if live:
            top_word = min(live, key=lambda w: (-prob[w], w))
            pool = [i for i in pool if top_word in toks[i]]
        best = max(pool, key=lambda i: (mean_p(i), -i))
        chosen.append(best)
        remaining.discard(best)
        for t in set(toks[best]):
            prob[t] = prob[t] ** 2
    return chosen if return_order else sorted(chosen)


def summary_size(n, cfg):
    if cfg.top_k is not None:
        return min(cfg.top_k, n)
    return max(1, min(n, int(math.floor(cfg.ratio * n + 0.5))))


def top_indices(scores, k):
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return sorted(order[:k])


def summarize(sentences, cfg=None):
    """Selected sentences in document order."""
    cfg = cfg or SummaryConfig()
    if not sentences:
        raise ValueError("cannot summarize an empty document")
    k = summary_size(len(sentences), cfg)
    if k == len(sentences):
        return list(sentences)
    if cfg.method == "sumbasic":
        idx = sumbasic_select(sentences, k)
    elif cfg.method == "textrank":
        idx = top_indices(textrank_scores(sentences, cfg), k)
    else:
        idx = top_indices(lexrank_scores(sentences, cfg), k)
    return [sentences[i] for i in idx]


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate, reference, n=1):
    if n < 1:
        raise ValueError("n must be >= 1")
    cand, ref = _ngram_counts(list(candidate), n), _ngram_counts(list(reference), n)
    overlap = sum((cand & ref).values())
    c_total, r_total = sum(cand.values()), sum(ref.values())
    precision = overlap / c_total if c_total else 0.0
    recall = overlap / r_total if r_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return RougeScore(n, precision, recall, f1)
