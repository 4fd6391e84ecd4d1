"""Crowd-labeling round trip, majority-vote aggregation, and corpus statistics."""

import csv
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._rng import derive_rng
from .errors import AggregationError, ValidationError

REQUIREMENT = "requirement"
NON_REQUIREMENT = "non_requirement"
LABELS = (NON_REQUIREMENT, REQUIREMENT)
VOTES = ("yes", "no")
TASK_FIELDS = ("task_id", "doc_id", "sent_index", "text")
VOTE_FIELDS = ("task_id", "worker_id", "vote")
EXACT_LIMIT = 16


@dataclass(frozen=True)
class LabelTask:
    task_id: str
    doc_id: str
    sent_index: int
    text: str

    @property
    def ref(self):
        return (self.doc_id, self.sent_index)


@dataclass(frozen=True)
class WorkerVote:
    task_id: str
    worker_id: str
    vote: str


@dataclass
class LabeledSentence:
    doc_id: str
    sent_index: int
    votes: list
    label: str


def task_id_for(doc_id, sent_index):
    return f"{doc_id}#{sent_index}"


def sample_for_labeling(sentences, fraction, seed):
    """Draw ``floor(fraction * n)`` sentences without replacement, in corpus order."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    n = len(sentences)
    size = int(math.floor(fraction * n + 1e-9))
    rng = derive_rng(seed, "label-sample")
    picked = np.sort(rng.choice(n, size=size, replace=False)) if size else []
    return [
        LabelTask(task_id_for(s.doc_id, s.sent_index), s.doc_id, s.sent_index, s.raw)
        for s in (sentences[int(i)] for i in picked)
    ]


def export_tasks(tasks):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TASK_FIELDS)
    for t in tasks:
        w.writerow((t.task_id, t.doc_id, t.sent_index, t.text))
    return buf.getvalue()


def _reader(text, fields):
    rows = csv.reader(io.StringIO(text, newline=""))
    header = next(rows, None)
    if header is None or tuple(h.strip() for h in header) != fields:
        raise ValidationError(f"expected CSV header {','.join(fields)}, got {header}")
    return rows


def import_tasks(text):
    tasks, problems, seen = [], [], set()
    for line_no, row in enumerate(_reader(text, TASK_FIELDS), 2):
        if not row:
            continue
        if len(row) != 4:
            problems.append(f"line {line_no}: expected 4 fields, got {len(row)}")
            continue
        tid, doc, idx, txt = row
        try:
            idx = int(idx)
        except ValueError:
            problems.append(f"line {line_no}: sent_index {idx!r} is not an integer")
            continue
        if tid in seen:
            problems.append(f"line {line_no}: duplicate task_id {tid!r}")
            continue
        seen.add(tid)
        tasks.append(LabelTask(tid, doc, idx, txt))
    if problems:
        raise ValidationError("invalid task file", problems)
    return tasks


def export_votes(votes):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VOTE_FIELDS)
    for v in votes:
        w.writerow((v.task_id, v.worker_id, v.vote))
    return buf.getvalue()


def import_votes(text, known_tasks=None):
    """Parse a vote CSV. All problems are collected and raised together."""
    votes, problems, seen = [], [], {}
    known = set(known_tasks) if known_tasks is not None else None
    for line_no, row in enumerate(_reader(text, VOTE_FIELDS), 2):
        if not row:
            continue
        if len(row) != 3:
            problems.append(f"line {line_no}: expected 3 fields, got {len(row)}")
            continue
        tid, worker, vote = (c.strip() for c in row)
        vote = vote.lower()
        if vote not in VOTES:
            problems.append(f"line {line_no}: vote must be yes or no, got {vote!r}")
            continue
        if known is not None and tid not in known:
            problems.append(f"line {line_no}: unknown task_id {tid!r}")
            continue
        key = (tid, worker)
        if key in seen:
            problems.append(f"line {line_no}: duplicate vote by {worker!r} on {tid!r} (first at line {seen[key]})")
            continue
        seen[key] = line_no
        votes.append(WorkerVote(tid, worker, vote))
    if problems:
        raise ValidationError("invalid vote file", problems)
    return votes


def majority_vote(votes, task_id=None):
    task_id = task_id or (votes[0].task_id if votes else "?")
    n = len(votes)
    if n < 3 or n % 2 == 0:
        raise AggregationError(f"task {task_id}: need an odd number (>= 3) of votes, got {n}")
    yes = sum(1 for v in votes if v.vote == "yes")
    return REQUIREMENT if yes > n - yes else NON_REQUIREMENT


def aggregate(tasks, votes):
    """Label every task that received votes. Returns (labeled, unlabeled_task_ids)."""
    by_task = defaultdict(list)
    for v in votes:
        by_task[v.task_id].append(v)
    labeled, unlabeled, problems = [], [], []
    for t in tasks:
        tv = by_task.get(t.task_id)
        if not tv:
            unlabeled.append(t.task_id)
            continue
        try:
            label = majority_vote(tv, t.task_id)
        except AggregationError as exc:
            problems.append(str(exc))
            continue
        labeled.append(LabeledSentence(t.doc_id, t.sent_index, tv, label))
    if problems:
        raise AggregationError("vote aggregation failed", problems)
    return labeled, unlabeled


@dataclass
class MannWhitneyResult:
    u_statistic: float
    p_value: float
    method: str
    n1: int
    n2: int

    def to_dict(self):
        return {"u_statistic": self.u_statistic, "p_value": self.p_value, "method": self.method, "n1": self.n1, "n2": self.n2}


def rankdata(values):
    """1-based ranks with ties sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def u_distribution(n1, n2):
    """Counts of each U value over all C(n1+n2, n1) rank arrangements."""
    if n1 == 0 or n2 == 0:
        return (1,)
    a = u_distribution(n1 - 1, n2)
    b = u_distribution(n1, n2 - 1)
    out = [0] * (n1 * n2 + 1)
    for u, c in enumerate(a):
        out[u + n2] += c
    for u, c in enumerate(b):
        out[u] += c
    return tuple(out)


def exact_p_value(u, n1, n2):
    """Two-sided: share of arrangements whose U is at least as far from the mean."""
    dist = u_distribution(n1, n2)
    dev = abs(2 * u - n1 * n2)
    extreme = sum(c for v, c in enumerate(dist) if abs(2 * v - n1 * n2) >= dev)
    return extreme / math.comb(n1 + n2, n1)


def normal_p_value(u, n1, n2, tie_counts=()):
    n = n1 + n2
    mu = n1 * n2 / 2
    tie_term = sum(t**3 - t for t in tie_counts) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    z = max(abs(u - mu) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2)))


def mann_whitney_u(sample_a, sample_b, method="auto"):
    """Mann-Whitney U for ``sample_a`` against ``sample_b`` with a two-sided p-value.

    ``method="auto"`` enumerates exactly when the pooled size is at most 16 and
    there are no ties, otherwise uses the tie-corrected normal approximation
    with continuity correction.
    """
    a, b = list(sample_a), list(sample_b)
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    ranks = rankdata(a + b)
    u = sum(ranks[:n1]) - n1 * (n1 + 1) / 2
    ties = [c for c in Counter(a + b).values() if c > 1]
    if method == "auto":
        method = "exact" if n1 + n2 <= EXACT_LIMIT and not ties else "normal_approx"
    if method == "exact":
        if ties:
            raise ValueError("exact test requires tie-free samples")
        p = exact_p_value(int(round(u)), n1, n2)
    elif method == "normal_approx":
        p = normal_p_value(u, n1, n2, ties)
    else:
        raise ValueError(f"unknown method {method!r}")
    return MannWhitneyResult(float(u), float(p), method, n1, n2)


def _describe(values):
    if not values:
        return {"n": 0}
    arr = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "n": int(arr.size),
        "mean": float(arr.mean()),
        "min": float(arr.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(arr.max()),
    }


def corpus_stats(labels, tags):
    """Class balance, signal cross-tabulations, per-class distributions, and U tests.

    ``labels`` and ``tags`` are parallel sequences of label strings and
    :class:`~reqmine.signals.SignalTags`.
    """
    if not labels:
        raise ValueError("corpus_stats needs a non-empty labeled corpus")
    if len(labels) != len(tags):
        raise ValueError("labels and tags must align")
    req = [lab == REQUIREMENT for lab in labels]
    n_req = sum(req)
    n_non = len(labels) - n_req
    kw = [t.has_keyword for t in tags]
    q = [t.is_interrogative for t in tags]

    def count(mask):
        return sum(1 for m in mask if m)

    stats = {
        "n_sentences": len(labels),
        "class_counts": {REQUIREMENT: n_req, NON_REQUIREMENT: n_non},
        "class_ratio_non_requirement_to_requirement": (n_non / n_req) if n_req else None,
        "keyword": {
            "sentences": count(kw),
            "requirement": count(k and r for k, r in zip(kw, req)),
        },
        "interrogative": {
            "sentences": count(q),
            "requirement": count(i and r for i, r in zip(q, req)),
        },
        "overlap": {
            "requirement_and_interrogative": count(i and r for i, r in zip(q, req)),
            "requirement_and_keyword": count(k and r for k, r in zip(kw, req)),
            "requirement_and_interrogative_and_keyword": count(i and k and r for i, k, r in zip(q, kw, req)),
        },
        "distributions": {},
        "mann_whitney": {},
    }
    for block in ("keyword", "interrogative"):
        s = stats[block]
        s["requirement_share"] = s["requirement"] / s["sentences"] if s["sentences"] else None
    for var in ("word_count", "keyword_count"):
        by_class = {
            REQUIREMENT: [getattr(t, var) for t, r in zip(tags, req) if r],
            NON_REQUIREMENT: [getattr(t, var) for t, r in zip(tags, req) if not r],
        }
        stats["distributions"][var] = {k: _describe(v) for k, v in by_class.items()}
        if by_class[REQUIREMENT] and by_class[NON_REQUIREMENT]:
            res = mann_whitney_u(by_class[REQUIREMENT], by_class[NON_REQUIREMENT])
            stats["mann_whitney"][var] = {"status": "ok", **res.to_dict()}
        else:
            stats["mann_whitney"][var] = {"status": "degenerate", "reason": "only one class present"}
    return stats
