"""Seeded synthetic forum corpus with simulated crowd votes.

Requirement sentences embed requirement keywords and question forms;
non-requirement sentences mostly do not. The corpus is padded with
off-topic and out-of-window records so the ingest filters have work to do.
"""

import json
import os
from datetime import datetime, timezone

import numpy as np

from ._rng import derive_rng
from .ingest import RelevanceLexicon
from .labels import WorkerVote, export_votes, task_id_for
from .signals import RequirementLexicon, load_seeds, load_synonyms

WINDOW = ("2020-03-01", "2021-09-01")

COVID_TOPICS = [
    "lockdown", "quarantine", "pandemic", "covid", "covid-19", "online exam", "online test",
    "isolation", "screening", "health", "virus", "outbreak", "pcr", "antigen", "symptoms", "flu",
]
CAMPUS_TOPICS = [
    "library", "tuition", "lecture", "lab", "residence", "gym", "cafeteria", "midterm", "final",
    "tutorial", "campus", "parking", "seminar", "course", "textbook", "professor", "dorm",
    "bookstore", "shuttle", "convocation", "printer", "wifi", "zoom", "portal", "syllabus",
]
CONTEXTS = [
    "this term", "next semester", "during the lockdown", "for the winter term", "this week",
    "after the outbreak", "for international students", "before finals", "in residence",
    "for first years", "during reading week", "at the downtown campus", "for grad students",
    "while in quarantine", "for the fall", "this summer",
]
OPENERS = ["", "honestly", "seriously", "really", "so", "tbh", "at this point", "right now", "basically"]
SUBJECTS = ["i", "we", "students", "everyone", "my roommate", "my friends", "a lot of us", "my classmates"]
NEUTRAL_PAST = [
    "watched", "finished", "visited", "walked to", "liked", "saw", "passed", "wrote", "read",
    "enjoyed", "skipped", "attended", "joined", "left", "cleaned", "laughed about", "painted",
    "photographed", "drove past", "biked to", "remembered", "described", "sketched", "noticed",
    "talked about", "joked about", "toured", "explored", "mentioned", "filmed", "hiked near",
    "napped in", "danced in", "sang in", "ate near", "jogged around", "stared at", "waved at",
    "celebrated", "dreamed about", "posted about", "blogged about", "tweeted about", "reviewed",
    "described", "imagined", "compared", "rated", "counted", "decorated", "mapped", "recorded",
]
NEUTRAL_ADJ = ["fine", "quiet", "weird", "okay", "funny", "empty", "crowded", "nice", "boring", "strange", "chill"]
STORY_TAILS = [
    "and it was {adj}", "and honestly it felt {adj}", "which was kind of {adj}",
    "and the whole thing was {adj}", "lol", "and then went home", "with my roommate",
    "and it turned out {adj}", "like every other day",
]
WH = ["when", "where", "how", "what", "who", "why", "which"]
AUX = ["will", "can", "could", "should", "would", "is", "are", "does", "do", "did", "has", "might"]
QUESTION_VERBS = ["reopen", "open", "start", "work", "happen", "look", "go", "run", "return", "close"]
STATE_VERBS = [
    "is still closed", "is open again", "starts next week", "goes online", "moves to zoom", "stays remote",
    "is back to normal", "got cancelled", "was moved", "opens at noon", "runs late", "is half empty",
]
KW_SUBJECTS = ["i", "we", "students", "everyone", "my friends", "a lot of us", "my classmates", "my roommate"]


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _topic(rng, covid=False):
    pool = COVID_TOPICS if covid or rng.random() < 0.35 else CAMPUS_TOPICS
    return _pick(rng, pool)


def _cap(s):
    s = " ".join(s.split())
    return s[0].upper() + s[1:]


class SentenceFactory:
    def __init__(self, rng, keywords):
        self.rng = rng
        self.keywords = keywords

    def requirement(self, covid=False):
        r = self.rng
        u = r.random()
        topic, ctx = _topic(r, covid), _pick(r, CONTEXTS)
        if u < 0.40:
            kw = _pick(r, self.keywords)
            s = f"{_pick(r, OPENERS)} {_pick(r, KW_SUBJECTS)} {kw} the {topic} {ctx}"
            return _cap(s) + _pick(r, [".", ".", "!"]), "keyword"
        if u < 0.65:
            form = r.random()
            if form < 0.45:
                s = f"{_pick(r, WH)} {_pick(r, AUX)} the {topic} {_pick(r, QUESTION_VERBS)} {ctx}"
            else:
                # declarative wording, the question mark carries the intent
                s = f"{_pick(r, OPENERS)} the {topic} {_pick(r, STATE_VERBS)} {ctx}"
            return _cap(s) + "?", "question"
        if u < 0.85:
            kw = _pick(r, self.keywords)
            s = f"{_pick(r, AUX)} {_pick(r, ['the', 'anyone', 'we', 'i', 'they'])} {kw} the {topic} {ctx}"
            return _cap(s) + "?", "both"
        s = f"{_pick(r, OPENERS)} it would be great if the {topic} {_pick(r, QUESTION_VERBS)} {ctx}"
        return _cap(s) + ".", "implicit"

    def non_requirement(self, covid=False):
        r = self.rng
        u = r.random()
        topic, ctx = _topic(r, covid), _pick(r, CONTEXTS)
        tail = _pick(r, STORY_TAILS).format(adj=_pick(r, NEUTRAL_ADJ))
        if u < 0.55:
            s = f"{_pick(r, OPENERS)} {_pick(r, SUBJECTS)} {_pick(r, NEUTRAL_PAST)} the {topic} {ctx}"
            return _cap(s) + ".", "story"
        if u < 0.85:
            s = f"{_pick(r, OPENERS)} the {topic} {_pick(r, STATE_VERBS)} {ctx}"
            return _cap(s) + ".", "statement"
        if u < 0.93:
            s = f"who else {_pick(r, NEUTRAL_PAST)} the {topic} {ctx} {tail}"
            return _cap(s) + "?", "rhetorical"
        kw = _pick(r, self.keywords)
        s = f"{_pick(r, SUBJECTS)} had a {kw} with the {topic} {ctx} {tail}"
        return _cap(s) + ".", "keyword_story"


def _epoch(day):
    return int(datetime.fromisoformat(day).replace(tzinfo=timezone.utc).timestamp())


def generate(n_sentences=2000, seed=7, requirement_share=0.58, worker_accuracy=0.9):
    """Return ``(records, votes, truth)``; truth maps task id to the generating class."""
    rng = derive_rng(seed, "fixture")
    seeds = load_seeds()
    syn = load_synonyms()
    keywords = sorted({w for s in seeds for w in [s] + syn.get(s, []) if " " not in w})
    factory = SentenceFactory(rng, keywords)
    relevance = RelevanceLexicon.default()
    lo, hi = _epoch(WINDOW[0]), _epoch(WINDOW[1])
    records, votes, truth = [], [], {}
    posts = []
    made = 0
    doc_no = 0
    while made < n_sentences:
        doc_no += 1
        is_post = not posts or rng.random() < 0.3
        n_here = min(int(rng.integers(1, 5)), n_sentences - made)
        sentences = []
        for i in range(n_here):
            covid = (not is_post) and i == 0
            if rng.random() < requirement_share:
                text, arche = factory.requirement(covid)
                cls = 1
            else:
                text, arche = factory.non_requirement(covid)
                cls = 0
            sentences.append((text, cls, arche))
        rid = f"{'p' if is_post else 'c'}{doc_no:05d}"
        rec = {
            "id": rid,
            "kind": "post" if is_post else "comment",
            "created_utc": int(rng.integers(lo, hi)),
            "body": " ".join(t for t, _, _ in sentences),
            "score": int(rng.integers(-3, 60)),
        }
        if is_post:
            rec["title"] = _cap(f"{_pick(rng, COVID_TOPICS)} and the {_pick(rng, CAMPUS_TOPICS)}")
            posts.append(rid)
        else:
            rec["parent_id"] = _pick(rng, posts)
        records.append(rec)
        for idx, (text, cls, arche) in enumerate(sentences):
            tid = task_id_for(rid, idx)
            truth[tid] = {"class": cls, "archetype": arche, "text": text}
            for worker in rng.choice(40, size=3, replace=False):
                correct = rng.random() < worker_accuracy
                yes = (cls == 1) == correct
                votes.append(WorkerVote(tid, f"w{int(worker) + 1:02d}", "yes" if yes else "no"))
        made += n_here
    # off-topic records inside the window and on-topic records outside it
    for j in range(60):
        rid = f"x{j:05d}"
        text, _ = factory.non_requirement(False)
        while relevance.matches(text):
            text, _ = factory.non_requirement(False)
        records.append({
            "id": rid, "kind": "post", "created_utc": int(rng.integers(lo, hi)),
            "title": "Course selection", "body": "Which electives are good for second year? " + text,
        })
    for j in range(40):
        rid = f"o{j:05d}"
        when = int(rng.integers(_epoch("2019-01-01"), lo)) if j % 2 else int(rng.integers(hi, _epoch("2022-06-01")))
        records.append({
            "id": rid, "kind": "post", "created_utc": when, "title": "Covid update",
            "body": factory.requirement(True)[0],
        })
    # the window end is exclusive, so this one is filtered out
    records.append({"id": "edge00001", "kind": "post", "created_utc": hi, "title": "Lockdown", "body": "Lockdown ends today."})
    order = rng.permutation(len(records))
    records = [records[i] for i in order]
    return records, votes, truth


def _word_vectors(rng, vocab, lexicon, dim=16):
    lines = [f"{len(vocab)} {dim}"]
    for w in vocab:
        v = rng.normal(0, 1, dim)
        if w in lexicon:
            v[0] += 2.5
        lines.append(w + " " + " ".join(f"{x:.6f}" for x in v))
    return lines


def write_fixture(out_dir, n_sentences=2000, seed=7):
    """Write dump, votes, word vectors, sentence embeddings, and a pipeline config."""
    from .textnorm import NormConfig, process_document

    os.makedirs(out_dir, exist_ok=True)
    records, votes, truth = generate(n_sentences, seed)
    with open(os.path.join(out_dir, "dump.jsonl"), "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    with open(os.path.join(out_dir, "votes.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(export_votes(votes))
    with open(os.path.join(out_dir, "truth.json"), "w", encoding="utf-8") as fh:
        json.dump(truth, fh, sort_keys=True, indent=1)

    rng = derive_rng(seed, "fixture-vectors")
    lex = RequirementLexicon.default()
    cfg = NormConfig()
    vocab, sent_rows = set(), []
    for r in records:
        for s in process_document(r["id"], r["body"], cfg):
            vocab.update(s.tokens)
            sent_rows.append(s)
    vocab = sorted(vocab)
    vec_lines = _word_vectors(rng, vocab, lex)
    with open(os.path.join(out_dir, "vectors.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(vec_lines) + "\n")
    table = {ln.split()[0]: np.array([float(x) for x in ln.split()[1:]]) for ln in vec_lines[1:]}
    with open(os.path.join(out_dir, "embeddings.csv"), "w", encoding="utf-8", newline="\n") as fh:
        dim = 16
        fh.write("doc_id,sent_index," + ",".join(f"v{i}" for i in range(dim)) + "\n")
        for s in sent_rows:
            known = [table[t] for t in s.tokens if t in table]
            v = np.mean(known, axis=0) if known else np.zeros(dim)
            v = v + rng.normal(0, 0.3, dim)
            if s.question_mark:
                v[1] += 1.5
            fh.write(f"{s.doc_id},{s.sent_index}," + ",".join(f"{x:.6f}" for x in v) + "\n")

    config = {
        "seed": seed,
        "dumps": ["dump.jsonl"],
        "from": WINDOW[0],
        "to": WINDOW[1],
        "keywords": None,
        "norm": {"correct_typos": False},
        "summarize": {"method": "textrank", "ratio": 1.0},
        "labeling": {"fraction": 1.0, "votes": "votes.csv"},
        "lexicon": {"seeds": None, "synonyms": None},
        "evaluation": {
            "k": 10,
            "mode": "kfold",
            "representations": ["tfidf", "wordvec_avg", "precomputed"],
            "models": {
                "nb": {"alpha": [0.1, 0.5, 1.0]},
                "logreg": {"l2_lambda": [1e-3]},
                "linear_svm": {"l2_lambda": [1e-3]},
                "random_forest": {"n_trees": [15], "max_depth": [12]},
                "knn": {"k": [5, 11]},
            },
            "ablation": {"model": "nb", "text_rep": "tfidf"},
            "smote": {"k_neighbors": 5, "target_ratio": 1.0},
        },
        "word_vectors": "vectors.txt",
        "embeddings": "embeddings.csv",
    }
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    return config
