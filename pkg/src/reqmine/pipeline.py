"""Pipeline stages. Each stage reads and writes files so it can be rerun in isolation."""

import hashlib
import logging
import os
import time
from contextlib import contextmanager
from datetime import datetime, timezone

from . import __version__
from .errors import MissingInputError, ReqmineError, ValidationError
from .evalharness import EvalConfig, LabeledCorpus, render_report, run_evaluation
from .features import assemble, embed_matrix, fit_tfidf, load_precomputed, load_word_vectors, read_precomputed, transform_tfidf
from .ingest import RelevanceLexicon, corpus_from_records, filter_relevant, filter_window, load_dumps, parse_date
from .jsonl import SCHEMA_VERSION, ensure_parent, read_json, read_records, write_json, write_records
from .labels import (
    LABELS,
    REQUIREMENT,
    aggregate,
    corpus_stats,
    export_tasks,
    import_tasks,
    import_votes,
    sample_for_labeling,
)
from .learn import DEFAULT_HYPERPARAMS, ModelSpec, SmoteConfig, balance, resolve_kind, train
from .signals import SignalTags, expand_lexicon, load_seeds, load_synonyms, tag_sentence
from .summarize import SummaryConfig, summarize
from .textnorm import NormConfig, ProcessedSentence, build_vocab, process_document

log = logging.getLogger(__name__)


def _need(path):
    if not os.path.exists(path):
        raise MissingInputError(f"input file not found: {path} (run the upstream stage first)")


def _read_text(path):
    _need(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def stage_ingest(dumps, out, start, end, keywords=None):
    for p in dumps:
        _need(p)
    corpus = load_dumps(dumps)
    n_parsed = len(corpus)
    corpus = filter_window(corpus, parse_date(start), parse_date(end))
    n_window = len(corpus)
    lexicon = RelevanceLexicon.load(keywords) if keywords else RelevanceLexicon.default()
    corpus = filter_relevant(corpus, lexicon)
    write_records(out, "corpus", [r.to_dict() for r in corpus.records])
    return {
        "parsed": n_parsed,
        "skipped_lines": len(corpus.skipped),
        "in_window": n_window,
        "relevant": len(corpus),
        **corpus.counts(),
        "unresolved_parents": len(corpus.unresolved_parents()),
    }


def _norm_config(opts=None, stopwords=None):
    opts = dict(opts or {})
    if stopwords:
        with open(stopwords, encoding="utf-8") as fh:
            opts["stopwords"] = {ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")}
    return NormConfig(**opts)


def stage_sentences(corpus_path, out, norm=None):
    records = read_records(corpus_path, "corpus")
    corpus = corpus_from_records(records)
    cfg = norm if isinstance(norm, NormConfig) else _norm_config(norm)
    vocab = build_vocab(r.body for r in corpus.records) if cfg.correct_typos else None
    rows = []
    for r in corpus.records:
        rows.extend(s.to_dict() for s in process_document(r.id, r.body, cfg, vocab))
    write_records(out, "sentences", rows)
    return {"documents": len(corpus), "sentences": len(rows)}


def _by_doc(sentences):
    docs = {}
    for s in sentences:
        docs.setdefault(s.doc_id, []).append(s)
    return docs


def stage_summarize(in_path, out, cfg=None):
    cfg = cfg if isinstance(cfg, SummaryConfig) else SummaryConfig(**(cfg or {}))
    sents = [ProcessedSentence.from_dict(r) for r in read_records(in_path, "sentences")]
    kept = []
    for doc in _by_doc(sents).values():
        kept.extend(summarize(sorted(doc, key=lambda s: s.sent_index), cfg))
    write_records(out, "sentences", [s.to_dict() for s in kept])
    return {"input": len(sents), "kept": len(kept), "method": cfg.method}


def _lexicon(seeds=None, synonyms=None):
    return expand_lexicon(load_seeds(seeds), load_synonyms(synonyms))


def stage_tag(in_path, out, seeds=None, synonyms=None):
    lex = _lexicon(seeds, synonyms)
    rows = read_records(in_path, "sentences")
    for r in rows:
        r["signals"] = tag_sentence(ProcessedSentence.from_dict(r), lex).to_dict()
    write_records(out, "tagged", rows)
    return {
        "sentences": len(rows),
        "lexicon_terms": len(lex),
        "keyword_sentences": sum(r["signals"]["has_keyword"] for r in rows),
        "interrogative_sentences": sum(r["signals"]["is_interrogative"] for r in rows),
    }


def stage_label_export(in_path, out, fraction, seed):
    sents = [ProcessedSentence.from_dict(r) for r in read_records(in_path, "tagged")]
    tasks = sample_for_labeling(sents, fraction, seed)
    ensure_parent(out)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(export_tasks(tasks))
    return {"sentences": len(sents), "tasks": len(tasks)}


def stage_label_merge(in_path, tasks_path, votes_path, out):
    rows = read_records(in_path, "tagged")
    by_ref = {(r["doc_id"], r["sent_index"]): r for r in rows}
    tasks = import_tasks(_read_text(tasks_path))
    missing = [t.task_id for t in tasks if t.ref not in by_ref]
    if missing:
        raise ValidationError("tasks refer to sentences absent from the tagged file", missing)
    votes = import_votes(_read_text(votes_path), known_tasks=[t.task_id for t in tasks])
    labeled, unlabeled = aggregate(tasks, votes)
    out_rows = []
    for item in labeled:
        r = dict(by_ref[(item.doc_id, item.sent_index)])
        r["votes"] = [{"worker_id": v.worker_id, "vote": v.vote} for v in item.votes]
        r["label"] = item.label
        out_rows.append(r)
    write_records(out, "labeled", out_rows)
    return {
        "tasks": len(tasks),
        "votes": len(votes),
        "labeled": len(out_rows),
        "unlabeled": len(unlabeled),
        REQUIREMENT: sum(r["label"] == REQUIREMENT for r in out_rows),
    }


def stage_stats(in_path, out):
    rows = read_records(in_path, "labeled")
    stats = corpus_stats([r["label"] for r in rows], [SignalTags.from_dict(r["signals"]) for r in rows])
    write_json(out, {"schema": "stats", "version": 1, **stats})
    return {"sentences": len(rows)}


def _load_corpus(in_path, vectors=None, embeddings=None):
    rows = read_records(in_path, "labeled")
    wv = None
    if vectors:
        _need(vectors)
        wv = load_word_vectors(vectors)
    pre = None
    if embeddings:
        _need(embeddings)
        pre = read_precomputed(embeddings)
    return LabeledCorpus.from_records(rows, wv, pre)


def _text_matrix(spec, corpus, vectors=None, embeddings=None):
    if spec.text_rep == "tfidf":
        model = fit_tfidf(corpus.sentences)
        return transform_tfidf(model, corpus.sentences), model
    if spec.text_rep == "wordvec_avg":
        if corpus.word_vectors is None:
            raise MissingInputError("--vectors is required for wordvec_avg features")
        return embed_matrix(corpus.sentences, corpus.word_vectors), None
    if not embeddings:
        raise MissingInputError("--embeddings is required for precomputed features")
    return load_precomputed(embeddings, corpus.refs), None


def stage_featurize(in_path, out, spec, vectors=None, embeddings=None):
    corpus = _load_corpus(in_path, vectors, None)
    text, _ = _text_matrix(spec, corpus, vectors, embeddings)
    fm = assemble(text, corpus.tags, spec)
    obj = {"schema": "features", "version": SCHEMA_VERSION, **fm.to_json()}
    obj["feature_spec"] = spec.to_dict()
    obj["labels"] = [LABELS[int(v)] for v in corpus.y]
    write_json(out, obj)
    return {"rows": fm.n_rows, "cols": fm.n_cols}


def stage_train(in_path, out, model, spec, seed, hyperparams=None, vectors=None, embeddings=None, smote=None):
    corpus = _load_corpus(in_path, vectors, None)
    text, tfidf = _text_matrix(spec, corpus, vectors, embeddings)
    fm = assemble(text, corpus.tags, spec)
    kind = resolve_kind(model, fm.is_sparse)
    hp = {k: v for k, v in (hyperparams or {}).items() if k in DEFAULT_HYPERPARAMS[kind]}
    x, y = fm.data, corpus.y
    if smote:
        x, y, _ = balance(x, y, SmoteConfig(seed=seed, **smote))
    trained = train(ModelSpec(kind, hp, seed), x, y)
    obj = {"schema": "model", "version": SCHEMA_VERSION, **trained.to_dict()}
    obj["featurizer"] = {"feature_spec": spec.to_dict(), "tfidf": tfidf.to_dict() if tfidf else None}
    write_json(out, obj)
    return {"kind": kind, "rows": int(y.size), "features": fm.n_cols}


def _resolve(base, path):
    if path is None or os.path.isabs(path):
        return path
    return os.path.join(base, path)


def load_eval_config(config_path, seed=None):
    cfg = read_json(config_path)
    base = os.path.dirname(os.path.abspath(config_path))
    ev = dict(cfg.get("evaluation", cfg if "dumps" not in cfg else {}))
    for key in ("word_vectors", "embeddings", "dumps", "seed"):
        ev.pop(key, None)
    ev["seed"] = seed if seed is not None else cfg.get("seed", 7)
    vectors = _resolve(base, cfg.get("word_vectors"))
    embeddings = _resolve(base, cfg.get("embeddings"))
    return EvalConfig.from_dict(ev), vectors, embeddings


def stage_evaluate(in_path, out, eval_cfg, vectors=None, embeddings=None):
    needs_vectors = "wordvec_avg" in eval_cfg.representations
    needs_emb = "precomputed" in eval_cfg.representations
    corpus = _load_corpus(in_path, vectors if needs_vectors else None, embeddings if needs_emb else None)
    report = run_evaluation(corpus, eval_cfg)
    write_json(out, report)
    return {"cells": len(report["cells"])}


def stage_report(in_path, out):
    report = read_json(in_path, "report")
    text = render_report(report)
    ensure_parent(out)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@contextmanager
def run_lock(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    lock = os.path.join(out_dir, ".lock")
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ReqmineError(f"run directory {out_dir} is locked by another process (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        os.unlink(lock)


ARTIFACTS = {
    "corpus": "corpus.jsonl",
    "sentences": "sentences.jsonl",
    "summary": "summary.jsonl",
    "tagged": "tagged.jsonl",
    "tasks": "tasks.csv",
    "labeled": "labeled.jsonl",
    "stats": "stats.json",
    "report": "report.json",
    "report_txt": "report.txt",
}


def run_pipeline(config_path, out_dir, seed=None):
    """Run every stage from dumps to report and write ``run_manifest.json``."""
    cfg = read_json(config_path)
    base = os.path.dirname(os.path.abspath(config_path))
    seed = seed if seed is not None else cfg.get("seed", 7)
    paths = {k: os.path.join(out_dir, v) for k, v in ARTIFACTS.items()}
    dumps = [_resolve(base, d) for d in cfg["dumps"]]
    votes = _resolve(base, cfg["labeling"]["votes"])
    keywords = _resolve(base, cfg.get("keywords"))
    lex_cfg = cfg.get("lexicon") or {}
    seeds_path = _resolve(base, lex_cfg.get("seeds"))
    syn_path = _resolve(base, lex_cfg.get("synonyms"))
    eval_cfg, vectors, embeddings = load_eval_config(config_path, seed)
    inputs = [p for p in dumps + [votes, keywords, seeds_path, syn_path, vectors, embeddings] if p]
    for p in inputs:
        _need(p)

    timings, summary = {}, {}

    def timed(name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        summary[name] = fn(*args, **kwargs)
        timings[name] = round(time.perf_counter() - t0, 3)

    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with run_lock(out_dir):
        timed("ingest", stage_ingest, dumps, paths["corpus"], cfg["from"], cfg["to"], keywords)
        timed("sentences", stage_sentences, paths["corpus"], paths["sentences"], cfg.get("norm"))
        timed("summarize", stage_summarize, paths["sentences"], paths["summary"], cfg.get("summarize"))
        timed("tag", stage_tag, paths["summary"], paths["tagged"], seeds_path, syn_path)
        timed("label-export", stage_label_export, paths["tagged"], paths["tasks"], cfg["labeling"].get("fraction", 0.1), seed)
        timed("label-merge", stage_label_merge, paths["tagged"], paths["tasks"], votes, paths["labeled"])
        timed("stats", stage_stats, paths["labeled"], paths["stats"])
        timed("evaluate", stage_evaluate, paths["labeled"], paths["report"], eval_cfg, vectors, embeddings)
        timed("report", lambda a, b: len(stage_report(a, b)), paths["report"], paths["report_txt"])
        manifest = {
            "schema": "run_manifest",
            "version": 1,
            "tool_version": __version__,
            "seed": seed,
            "started_utc": started,
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": cfg,
            "inputs": {p: sha256_file(p) for p in inputs},
            "stage_timings_s": timings,
            "stage_summaries": summary,
            "artifacts": {p: sha256_file(p) for p in paths.values()},
        }
        write_json(os.path.join(out_dir, "run_manifest.json"), manifest)
    return manifest

