"""Command-line entry point: ``reqmine <stage> ...``.

Exit codes: 0 ok, 1 other tool error, 2 missing input, 3 schema mismatch,
4 validation error (with line detail on stderr).
"""

import argparse
import json
import logging
import os
import sys

from . import __version__, pipeline
from .errors import MissingInputError, ReqmineError, SchemaError, ValidationError
from .evalharness import EvalConfig
from .features import FeatureSpec
from .summarize import SummaryConfig, rouge_n
from .textnorm import surface_tokens

EXIT_OK, EXIT_ERROR, EXIT_MISSING, EXIT_SCHEMA, EXIT_VALIDATION = 0, 1, 2, 3, 4


def _out(args, default):
    if getattr(args, "out", None):
        return args.out
    return os.path.join(args.out_dir or ".", default)


def _inp(args, default):
    if getattr(args, "inp", None):
        return args.inp
    return os.path.join(args.out_dir or ".", default)


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _load_config(args):
    if not args.config:
        return {}
    if not os.path.exists(args.config):
        raise MissingInputError(f"config file not found: {args.config}")
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    # file paths inside a config are relative to the config's directory
    base = os.path.dirname(os.path.abspath(args.config))

    def res(path):
        return pipeline._resolve(base, path)

    if cfg.get("dumps"):
        cfg["dumps"] = [res(d) for d in cfg["dumps"]]
    for key in ("keywords", "word_vectors", "embeddings"):
        cfg[key] = res(cfg.get(key))
    for section, keys in (("labeling", ("votes",)), ("lexicon", ("seeds", "synonyms"))):
        if cfg.get(section):
            cfg[section] = {k: res(v) if k in keys else v for k, v in cfg[section].items()}
    return cfg


def _seed(args, cfg):
    if args.seed is not None:
        return args.seed
    return cfg.get("seed", 7)


def _spec(args):
    flags = [f.strip() for f in (args.flags or "").split(",") if f.strip()]
    bad = sorted(set(flags) - {"interrogative", "keyword"})
    if bad:
        raise ValidationError("unknown feature flag(s)", bad)
    return FeatureSpec(args.features, "interrogative" in flags, "keyword" in flags)


def cmd_ingest(args, cfg):
    dumps = args.dump or cfg.get("dumps")
    start, end = args.start or cfg.get("from"), args.end or cfg.get("to")
    if not dumps or not start or not end:
        raise ValidationError("ingest needs --dump, --from and --to (or a config providing them)")
    _emit(pipeline.stage_ingest(dumps, _out(args, "corpus.jsonl"), start, end, args.keywords or cfg.get("keywords")))


def cmd_sentences(args, cfg):
    norm = dict(cfg.get("norm") or {})
    if args.typos:
        norm["correct_typos"] = True
    if args.ngram is not None:
        norm["ngram_n"] = args.ngram
    if args.no_lemmatize:
        norm["lemmatize"] = False
    norm_cfg = pipeline._norm_config(norm, args.stopwords)
    _emit(pipeline.stage_sentences(_inp(args, "corpus.jsonl"), _out(args, "sentences.jsonl"), norm_cfg))


def cmd_summarize(args, cfg):
    opts = dict(cfg.get("summarize") or {})
    for key in ("method", "ratio", "top_k", "damping", "lexrank_threshold"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    _emit(pipeline.stage_summarize(_inp(args, "sentences.jsonl"), _out(args, "summary.jsonl"), SummaryConfig(**opts)))


def _text_tokens(path):
    if not os.path.exists(path):
        raise MissingInputError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return surface_tokens(fh.read())


def cmd_rouge(args, cfg):
    cand, ref = _text_tokens(args.cand), _text_tokens(args.ref)
    orders = range(1, 5) if args.n is None else [args.n]
    _emit({"rouge": [rouge_n(cand, ref, n).to_dict() for n in orders]})


def cmd_tag(args, cfg):
    lex = cfg.get("lexicon") or {}
    _emit(pipeline.stage_tag(
        _inp(args, "summary.jsonl"), _out(args, "tagged.jsonl"),
        args.seeds or lex.get("seeds"), args.synonyms or lex.get("synonyms"),
    ))


def cmd_label_export(args, cfg):
    fraction = args.fraction if args.fraction is not None else (cfg.get("labeling") or {}).get("fraction", 0.1)
    _emit(pipeline.stage_label_export(_inp(args, "tagged.jsonl"), _out(args, "tasks.csv"), fraction, _seed(args, cfg)))


def cmd_label_merge(args, cfg):
    votes = args.votes or (cfg.get("labeling") or {}).get("votes")
    if not votes:
        raise ValidationError("label-merge needs --votes")
    tasks = args.tasks or os.path.join(args.out_dir or ".", "tasks.csv")
    _emit(pipeline.stage_label_merge(_inp(args, "tagged.jsonl"), tasks, votes, _out(args, "labeled.jsonl")))


def cmd_stats(args, cfg):
    out = _out(args, "stats.json")
    pipeline.stage_stats(_inp(args, "labeled.jsonl"), out)
    with open(out, encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def cmd_featurize(args, cfg):
    _emit(pipeline.stage_featurize(
        _inp(args, "labeled.jsonl"), _out(args, "features.json"), _spec(args),
        args.vectors or cfg.get("word_vectors"), args.embeddings or cfg.get("embeddings"),
    ))


def cmd_train(args, cfg):
    hp = json.loads(args.hyperparams) if args.hyperparams else {}
    smote = None if args.no_smote else (cfg.get("evaluation") or {}).get("smote", {"k_neighbors": 5, "target_ratio": 1.0})
    _emit(pipeline.stage_train(
        _inp(args, "labeled.jsonl"), _out(args, f"model-{args.model}.json"), args.model, _spec(args),
        _seed(args, cfg), hp, args.vectors or cfg.get("word_vectors"), args.embeddings or cfg.get("embeddings"), smote,
    ))


def cmd_evaluate(args, cfg):
    if args.config:
        eval_cfg, vectors, embeddings = pipeline.load_eval_config(args.config, args.seed)
    else:
        eval_cfg, vectors, embeddings = EvalConfig(seed=_seed(args, cfg)), None, None
    vectors = args.vectors or vectors
    embeddings = args.embeddings or embeddings
    if args.mode:
        eval_cfg.mode = args.mode
    if args.k is not None:
        eval_cfg.k = args.k
    if args.test_fraction is not None:
        eval_cfg.test_fraction = args.test_fraction
    if args.representations:
        eval_cfg.representations = args.representations.split(",")
    if args.unsafe_presplit_smote:
        logging.getLogger("reqmine").warning("pre-split SMOTE leaks synthetic test neighbours into training; scores are optimistic")
        eval_cfg.unsafe_presplit_smote = True
    if args.no_smote:
        eval_cfg.smote = None
    _emit(pipeline.stage_evaluate(_inp(args, "labeled.jsonl"), _out(args, "report.json"), eval_cfg, vectors, embeddings))


def cmd_report(args, cfg):
    sys.stdout.write(pipeline.stage_report(_inp(args, "report.json"), _out(args, "report.txt")))


def cmd_pipeline(args, cfg):
    if not args.config:
        raise ValidationError("pipeline needs --config")
    out_dir = args.out_dir or os.path.join(os.path.dirname(os.path.abspath(args.config)), "run")
    manifest = pipeline.run_pipeline(args.config, out_dir, args.seed)
    _emit({"out_dir": out_dir, "stage_timings_s": manifest["stage_timings_s"]})


def cmd_gen_fixture(args, cfg):
    from .fixture import write_fixture

    out_dir = args.out_dir or "fixture"
    write_fixture(out_dir, args.n, _seed(args, cfg))
    _emit({"out_dir": out_dir, "config": os.path.join(out_dir, "run.json")})


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: config seed or 7)")
    common.add_argument("--config", default=None, help="run config JSON")
    common.add_argument("--out-dir", default=None, help="directory for outputs and default inputs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="reqmine", description="Mine requirement sentences from forum dumps.")
    parser.add_argument("--version", action="version", version=f"reqmine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, inp=True, out=True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if inp:
            p.add_argument("--in", dest="inp", default=None)
        if out:
            p.add_argument("--out", default=None)
        p.set_defaults(func=fn)
        return p

    p = add("ingest", cmd_ingest, "parse dumps and filter by window and relevance", inp=False)
    p.add_argument("--dump", nargs="+", default=None)
    p.add_argument("--from", dest="start", default=None)
    p.add_argument("--to", dest="end", default=None)
    p.add_argument("--keywords", default=None)

    p = add("sentences", cmd_sentences, "split and normalize sentences")
    p.add_argument("--stopwords", default=None)
    p.add_argument("--typos", action="store_true", help="enable edit-distance-1 typo correction")
    p.add_argument("--ngram", type=int, default=None)
    p.add_argument("--no-lemmatize", action="store_true")

    p = add("summarize", cmd_summarize, "keep top-ranked sentences per document")
    p.add_argument("--method", choices=["textrank", "lexrank", "sumbasic"], default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.add_argument("--damping", type=float, default=None)
    p.add_argument("--lexrank-threshold", dest="lexrank_threshold", type=float, default=None)

    p = add("rouge", cmd_rouge, "ROUGE-n between two text files", inp=False, out=False)
    p.add_argument("--cand", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--n", type=int, choices=[1, 2, 3, 4], default=None)

    p = add("tag", cmd_tag, "attach keyword and interrogative signals")
    p.add_argument("--seeds", default=None)
    p.add_argument("--synonyms", default=None)

    p = add("label-export", cmd_label_export, "sample sentences into a labeling task CSV")
    p.add_argument("--fraction", type=float, default=None)

    p = add("label-merge", cmd_label_merge, "aggregate worker votes into gold labels")
    p.add_argument("--tasks", default=None)
    p.add_argument("--votes", default=None)

    add("stats", cmd_stats, "class balance and signal statistics")

    def feature_args(p):
        p.add_argument("--features", choices=["tfidf", "wordvec_avg", "precomputed"], default="tfidf")
        p.add_argument("--flags", default="", help="comma list of interrogative,keyword")
        p.add_argument("--vectors", default=None)
        p.add_argument("--embeddings", default=None)

    feature_args(add("featurize", cmd_featurize, "build a feature matrix (full corpus, for inspection)"))

    p = add("train", cmd_train, "fit one model on the labeled corpus")
    feature_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--hyperparams", default=None, help="JSON object")
    p.add_argument("--no-smote", action="store_true")

    p = add("evaluate", cmd_evaluate, "cross-validated grid search and ablation")
    p.add_argument("--mode", choices=["kfold", "holdout"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--representations", default=None)
    p.add_argument("--vectors", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--no-smote", action="store_true")
    p.add_argument("--unsafe-presplit-smote", action="store_true", help="oversample before splitting (leaky, for comparison only)")

    add("report", cmd_report, "render report.json as text tables")
    add("pipeline", cmd_pipeline, "run every stage from dumps to report", inp=False, out=False)

    p = add("gen-fixture", cmd_gen_fixture, "write the synthetic demo corpus", inp=False, out=False)
    p.add_argument("--n", type=int, default=2000, help="number of sentences")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args, _load_config(args) if args.command != "pipeline" else {})
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ReqmineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
