"""Sentence featurization: TF-IDF, averaged word vectors, precomputed embeddings, signal flags."""

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import FormatError, TrainingError, ValidationError

TEXT_REPS = ("tfidf", "wordvec_avg", "precomputed")
FLAG_COLUMNS = {"interrogative": "is_interrogative", "keyword": "has_keyword"}


@dataclass
class FeatureMatrix:
    data: object  # scipy.sparse.csr_matrix or 2-D ndarray
    feature_names: list
    row_ids: list
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if sp.issparse(self.data):
            self.data = sp.csr_matrix(self.data)
            self.data.sort_indices()
        else:
            self.data = np.asarray(self.data, dtype=float)
            if self.data.ndim != 2:
                raise ValueError("dense feature data must be 2-D")
        if len(self.feature_names) != self.data.shape[1]:
            raise ValueError("feature_names length does not match column count")
        if len(self.row_ids) != self.data.shape[0]:
            raise ValueError("row_ids length does not match row count")

    @property
    def n_rows(self):
        return self.data.shape[0]

    @property
    def n_cols(self):
        return self.data.shape[1]

    @property
    def is_sparse(self):
        return sp.issparse(self.data)

    def rows(self, idx):
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.data[idx], list(self.feature_names), [self.row_ids[i] for i in idx])

    def dense(self):
        return self.data.toarray() if self.is_sparse else self.data

    def to_json(self):
        """Sparse inspection form: one list of ``[column, value]`` pairs per row."""
        csr = sp.csr_matrix(self.data)
        rows = []
        for r in range(csr.shape[0]):
            lo, hi = csr.indptr[r], csr.indptr[r + 1]
            rows.append([[int(c), float(v)] for c, v in zip(csr.indices[lo:hi], csr.data[lo:hi]) if v != 0])
        return {
            "schema": "features",
            "version": 1,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "storage": "sparse" if self.is_sparse else "dense",
            "feature_names": list(self.feature_names),
            "row_ids": [list(r) for r in self.row_ids],
            "rows": rows,
        }

    @classmethod
    def from_json(cls, obj):
        n_rows, n_cols = obj["n_rows"], obj["n_cols"]
        indptr, indices, values = [0], [], []
        for row in obj["rows"]:
            for c, v in row:
                indices.append(c)
                values.append(v)
            indptr.append(len(indices))
        m = sp.csr_matrix((values, indices, indptr), shape=(n_rows, n_cols))
        data = m if obj.get("storage", "sparse") == "sparse" else m.toarray()
        return cls(data, list(obj["feature_names"]), [tuple(r) for r in obj["row_ids"]])


def sentence_terms(sentence, use_bigrams=True):
    terms = list(sentence.tokens)
    if use_bigrams:
        terms.extend(sentence.bigrams)
    return terms


@dataclass
class TfidfModel:
    vocabulary: dict
    idf: np.ndarray
    norm: str = "l2"
    use_bigrams: bool = True

    @property
    def feature_names(self):
        names = [""] * len(self.vocabulary)
        for t, i in self.vocabulary.items():
            names[i] = t
        return names

    def to_dict(self):
        return {"vocabulary": self.feature_names, "idf": self.idf.tolist(), "norm": self.norm, "use_bigrams": self.use_bigrams}

    @classmethod
    def from_dict(cls, d):
        vocab = {t: i for i, t in enumerate(d["vocabulary"])}
        return cls(vocab, np.asarray(d["idf"], dtype=float), d["norm"], d["use_bigrams"])


def fit_tfidf(sentences, norm="l2", use_bigrams=True):
    """Vocabulary and smoothed idf ``ln((1+N)/(1+df)) + 1`` from the training sentences."""
    if norm not in ("l2", "none"):
        raise ValueError("norm must be 'l2' or 'none'")
    df = Counter()
    for s in sentences:
        df.update(set(sentence_terms(s, use_bigrams)))
    if not df:
        raise TrainingError("cannot fit TF-IDF on an empty corpus")
    n = len(sentences)
    terms = sorted(df)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1 for t in terms])
    return TfidfModel({t: i for i, t in enumerate(terms)}, idf, norm, use_bigrams)


def transform_tfidf(model, sentences, row_ids=None):
    """Raw term count times idf, rows L2-normalized when ``model.norm == "l2"``.

    Terms outside the fitted vocabulary are ignored.
    """
    vocab, idf = model.vocabulary, model.idf
    indptr, indices, values = [0], [], []
    for s in sentences:
        counts = Counter(vocab[t] for t in sentence_terms(s, model.use_bigrams) if t in vocab)
        cols = sorted(counts)
        row = np.array([counts[c] * idf[c] for c in cols], dtype=float)
        if model.norm == "l2" and row.size:
            nrm = math.sqrt(float(row @ row))
            if nrm > 0:
                row /= nrm
        indices.extend(cols)
        values.extend(row.tolist())
        indptr.append(len(indices))
    m = sp.csr_matrix((values, indices, indptr), shape=(len(sentences), len(vocab)))
    if row_ids is None:
        row_ids = [s.ref for s in sentences]
    return FeatureMatrix(m, model.feature_names, list(row_ids))


@dataclass
class WordVectors:
    dim: int
    vectors: dict

    def __contains__(self, word):
        return word in self.vectors

    def __len__(self):
        return len(self.vectors)


def load_word_vectors(lines, source="<vectors>"):
    """Read ``word v1 ... vd`` lines; an optional ``count dim`` header is skipped.

    ``lines`` may be a path or an iterable of strings.
    """
    if isinstance(lines, (str, bytes)) or hasattr(lines, "__fspath__"):
        with open(lines, encoding="utf-8") as fh:
            return load_word_vectors(fh.read().splitlines(), source=str(lines))
    vectors, dim, problems = {}, None, []
    for line_no, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            continue
        word, vals = parts[0], parts[1:]
        try:
            vec = np.array([float(v) for v in vals])
        except ValueError:
            problems.append(f"{source}:{line_no}: non-numeric vector component")
            continue
        if dim is None:
            if not vals:
                problems.append(f"{source}:{line_no}: word without vector")
                continue
            dim = len(vals)
        if len(vals) != dim:
            problems.append(f"{source}:{line_no}: expected {dim} values, got {len(vals)}")
            continue
        vectors[word] = vec
    if problems:
        raise FormatError("malformed word-vector file", problems)
    if dim is None:
        raise FormatError(f"{source}: no vectors found")
    return WordVectors(dim, vectors)


def embed_average(sentence, vectors):
    """Mean vector of in-vocabulary tokens. Returns ``(vector, all_oov)``."""
    tokens = sentence.tokens if hasattr(sentence, "tokens") else list(sentence)
    known = [vectors.vectors[t] for t in tokens if t in vectors.vectors]
    if not known:
        return np.zeros(vectors.dim), True
    return np.mean(known, axis=0), False


def embed_matrix(sentences, vectors):
    rows, oov = [], []
    for i, s in enumerate(sentences):
        vec, missing = embed_average(s, vectors)
        rows.append(vec)
        if missing:
            oov.append(i)
    data = np.vstack(rows) if rows else np.zeros((0, vectors.dim))
    names = [f"wv_{j}" for j in range(vectors.dim)]
    return FeatureMatrix(data, names, [s.ref for s in sentences], {"oov_rows": oov})


def read_precomputed(path):
    """Read ``doc_id,sent_index,v1,...,vd`` CSV or ``{"doc_id","sent_index","vector"}`` JSONL."""
    table, dim, problems = {}, None, []
    with open(path, encoding="utf-8", newline="") as fh:
        if str(path).endswith((".jsonl", ".json")):
            entries = []
            for line_no, line in enumerate(fh, 1):
                if line.strip():
                    obj = json.loads(line)
                    entries.append((line_no, obj["doc_id"], obj["sent_index"], obj["vector"]))
        else:
            entries = [(n, r[0], r[1], r[2:]) for n, r in enumerate(csv.reader(fh), 1) if r]
            if entries and not str(entries[0][2]).lstrip("-").isdigit():
                entries = entries[1:]
    for line_no, doc, idx, vals in entries:
        try:
            ref = (str(doc), int(idx))
            vec = np.array([float(v) for v in vals])
        except ValueError:
            problems.append(f"{path}:{line_no}: non-numeric field")
            continue
        if dim is None:
            dim = len(vec)
        if len(vec) != dim:
            problems.append(f"{path}:{line_no}: expected {dim} values, got {len(vec)}")
            continue
        table[ref] = vec
    if problems:
        raise FormatError("malformed embedding file", problems)
    return table, dim or 0


def load_precomputed(path, refs):
    """Dense matrix of precomputed sentence embeddings aligned to ``refs``."""
    table, dim = read_precomputed(path)
    return align_precomputed(table, dim, refs)


def align_precomputed(table, dim, refs):
    missing = [r for r in refs if tuple(r) not in table]
    if missing:
        raise ValidationError(
            f"{len(missing)} sentence(s) have no precomputed embedding",
            [f"missing {d}#{i}" for d, i in missing],
        )
    data = np.vstack([table[tuple(r)] for r in refs]) if refs else np.zeros((0, dim))
    return FeatureMatrix(data, [f"emb_{j}" for j in range(dim)], [tuple(r) for r in refs])


@dataclass(frozen=True)
class FeatureSpec:
    text_rep: str = "tfidf"
    append_interrogative: bool = False
    append_keyword: bool = False

    def __post_init__(self):
        if self.text_rep not in TEXT_REPS:
            raise ValueError(f"unknown text representation {self.text_rep!r}")

    @property
    def name(self):
        parts = [self.text_rep]
        if self.append_interrogative:
            parts.append("interrogative")
        if self.append_keyword:
            parts.append("keyword")
        return "+".join(parts)

    @classmethod
    def parse(cls, text):
        """``tfidf+interrogative+keyword`` style names."""
        parts = text.split("+")
        extra = set(parts[1:])
        unknown = extra - set(FLAG_COLUMNS)
        if unknown:
            raise ValueError(f"unknown feature flag(s): {', '.join(sorted(unknown))}")
        return cls(parts[0], "interrogative" in extra, "keyword" in extra)

    def to_dict(self):
        return {"text_rep": self.text_rep, "append_interrogative": self.append_interrogative, "append_keyword": self.append_keyword}


def assemble(matrix, tags, spec):
    """Append binary signal columns requested by ``spec``."""
    if len(tags) != matrix.n_rows:
        raise ValidationError(f"{len(tags)} tag rows for a matrix of {matrix.n_rows} rows")
    extra, names = [], []
    if spec.append_interrogative:
        extra.append([1.0 if t.is_interrogative else 0.0 for t in tags])
        names.append(FLAG_COLUMNS["interrogative"])
    if spec.append_keyword:
        extra.append([1.0 if t.has_keyword else 0.0 for t in tags])
        names.append(FLAG_COLUMNS["keyword"])
    diag = dict(matrix.diagnostics)
    diag["keyword_count"] = [t.keyword_count for t in tags]
    if not extra:
        return FeatureMatrix(matrix.data, list(matrix.feature_names), list(matrix.row_ids), diag)
    cols = np.array(extra, dtype=float).T.reshape(matrix.n_rows, len(extra))
    if matrix.is_sparse:
        data = sp.hstack([matrix.data, sp.csr_matrix(cols)], format="csr")
    else:
        data = np.hstack([matrix.data, cols])
    return FeatureMatrix(data, list(matrix.feature_names) + names, list(matrix.row_ids), diag)
