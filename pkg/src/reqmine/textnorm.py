"""Sentence splitting and per-sentence normalization."""

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

ABBREVIATIONS = frozenset(
    {
        "e.g.", "i.e.", "dr.", "mr.", "mrs.", "ms.", "prof.", "u.s.", "u.k.",
        "vs.", "st.", "jr.", "sr.", "approx.", "dept.", "fig.", "no.", "a.m.", "p.m.",
    }
)
_BOUNDARY_RE = re.compile(r"[.?!]+(?=\s|$)")
_PUNCT_RE = re.compile(r"[^\w\s]|_")
_VOWELS = frozenset("aeiou")
_SILENT_E_RE = re.compile(
    r"(?:v|uir|[aeiou]c|[nr]c|[aeiou][sz]|dg|[bcdfgkptz]l|ag|[ae]ng|[^aeiou]ur|rg|[^aeiou]at|[^aeiou]in|[^aeiou]ut|[^aeiou]id)$"
)


def _read_data(name):
    return resources.files("reqmine.data").joinpath(name).read_text("utf-8")


def _data_lines(name):
    for line in _read_data(name).splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


@lru_cache(maxsize=None)
def default_stopwords():
    return frozenset(_data_lines("stopwords.txt"))


@lru_cache(maxsize=None)
def lemma_exceptions():
    table = {}
    for line in _read_data("lemma_exceptions.tsv").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        surface, lemma = line.split("\t")
        table[surface.strip()] = lemma.strip()
    return table


def split_sentences(text):
    """Split on ``.``/``?``/``!`` runs followed by whitespace or end of text.

    A period that closes a known abbreviation is not a boundary. Terminal
    punctuation stays with its sentence; whitespace-only fragments are dropped.
    """
    out, start = [], 0
    for m in _BOUNDARY_RE.finditer(text):
        if m.group() == ".":
            word_start = text.rfind(" ", 0, m.start()) + 1
            word_start = max(word_start, text.rfind("\n", 0, m.start()) + 1, start)
            word = text[word_start : m.end()].lower().lstrip("(\"'")
            if word in ABBREVIATIONS:
                continue
        frag = text[start : m.end()].strip()
        if frag:
            out.append(frag)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def _measure(stem):
    """Number of vowel-consonant runs, as in Porter's m."""
    pattern = "".join("v" if _is_vowel(stem, i) else "c" for i in range(len(stem)))
    return len(re.findall(r"v+c+", pattern))


def _is_vowel(word, i):
    ch = word[i]
    if ch in _VOWELS:
        return True
    return ch == "y" and i > 0 and not _is_vowel(word, i - 1)


def _ends_cvc(stem):
    if len(stem) < 3 or stem[-1] in "wxy":
        return False
    return (
        not _is_vowel(stem, len(stem) - 1)
        and _is_vowel(stem, len(stem) - 2)
        and not _is_vowel(stem, len(stem) - 3)
    )


def _restore_stem(stem):
    if len(stem) >= 4 and stem[-1] == stem[-2] and stem[-1] not in "lsz" and not _is_vowel(stem, len(stem) - 1):
        return stem[:-1]
    if _SILENT_E_RE.search(stem) and not stem.endswith(("us", "is")):
        return stem + "e"
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _lemma_step(token):
    table = lemma_exceptions()
    if token in table:
        return table[token]
    n = len(token)
    if token.endswith("ies") and n > 4:
        return token[:-3] + "y"
    if token.endswith("ied") and n > 4:
        return token[:-3] + "y"
    if token.endswith("sses"):
        return token[:-2]
    if token.endswith(("ches", "shes", "xes", "zes")) and n > 4:
        return token[:-2]
    if token.endswith("s") and n > 3 and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    if token.endswith("ing"):
        stem = token[:-3]
        if len(stem) >= 3 and any(_is_vowel(stem, i) for i in range(len(stem))):
            return _restore_stem(stem)
    if token.endswith("ed") and not token.endswith("eed"):
        stem = token[:-2]
        if len(stem) >= 3 and any(_is_vowel(stem, i) for i in range(len(stem))):
            return _restore_stem(stem)
    return token


@lru_cache(maxsize=65536)
def lemmatize(token):
    """POS-blind lemma: exception table, then suffix rules, iterated to a fixed point."""
    for _ in range(8):
        nxt = _lemma_step(token)
        if nxt == token:
            break
        token = nxt
    return token


def _osa_distance_le1(a, b):
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    i = 0
    while i < min(la, lb) and a[i] == b[i]:
        i += 1
    if la == lb:
        if a[i + 1 :] == b[i + 1 :]:
            return True
        return i + 1 < la and a[i] == b[i + 1] and a[i + 1] == b[i] and a[i + 2 :] == b[i + 2 :]
    if la > lb:
        return a[i + 1 :] == b[i:]
    return a[i:] == b[i + 1 :]


def correct_typo(token, vocab):
    """Replace an out-of-vocabulary token by its nearest vocabulary word.

    Only words one edit away (insert, delete, substitute, or swap two adjacent
    letters) are considered; the most frequent wins, then the lexicographically
    smallest. Tokens with no such neighbour are returned unchanged.
    """
    if token in vocab:
        return token
    best = None
    for word, freq in vocab.items():
        if _osa_distance_le1(token, word):
            key = (-freq, word)
            if best is None or key < best[0]:
                best = (key, word)
    return best[1] if best else token


@dataclass
class NormConfig:
    strip_punct: bool = True
    correct_typos: bool = False
    stopwords: frozenset = field(default_factory=default_stopwords)
    lemmatize: bool = True
    ngram_n: int = 2

    def __post_init__(self):
        if self.ngram_n < 1:
            raise ValueError("ngram_n must be >= 1")
        self.stopwords = frozenset(self.stopwords)


@dataclass
class ProcessedSentence:
    doc_id: str
    sent_index: int
    raw: str
    tokens: list
    bigrams: list
    question_mark: bool = False

    @property
    def ref(self):
        return (self.doc_id, self.sent_index)

    def to_dict(self):
        return {
            "doc_id": self.doc_id,
            "sent_index": self.sent_index,
            "raw": self.raw,
            "tokens": list(self.tokens),
            "bigrams": list(self.bigrams),
            "question_mark": self.question_mark,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            doc_id=str(d["doc_id"]),
            sent_index=int(d["sent_index"]),
            raw=d["raw"],
            tokens=list(d["tokens"]),
            bigrams=list(d["bigrams"]),
            question_mark=bool(d.get("question_mark", d["raw"].rstrip().endswith("?"))),
        )


def surface_tokens(raw, strip_punct=True):
    text = raw.lower().replace("'", "").replace("’", "")
    if strip_punct:
        text = _PUNCT_RE.sub(" ", text)
    return text.split()


def ngrams(tokens, n):
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def normalize(raw, cfg=None, doc_id="", sent_index=0, vocab=None):
    if not raw or not raw.strip():
        raise ValueError("cannot normalize an empty sentence")
    cfg = cfg or NormConfig()
    question_mark = raw.rstrip().endswith("?")
    words = surface_tokens(raw, cfg.strip_punct)
    if cfg.correct_typos and vocab:
        words = [correct_typo(w, vocab) for w in words]
    grams = ngrams(words, cfg.ngram_n) if cfg.ngram_n > 1 else []
    kept = [w for w in words if w not in cfg.stopwords]
    if cfg.lemmatize:
        kept = [lemmatize(w) for w in kept]
    return ProcessedSentence(doc_id, sent_index, raw, kept, grams, question_mark)


def build_vocab(texts, strip_punct=True, min_count=2):
    """Corpus word-frequency map used for typo correction.

    Words seen fewer than ``min_count`` times are left out so that one-off
    misspellings become correction candidates instead of vocabulary.
    """
    counts = Counter()
    for t in texts:
        counts.update(surface_tokens(t, strip_punct))
    return {w: c for w, c in counts.items() if c >= min_count}


def process_document(doc_id, text, cfg=None, vocab=None):
    return [
        normalize(s, cfg, doc_id=doc_id, sent_index=i, vocab=vocab)
        for i, s in enumerate(split_sentences(text))
    ]
