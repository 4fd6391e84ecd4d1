"""Requirement-keyword and interrogative signals attached to each sentence."""

from dataclasses import dataclass
from importlib import resources

from .textnorm import lemmatize, surface_tokens

WH_WORDS = frozenset({"who", "what", "when", "where", "why", "how", "which", "whose", "whom"})
AUXILIARIES = frozenset(
    {
        "do", "does", "did", "can", "could", "will", "would", "shall", "should", "is", "are",
        "was", "were", "has", "have", "had", "may", "might", "must",
    }
)
SUBJECT_STARTERS = frozenset(
    {"i", "you", "we", "they", "he", "she", "it", "the", "a", "an", "this", "that", "anyone", "there"}
)


def parse_entries(lines):
    """Parse ``term`` or ``term: syn1, syn2`` lines into (term, [synonyms])."""
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            head, tail = line.split(":", 1)
            syns = [s.strip().lower() for s in tail.split(",") if s.strip()]
        else:
            head, syns = line, []
        yield head.strip().lower(), syns


def load_seeds(path=None):
    return [term for term, _ in parse_entries(_lines(path, "requirement_seeds.txt"))]


def load_synonyms(path=None):
    table = {}
    for term, syns in parse_entries(_lines(path, "requirement_synonyms.txt")):
        table.setdefault(term, []).extend(syns)
    return table


def _lines(path, default_name):
    if path is None:
        return resources.files("reqmine.data").joinpath(default_name).read_text("utf-8").splitlines()
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


@dataclass(frozen=True)
class RequirementLexicon:
    seeds: tuple
    expanded: tuple

    def __post_init__(self):
        object.__setattr__(self, "_set", frozenset(self.expanded))

    def __contains__(self, lemma):
        return lemma in self._set

    def __len__(self):
        return len(self.expanded)

    @classmethod
    def from_terms(cls, terms, seeds=()):
        return cls(tuple(seeds), tuple(sorted({lemmatize(t) for t in terms})))

    @classmethod
    def default(cls):
        return expand_lexicon(load_seeds(), load_synonyms())


def expand_lexicon(seeds, synonyms):
    if not seeds:
        raise ValueError("expand_lexicon needs at least one seed")
    terms = set()
    for seed in seeds:
        terms.add(lemmatize(seed.lower()))
        terms.update(lemmatize(s.lower()) for s in synonyms.get(seed, ()))
    return RequirementLexicon(tuple(seeds), tuple(sorted(terms)))


@dataclass(frozen=True)
class SignalTags:
    has_keyword: bool
    keyword_count: int
    is_interrogative: bool
    word_count: int

    def to_dict(self):
        return {
            "has_keyword": self.has_keyword,
            "keyword_count": self.keyword_count,
            "is_interrogative": self.is_interrogative,
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(bool(d["has_keyword"]), int(d["keyword_count"]), bool(d["is_interrogative"]), int(d["word_count"]))


def tag_keywords(sentence, lexicon):
    count = sum(1 for tok in sentence.tokens if tok in lexicon)
    return count > 0, count


def detect_interrogative(raw, tokens=None):
    """Rule-based question detector.

    True when the sentence ends with ``?``; or opens with a wh-word followed by
    an auxiliary within three tokens; or opens with an auxiliary followed by a
    pronoun or determiner (subject-auxiliary inversion).
    """
    if raw.rstrip().endswith("?"):
        return True
    toks = tokens if tokens is not None else surface_tokens(raw)
    if not toks:
        return False
    first = toks[0]
    if first in WH_WORDS and any(t in AUXILIARIES for t in toks[1:4]):
        return True
    return first in AUXILIARIES and len(toks) > 1 and toks[1] in SUBJECT_STARTERS


def word_count(raw):
    return max(1, len(raw.split()))


def tag_sentence(sentence, lexicon):
    has, count = tag_keywords(sentence, lexicon)
    interrogative = sentence.question_mark or detect_interrogative(sentence.raw)
    return SignalTags(has, count, interrogative, word_count(sentence.raw))
