"""Forum dump ingestion plus time-window and event-relevance filters."""

import json
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources

from .errors import FormatError

log = logging.getLogger(__name__)

KINDS = ("post", "comment")
_REQUIRED = ("id", "kind", "created_utc", "body")
_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")


@dataclass(frozen=True)
class RawPost:
    id: str
    kind: str
    created_utc: int
    body: str
    parent_id: str | None = None
    title: str | None = None
    score: int = 0
    permalink: str | None = None

    def to_dict(self):
        return {
            "id": self.id,
            "kind": self.kind,
            "parent_id": self.parent_id,
            "created_utc": self.created_utc,
            "title": self.title,
            "body": self.body,
            "score": self.score,
            "permalink": self.permalink,
        }

    @classmethod
    def from_dict(cls, obj):
        """Build and validate a record; raises ``ValueError`` describing the problem."""
        missing = [k for k in _REQUIRED if k not in obj or obj[k] is None]
        if missing:
            raise ValueError(f"missing field(s) {', '.join(missing)}")
        rid = str(obj["id"]).strip()
        if not rid:
            raise ValueError("empty id")
        kind = obj["kind"]
        if kind not in KINDS:
            raise ValueError(f"kind must be post or comment, got {kind!r}")
        if isinstance(obj["created_utc"], bool):
            raise ValueError("created_utc must be an integer")
        try:
            created = int(obj["created_utc"])
        except (TypeError, ValueError):
            raise ValueError("created_utc must be an integer") from None
        if created <= 0:
            raise ValueError("created_utc must be positive")
        if not isinstance(obj["body"], str):
            raise ValueError("body must be a string")
        parent = obj.get("parent_id")
        if kind == "comment" and not parent:
            raise ValueError("comment without parent_id")
        if kind == "post":
            parent = None
        title = obj.get("title") if kind == "post" else None
        return cls(
            id=rid,
            kind=kind,
            created_utc=created,
            body=obj["body"],
            parent_id=str(parent) if parent else None,
            title=title,
            score=int(obj.get("score") or 0),
            permalink=obj.get("permalink"),
        )


@dataclass(frozen=True)
class Corpus:
    records: tuple
    window: tuple | None = None
    provenance: tuple = ()
    skipped: tuple = field(default=(), compare=False)

    def __len__(self):
        return len(self.records)

    def counts(self):
        posts = sum(1 for r in self.records if r.kind == "post")
        return {"posts": posts, "comments": len(self.records) - posts}

    def unresolved_parents(self):
        """Comment ids whose parent is not in the corpus (declared missing)."""
        ids = {r.id for r in self.records}
        return [r.id for r in self.records if r.kind == "comment" and r.parent_id not in ids]


def parse_dump(stream, source="<stream>"):
    """Parse a JSON-lines dump into a :class:`Corpus`.

    Malformed lines are skipped and reported in ``Corpus.skipped`` as
    ``(line_no, reason)``. More than half the lines malformed is a format error.
    """
    records, skipped, seen_ids = [], [], set()
    n_lines = 0
    for line_no, line in enumerate(stream, 1):
        if not line.strip():
            continue
        n_lines += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("not a JSON object")
            rec = RawPost.from_dict(obj)
            if rec.id in seen_ids:
                raise ValueError(f"duplicate id {rec.id!r}")
        except (json.JSONDecodeError, ValueError) as exc:
            skipped.append((line_no, str(exc)))
            continue
        seen_ids.add(rec.id)
        records.append(rec)
    if n_lines and len(skipped) * 2 > n_lines:
        first = skipped[0]
        raise FormatError(
            f"{source}: {len(skipped)} of {n_lines} lines malformed; "
            f"first offending line {first[0]}: {first[1]}",
            [f"line {n}: {why}" for n, why in skipped],
        )
    for n, why in skipped:
        log.warning("%s:%d skipped: %s", source, n, why)
    return Corpus(tuple(records), None, (source,), tuple(skipped))


def load_dumps(paths):
    """Parse and concatenate several dump files. Later duplicates of an id are dropped."""
    records, skipped, seen = [], [], set()
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            part = parse_dump(fh, source=str(path))
        for rec in part.records:
            if rec.id in seen:
                skipped.append((str(path), f"duplicate id {rec.id!r}"))
                continue
            seen.add(rec.id)
            records.append(rec)
        skipped.extend((str(path), n, why) for n, why in part.skipped)
    return Corpus(tuple(records), None, tuple(str(p) for p in paths), tuple(skipped))


def filter_window(corpus, start_utc, end_utc):
    """Keep records with ``start_utc <= created_utc < end_utc``."""
    if start_utc >= end_utc:
        raise ValueError(f"inverted window: start {start_utc} >= end {end_utc}")
    kept = tuple(r for r in corpus.records if start_utc <= r.created_utc < end_utc)
    return replace(corpus, records=kept, window=(start_utc, end_utc))


def _tokens(text):
    joined = _TOKEN_RE.findall(text.lower())
    split = [part for tok in joined for part in tok.split("-")]
    return joined, split


def _contains_seq(tokens, seq):
    n = len(seq)
    if n == 0 or n > len(tokens):
        return False
    first = seq[0]
    for i, tok in enumerate(tokens[: len(tokens) - n + 1]):
        if tok == first and tokens[i : i + n] == seq:
            return True
    return False


class RelevanceLexicon:
    """Event keywords matched as whole tokens or consecutive token runs."""

    def __init__(self, terms):
        seen, clean = set(), []
        for t in terms:
            t = " ".join(t.strip().lower().split())
            if t and t not in seen:
                seen.add(t)
                clean.append(t)
        if not clean:
            raise ValueError("relevance lexicon is empty")
        self.terms = clean
        self._joined = [_tokens(t)[0] for t in clean]
        self._split = [_tokens(t)[1] for t in clean]

    def __len__(self):
        return len(self.terms)

    def matches(self, text):
        joined, split = _tokens(text)
        for tj, ts in zip(self._joined, self._split):
            if _contains_seq(joined, tj) or _contains_seq(split, ts):
                return True
        return False

    @classmethod
    def from_lines(cls, lines):
        terms = []
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if line:
                terms.append(line)
        return cls(terms)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def default(cls):
        text = resources.files("reqmine.data").joinpath("relevance_keywords.txt").read_text("utf-8")
        return cls.from_lines(text.splitlines())


def filter_relevant(corpus, lexicon):
    def text_of(r):
        return f"{r.title}\n{r.body}" if r.title else r.body

    kept = tuple(r for r in corpus.records if lexicon.matches(text_of(r)))
    return replace(corpus, records=kept)


def parse_date(value):
    """ISO date or datetime (UTC assumed when naive) to epoch seconds."""
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def corpus_to_records(corpus):
    return [r.to_dict() for r in corpus.records]


def corpus_from_records(rows, window=None, provenance=()):
    return Corpus(tuple(RawPost.from_dict(r) for r in rows), window, tuple(provenance))
