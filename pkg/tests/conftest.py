import os

import pytest

from reqmine.textnorm import ProcessedSentence


def make_sentence(tokens, bigrams=(), doc="d", idx=0, raw=None):
    raw = raw if raw is not None else " ".join(tokens) + "."
    return ProcessedSentence(doc, idx, raw, list(tokens), list(bigrams), raw.rstrip().endswith("?"))


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    """300-sentence synthetic corpus with a trimmed evaluation config."""
    import json

    from reqmine.fixture import write_fixture

    root = tmp_path_factory.mktemp("small")
    cfg = write_fixture(str(root), n_sentences=300, seed=11)
    cfg["evaluation"].update(
        k=3,
        representations=["tfidf"],
        models={"nb": {"alpha": [0.5, 1.0]}, "knn": {"k": [3]}},
    )
    with open(os.path.join(root, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2)
    return root


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title}{'  ' + detail if detail else ''}")
