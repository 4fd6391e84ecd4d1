import json
import os
import shutil

import pytest

from reqmine import cli
from reqmine.pipeline import run_lock, run_pipeline, sha256_file


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def staged(small_fixture, tmp_path_factory):
    """Run every stage through the CLI one at a time."""
    cfg = small_fixture / "run.json"
    out = tmp_path_factory.mktemp("staged")
    steps = [
        ["ingest"], ["sentences"], ["summarize"], ["tag"], ["label-export"],
        ["label-merge"], ["stats"], ["evaluate"], ["report"],
    ]
    for step in steps:
        assert run(*step, "--config", cfg, "--out-dir", out) == 0, step
    return out


@pytest.fixture(scope="module")
def piped(small_fixture, tmp_path_factory):
    out = tmp_path_factory.mktemp("piped")
    assert run("pipeline", "--config", small_fixture / "run.json", "--out-dir", out) == 0
    return out


def test_stages_match_pipeline(staged, piped):
    for name in ("corpus.jsonl", "sentences.jsonl", "summary.jsonl", "tagged.jsonl", "labeled.jsonl", "report.json", "report.txt"):
        assert sha256_file(staged / name) == sha256_file(piped / name), name


def test_manifest(piped, small_fixture):
    m = json.loads((piped / "run_manifest.json").read_text())
    assert m["schema"] == "run_manifest" and m["seed"] == 11
    assert set(m["stage_timings_s"]) == {
        "ingest", "sentences", "summarize", "tag", "label-export", "label-merge", "stats", "evaluate", "report",
    }
    for path, digest in m["artifacts"].items():
        assert sha256_file(path) == digest
    assert str(small_fixture / "dump.jsonl") in m["inputs"]
    assert not (piped / ".lock").exists()


def test_report_text(piped, capsys):
    assert run("report", "--in", piped / "report.json", "--out", piped / "again.txt") == 0
    text = capsys.readouterr().out
    assert "Signal-feature ablation" in text
    assert text == (piped / "report.txt").read_text()


def test_missing_input_exit_2(tmp_path):
    assert run("sentences", "--in", tmp_path / "nope.jsonl", "--out", tmp_path / "s.jsonl") == 2
    assert run("pipeline", "--config", tmp_path / "nope.json") == 2


def test_schema_mismatch_exit_3(piped, tmp_path, capsys):
    assert run("stats", "--in", piped / "tagged.jsonl", "--out", tmp_path / "s.json") == 3
    assert "schema" in capsys.readouterr().err
    bad = tmp_path / "v2.jsonl"
    lines = (piped / "corpus.jsonl").read_text().splitlines()
    head = json.loads(lines[0])
    head["version"] = 99
    bad.write_text("\n".join([json.dumps(head)] + lines[1:]) + "\n")
    assert run("sentences", "--in", bad, "--out", tmp_path / "s.jsonl") == 3


def test_bad_vote_exit_4(piped, small_fixture, tmp_path, capsys):
    votes = (small_fixture / "votes.csv").read_text().splitlines()
    votes[3] = votes[3].rsplit(",", 1)[0] + ",maybe"
    bad = tmp_path / "votes.csv"
    bad.write_text("\n".join(votes) + "\n")
    code = run("label-merge", "--in", piped / "tagged.jsonl", "--tasks", piped / "tasks.csv", "--votes", bad, "--out", tmp_path / "l.jsonl")
    assert code == 4
    assert "line 4" in capsys.readouterr().err


def test_bad_flag_exit_4(piped, tmp_path):
    assert run("train", "--in", piped / "labeled.jsonl", "--out", tmp_path / "m.json", "--model", "nb", "--flags", "shouting") == 4


def test_locked_run_dir(small_fixture, tmp_path):
    with run_lock(str(tmp_path)):
        assert run("pipeline", "--config", small_fixture / "run.json", "--out-dir", tmp_path) == 1
    assert not (tmp_path / ".lock").exists()


def test_train_and_featurize(piped, tmp_path, capsys):
    assert run("train", "--in", piped / "labeled.jsonl", "--out", tmp_path / "m.json", "--model", "nb",
               "--flags", "interrogative,keyword", "--hyperparams", '{"alpha": 0.5}') == 0
    model = json.loads((tmp_path / "m.json").read_text())
    assert model["schema"] == "model"
    capsys.readouterr()
    assert run("featurize", "--in", piped / "labeled.jsonl", "--out", tmp_path / "f.json", "--flags", "keyword") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["cols"] >= 2 and summary["rows"] > 0


def test_rouge_cli(tmp_path, capsys):
    (tmp_path / "c.txt").write_text("The cat sat on the mat.")
    (tmp_path / "r.txt").write_text("the cat sat on the mat")
    assert run("rouge", "--cand", tmp_path / "c.txt", "--ref", tmp_path / "r.txt") == 0
    scores = json.loads(capsys.readouterr().out)["rouge"]
    assert [s["n"] for s in scores] == [1, 2, 3, 4]
    assert all(s["f1"] == 1.0 for s in scores)


def test_gen_fixture_cli(tmp_path):
    out = tmp_path / "fx"
    assert run("gen-fixture", "--n", 120, "--seed", 3, "--out-dir", out) == 0
    for name in ("dump.jsonl", "votes.csv", "vectors.txt", "embeddings.csv", "run.json"):
        assert (out / name).exists()


def test_seed_override(small_fixture, tmp_path):
    cfg = small_fixture / "run.json"
    a = run_pipeline(str(cfg), str(tmp_path / "a"), seed=5)
    assert a["seed"] == 5
    assert json.loads((tmp_path / "a" / "report.json").read_text())["run"]["seed"] == 5


def test_relative_paths_follow_config(small_fixture, tmp_path, monkeypatch):
    copy = tmp_path / "fx"
    shutil.copytree(small_fixture, copy, ignore=shutil.ignore_patterns("run"))
    monkeypatch.chdir(tmp_path)
    assert run("ingest", "--config", copy / "run.json", "--out-dir", "o") == 0
    assert os.path.exists(tmp_path / "o" / "corpus.jsonl")
