import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mann_whitney_enumerated
from reqmine.errors import AggregationError, ValidationError
from reqmine.labels import (
    NON_REQUIREMENT,
    REQUIREMENT,
    LabelTask,
    WorkerVote,
    aggregate,
    corpus_stats,
    exact_p_value,
    export_tasks,
    export_votes,
    import_tasks,
    import_votes,
    majority_vote,
    mann_whitney_u,
    normal_p_value,
    rankdata,
    sample_for_labeling,
    u_distribution,
)
from reqmine.signals import SignalTags
from conftest import make_sentence


def _sents(n):
    return [make_sentence(["w"], doc=f"d{i // 3}", idx=i % 3) for i in range(n)]


def _votes(tid, *values):
    return [WorkerVote(tid, f"w{i}", v) for i, v in enumerate(values)]


def test_sample_fraction_one_takes_all():
    s = _sents(10)
    tasks = sample_for_labeling(s, 1.0, seed=1)
    assert [t.ref for t in tasks] == [x.ref for x in s]


def test_sample_tenth_of_large_corpus():
    assert len(sample_for_labeling(_sents(31183), 0.1, seed=3)) == 3118


def test_sample_deterministic_and_seed_sensitive():
    s = _sents(200)
    a = sample_for_labeling(s, 0.2, seed=5)
    assert a == sample_for_labeling(s, 0.2, seed=5)
    assert a != sample_for_labeling(s, 0.2, seed=6)
    pos = {x.ref: i for i, x in enumerate(s)}
    order = [pos[t.ref] for t in a]
    assert order == sorted(order)


def test_sample_bad_fraction():
    with pytest.raises(ValueError):
        sample_for_labeling(_sents(3), 0.0, 1)


def test_task_and_vote_round_trip():
    tasks = [LabelTask(f"d#{i}", "d", i, f"text, with \"quotes\" {i}") for i in range(5)]
    assert import_tasks(export_tasks(tasks)) == tasks
    votes = [WorkerVote(t.task_id, f"w{j}", "yes" if (i + j) % 2 else "no") for i, t in enumerate(tasks) for j in range(3)]
    back = import_votes(export_votes(votes), known_tasks=[t.task_id for t in tasks])
    assert back == votes
    assert len(back) == 15


def test_crlf_and_lf_parse_identically():
    lf = b"task_id,worker_id,vote\nd#0,w1,yes\nd#0,w2,no\n"
    crlf = lf.replace(b"\n", b"\r\n")
    assert import_votes(lf.decode()) == import_votes(crlf.decode())


def test_bad_vote_value():
    with pytest.raises(ValidationError, match="maybe"):
        import_votes("task_id,worker_id,vote\nd#0,w1,maybe\n")


def test_unknown_and_duplicate_votes_reported_with_lines():
    text = "task_id,worker_id,vote\nd#0,w1,yes\nd#0,w1,no\nzz#9,w2,yes\n"
    with pytest.raises(ValidationError) as exc:
        import_votes(text, known_tasks=["d#0"])
    details = "\n".join(exc.value.details)
    assert "line 3" in details and "duplicate" in details
    assert "line 4" in details and "zz#9" in details


def test_wrong_header():
    with pytest.raises(ValidationError):
        import_votes("task,worker,vote\n")


def test_majority_examples():
    assert majority_vote(_votes("t", "yes", "yes", "no")) == REQUIREMENT
    assert majority_vote(_votes("t", "no", "no", "no")) == NON_REQUIREMENT
    with pytest.raises(AggregationError, match="t"):
        majority_vote(_votes("t", "yes", "no"))
    with pytest.raises(AggregationError):
        majority_vote(_votes("t", "yes"))


@given(st.lists(st.sampled_from(["yes", "no"]), min_size=3, max_size=9).filter(lambda v: len(v) % 2), st.randoms(use_true_random=False))
def test_majority_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert majority_vote(_votes("t", *values)) == majority_vote(_votes("t", *shuffled))


def test_aggregate_splits_labeled_and_unlabeled():
    tasks = [LabelTask("a#0", "a", 0, "x"), LabelTask("a#1", "a", 1, "y")]
    labeled, unlabeled = aggregate(tasks, _votes("a#0", "no", "yes", "yes"))
    assert [(x.doc_id, x.sent_index, x.label) for x in labeled] == [("a", 0, REQUIREMENT)]
    assert unlabeled == ["a#1"]


def test_rankdata_average_ties():
    assert rankdata([3, 1, 3, 2]) == [3.5, 1.0, 3.5, 2.0]


def test_u_distribution_sums_to_binomial():
    for n1, n2 in [(1, 1), (2, 3), (4, 4), (5, 7)]:
        assert sum(u_distribution(n1, n2)) == math.comb(n1 + n2, n1)


def test_mann_whitney_small_example():
    r = mann_whitney_u([1, 2], [3, 4])
    assert r.u_statistic == 0
    assert r.method == "exact"
    assert r.p_value == pytest.approx(1 / 3, abs=1e-15)


def test_mann_whitney_identical_samples():
    r = mann_whitney_u([1, 2, 3], [1, 2, 3])
    assert r.u_statistic == 4.5
    assert r.p_value == pytest.approx(1.0)


def test_mann_whitney_empty_rejected():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])


distinct = st.lists(st.integers(-1000, 1000), min_size=2, max_size=10, unique=True)


@settings(max_examples=80)
@given(distinct, st.data())
def test_exact_p_matches_enumeration(pool, data):
    n1 = data.draw(st.integers(1, len(pool) - 1))
    a, b = pool[:n1], pool[n1:]
    u, p = mann_whitney_enumerated(a, b)
    r = mann_whitney_u(a, b)
    assert r.u_statistic == u
    assert r.p_value == p


@given(st.lists(st.integers(0, 20), min_size=1, max_size=12), st.lists(st.integers(0, 20), min_size=1, max_size=12))
def test_u_statistics_complement(a, b):
    assert mann_whitney_u(a, b).u_statistic + mann_whitney_u(b, a).u_statistic == len(a) * len(b)


@settings(max_examples=60)
@given(st.integers(12, 16), st.data())
def test_exact_and_normal_agree_for_balanced_splits(n, data):
    # splits with a side below four are excluded: there the continuity-corrected
    # normal curve is too coarse (n1=1 misses by over 0.1)
    n1 = data.draw(st.integers(4, n - 4))
    pool = data.draw(st.permutations(list(range(n))))
    a, b = pool[:n1], pool[n1:]
    exact = mann_whitney_u(a, b, method="exact").p_value
    approx = mann_whitney_u(a, b, method="normal_approx").p_value
    assert abs(exact - approx) <= 0.02


def test_normal_approx_with_ties_is_used_automatically():
    r = mann_whitney_u([1, 1, 2], [2, 3, 3])
    assert r.method == "normal_approx"
    assert 0 < r.p_value <= 1
    assert normal_p_value(0, 3, 3) < exact_p_value(0, 3, 3) + 0.05


def _tags(wc, kc=0, q=False):
    return SignalTags(kc > 0, kc, q, wc)


def test_stats_schema_for_1290_1828_split():
    labels = [REQUIREMENT] * 1828 + [NON_REQUIREMENT] * 1290
    tags = [_tags(10)] * len(labels)
    s = corpus_stats(labels, tags)
    assert s["class_counts"] == {REQUIREMENT: 1828, NON_REQUIREMENT: 1290}
    assert math.floor(s["class_ratio_non_requirement_to_requirement"] * 100) / 100 == 0.70


def test_stats_single_class_degenerate():
    s = corpus_stats([REQUIREMENT] * 4, [_tags(3)] * 4)
    assert s["mann_whitney"]["word_count"]["status"] == "degenerate"


def test_stats_separated_word_counts_reject():
    labels = [REQUIREMENT] * 6 + [NON_REQUIREMENT] * 6
    tags = [_tags(20 + i) for i in range(6)] + [_tags(3 + i) for i in range(6)]
    mw = corpus_stats(labels, tags)["mann_whitney"]["word_count"]
    assert mw["method"] == "exact"
    assert mw["p_value"] < 0.05


def test_stats_crosstabs():
    labels = [REQUIREMENT, REQUIREMENT, NON_REQUIREMENT, NON_REQUIREMENT]
    tags = [_tags(5, 1, True), _tags(5, 0, True), _tags(5, 2, False), _tags(5, 0, True)]
    s = corpus_stats(labels, tags)
    assert s["keyword"] == {"sentences": 2, "requirement": 1, "requirement_share": 0.5}
    assert s["interrogative"]["sentences"] == 3
    assert s["interrogative"]["requirement"] == 2
    assert s["overlap"]["requirement_and_interrogative_and_keyword"] == 1


def test_sampling_smoke_many_seeds():
    s = _sents(100)
    draws = {tuple(t.task_id for t in sample_for_labeling(s, 0.1, seed)) for seed in range(20)}
    assert len(draws) == 20
