import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import multinomial_nb_posterior
from reqmine.errors import SchemaError, TrainingError
from reqmine.learn import (
    KINDS,
    DomainError,
    ModelSpec,
    TrainedModel,
    decide,
    predict,
    predict_scores,
    resolve_kind,
    train,
)
from reqmine.learn.forest import DecisionTree, RandomForest


def _blobs(n=40, seed=0, gap=4.0):
    rng = np.random.default_rng(seed)
    x = np.vstack([rng.normal(0, 1, (n, 2)), rng.normal(gap, 1, (n, 2))])
    y = np.array([0] * n + [1] * n)
    return x, y


def test_nb_hand_example():
    x = np.array([[2.0, 0.0], [0.0, 1.0]])
    m = train(ModelSpec("multinomial_nb", {"alpha": 1.0}), x, [0, 1])
    post = predict_scores(m, np.array([[1.0, 0.0]]))[0]
    assert post[0] == pytest.approx(9 / 13, abs=1e-12)
    assert predict(m, np.array([[1.0, 0.0]]))[0] == 0


counts = st.lists(st.lists(st.integers(0, 4), min_size=3, max_size=3), min_size=2, max_size=8)


@settings(max_examples=60, deadline=None)
@given(counts, st.lists(st.integers(0, 3), min_size=3, max_size=3), st.sampled_from([0.1, 0.5, 1.0]), st.data())
def test_nb_matches_enumeration(docs, query, alpha, data):
    labels = data.draw(st.lists(st.integers(0, 1), min_size=len(docs), max_size=len(docs)))
    if len(set(labels)) < 2:
        return
    m = train(ModelSpec("multinomial_nb", {"alpha": alpha}), np.array(docs, float), labels)
    got = predict_scores(m, sp.csr_matrix(np.array([query], float)))[0]
    want = multinomial_nb_posterior(docs, labels, query, alpha)
    assert np.abs(got - want).max() < 1e-9
    assert abs(got.sum() - 1) < 1e-12


def test_nb_rejects_negative_features():
    with pytest.raises(DomainError, match="gaussian_nb"):
        train(ModelSpec("multinomial_nb"), np.array([[-1.0], [1.0]]), [0, 1])


def test_nb_alias_resolution():
    assert resolve_kind("nb", True) == "multinomial_nb"
    assert resolve_kind("nb", False) == "gaussian_nb"
    assert resolve_kind("rf", False) == "random_forest"
    with pytest.raises(ValueError):
        resolve_kind("xgboost", True)


def test_gaussian_nb_constant_feature():
    x = np.array([[1.0, 0.0], [1.0, 0.1], [1.0, 5.0], [1.0, 5.1]])
    m = train(ModelSpec("gaussian_nb"), x, [0, 0, 1, 1])
    assert list(predict(m, x)) == [0, 0, 1, 1]


def test_single_class_rejected():
    with pytest.raises(TrainingError):
        train(ModelSpec("logreg"), np.zeros((3, 2)), [1, 1, 1])


def test_unknown_hyperparameter():
    with pytest.raises(ValueError):
        ModelSpec("knn", {"alpha": 1})


def test_logreg_separable_points():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]])
    m = train(ModelSpec("logreg"), x, [0, 0, 1, 1])
    assert list(predict(m, x)) == [0, 0, 1, 1]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_svm_separable_blobs(seed):
    x, y = _blobs(30, seed, gap=8.0)
    m = train(ModelSpec("linear_svm", {}, seed=seed), x, y)
    assert (predict(m, x) == y).all()


def test_knn_self_neighbour():
    x, y = _blobs(10)
    m = train(ModelSpec("knn", {"k": 1}), x, y)
    assert (predict(m, x) == y).all()


def test_knn_cosine_on_sparse():
    x = sp.csr_matrix(np.array([[1.0, 0.0], [2.0, 0.1], [0.0, 1.0], [0.1, 3.0]]))
    m = train(ModelSpec("knn", {"k": 1}), x, [0, 0, 1, 1])
    assert list(predict(m, sp.csr_matrix(np.array([[10.0, 1.0], [0.0, 0.2]])))) == [0, 1]


def test_forest_single_tree_memorises():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(60, 5))
    y = rng.integers(0, 2, 60)
    y[:2] = [0, 1]
    m = train(ModelSpec("random_forest", {"n_trees": 1, "bootstrap": False, "max_depth": None}), x, y)
    assert (predict(m, x) == y).all()


def test_blob_centroid_classified():
    x, y = _blobs(50, 1)
    for kind in KINDS:
        if kind == "multinomial_nb":
            continue
        hp = {"n_trees": 10} if kind == "random_forest" else {}
        m = train(ModelSpec(kind, hp, seed=2), x, y)
        assert list(predict(m, np.array([[0.0, 0.0], [4.0, 4.0]]))) == [0, 1], kind


def _fit_all(x, y, seed=4):
    out = {}
    for kind in KINDS:
        hp = {"n_trees": 5} if kind == "random_forest" else {}
        xs = np.abs(x) if kind == "multinomial_nb" else x
        out[kind] = (train(ModelSpec(kind, hp, seed=seed), xs, y), xs)
    return out


def test_serialization_is_deterministic_and_round_trips():
    x, y = _blobs(20, 5)
    first, second = _fit_all(x, y), _fit_all(x, y)
    for kind in KINDS:
        m, xs = first[kind]
        assert m.dumps() == second[kind][0].dumps(), kind
        back = TrainedModel.from_dict(json.loads(m.dumps()))
        assert np.array_equal(predict(back, xs), predict(m, xs)), kind


def test_bad_model_file():
    with pytest.raises(SchemaError):
        TrainedModel.from_dict({"format": "other"})


def test_predict_consistency_and_empty_input():
    x, y = _blobs(20, 6, gap=1.0)
    for kind, (m, xs) in _fit_all(x, y).items():
        scores = predict_scores(m, xs)
        assert np.array_equal(decide(scores, m.majority_class), predict(m, xs)), kind
        assert predict(m, xs[:0]).shape == (0,)
        with pytest.raises(ValueError):
            predict(m, np.zeros((1, 7)))


def test_ties_go_to_majority_then_zero():
    scores = np.array([[0.5, 0.5], [0.2, 0.8]])
    assert list(decide(scores, 1)) == [1, 1]
    assert list(decide(scores, 0)) == [0, 1]


def test_tree_round_trip():
    x, y = _blobs(15, 7)
    tree = DecisionTree(max_depth=3, rng=np.random.default_rng(0)).fit(x, y)
    back = DecisionTree.from_dict(tree.to_dict())
    assert np.array_equal(back.predict(x), tree.predict(x))


def test_forest_seed_matters():
    x, y = _blobs(30, 8, gap=1.0)
    a = RandomForest(5, seed=1).fit(x, y).params()
    b = RandomForest(5, seed=2).fit(x, y).params()
    assert a != b
