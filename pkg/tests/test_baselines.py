import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import separable_task
from tannin import checkpoint
from tannin.baselines import (
    KINDS,
    BaselineSpec,
    DecisionTree,
    RandomForest,
    fit_baseline,
    predict_baseline,
)
from tannin.data import SplitSpec, split
from tannin.preprocess import fit_scaler, transform

FAST = {
    "knn": {},
    "logistic_regression": {"epochs": 200},
    "random_forest": {"n_trees": 15, "max_depth": 8},
    "linear_svm": {"epochs": 200},
}


def _spec(kind, seed=0, **hp):
    return BaselineSpec(kind, {**FAST[kind], **hp}, seed)


@pytest.fixture(scope="module")
def wine_scaled(red_wine):
    train, test = split(red_wine, SplitSpec(0.2, 42, True))
    scaler = fit_scaler(train)
    return transform(scaler, train), train.y, transform(scaler, test), test.y


# ---- logistic regression


def test_lr_separable_reaches_full_training_accuracy(separable):
    X, y = separable
    clf = fit_baseline(BaselineSpec("logistic_regression", {}, 0), X, y)
    assert (predict_baseline(clf, X) == y).mean() == 1.0


def test_lr_loss_non_increasing_at_small_step(wine_scaled):
    X, y, _, _ = wine_scaled
    clf = fit_baseline(BaselineSpec("logistic_regression", {"learning_rate": 1e-3, "epochs": 300}, 0), X, y)
    h = np.array(clf.loss_history)
    assert len(h) == 301
    assert np.all(np.diff(h) <= 1e-15)
    assert h[-1] < h[0]


def test_lr_first_loss_is_uniform(separable):
    X, y = separable
    clf = fit_baseline(BaselineSpec("logistic_regression", {"epochs": 1}, 0), X, y)
    assert clf.loss_history[0] == pytest.approx(np.log(10), abs=1e-12)


def test_svm_separable_reaches_full_training_accuracy(separable):
    X, y = separable
    clf = fit_baseline(BaselineSpec("linear_svm", {"C": 100.0, "epochs": 2000, "learning_rate": 0.5}, 0), X, y)
    assert (predict_baseline(clf, X) == y).mean() == 1.0


# ---- kNN


def test_knn_k1_returns_label_of_exact_training_point(separable):
    X, y = separable
    clf = fit_baseline(BaselineSpec("knn", {"k": 1}, 0), X, y)
    np.testing.assert_array_equal(predict_baseline(clf, X), y)


def test_knn_k3_hand_example():
    # points 0,1,2 are class 3; points 10,11 are class 7
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0]])
    y = np.array([3, 3, 3, 7, 7])
    clf = fit_baseline(BaselineSpec("knn", {"k": 3}, 0), X, y)
    # 1.4 -> {1,2,0}: all 3; 9 -> {10,11,2}: two 7s; 6.2 -> {2,10,11}: two 7s
    np.testing.assert_array_equal(predict_baseline(clf, [[1.4], [9.0], [6.2]]), [3, 7, 7])


def test_knn_tie_broken_by_inverse_distance_then_label():
    X = np.array([[0.0], [3.0]])
    y = np.array([4, 2])
    clf = fit_baseline(BaselineSpec("knn", {"k": 2}, 0), X, y)
    # query 1.0 is closer to the class-4 point; 1.5 is equidistant so the smaller label wins
    np.testing.assert_array_equal(predict_baseline(clf, [[1.0], [2.0], [1.5]]), [4, 2, 2])


def test_knn_with_k_equal_to_train_size_predicts_global_majority():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 4))
    y = rng.choice([4, 5, 6], size=40, p=[0.2, 0.5, 0.3])
    majority = np.bincount(y).argmax()
    clf = fit_baseline(BaselineSpec("knn", {"k": 40}, 0), X, y)
    assert set(predict_baseline(clf, rng.normal(size=(25, 4)) * 5)) == {majority}


# ---- trees and forests


def test_single_tree_forest_matches_decision_tree():
    X, y = separable_task(n=120, d=5, seed=4)
    y = np.where(X[:, 0] > 0.5, 7, y)
    hp = {"n_trees": 1, "max_depth": None, "min_leaf": 1, "feature_subsample": "all", "bootstrap": False}
    rf = fit_baseline(BaselineSpec("random_forest", hp, 9), X, y)
    tree = DecisionTree(max_depth=None, min_leaf=1).fit(X, y)
    probe = np.random.default_rng(1).normal(size=(300, 5)) * 2
    np.testing.assert_array_equal(rf.predict(probe), tree.predict(probe))
    np.testing.assert_array_equal(rf.predict(X), y)


def test_tree_depth_zero_is_majority_leaf():
    X = np.arange(10.0)[:, None]
    y = np.array([1] * 3 + [2] * 7)
    tree = DecisionTree(max_depth=0).fit(X, y)
    assert set(tree.predict(X)) == {2}


def test_forest_votes_invariant_under_tree_order(separable):
    X, y = separable
    rf = fit_baseline(_spec("random_forest", seed=5), X, y)
    before_votes, before = rf.votes(X), rf.predict(X)
    rf.trees = rf.trees[::-1]
    np.testing.assert_array_equal(rf.votes(X), before_votes)
    rng = np.random.default_rng(0)
    rf.trees = [rf.trees[i] for i in rng.permutation(len(rf.trees))]
    np.testing.assert_array_equal(rf.predict(X), before)


def test_forest_vote_ties_go_to_smaller_label():
    rf = RandomForest(BaselineSpec("random_forest", {"n_trees": 2}, 0))
    X = np.array([[0.0], [1.0]])
    rf.fit(X, np.array([3, 8]))

    class Fixed:
        def __init__(self, label):
            self.label = label

        def predict(self, X):
            return np.full(len(X), self.label)

    rf.trees = [Fixed(8), Fixed(3)]
    np.testing.assert_array_equal(rf.predict(X), [3, 3])


# ---- shared properties


@pytest.mark.parametrize("kind", KINDS)
def test_fit_is_deterministic(kind, wine_scaled):
    X, y, Xt, _ = wine_scaled
    a = predict_baseline(fit_baseline(_spec(kind, seed=11), X, y), Xt)
    b = predict_baseline(fit_baseline(_spec(kind, seed=11), X, y), Xt)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("kind", KINDS)
def test_training_accuracy_at_least_majority(kind, wine_scaled):
    X, y, _, _ = wine_scaled
    clf = fit_baseline(_spec(kind), X, y)
    majority = np.bincount(y).max() / len(y)
    assert (predict_baseline(clf, X) == y).mean() >= majority


@pytest.mark.parametrize("kind", KINDS)
def test_checkpoint_round_trip(kind, wine_scaled, tmp_path):
    X, y, Xt, _ = wine_scaled
    clf = fit_baseline(_spec(kind, seed=2), X, y)
    path = tmp_path / f"{kind}.json"
    checkpoint.save(checkpoint.classifier_to_dict(clf), path)
    again, scaler = checkpoint.classifier_from_dict(checkpoint.load(path))
    assert scaler is None
    assert again.spec.to_dict() == clf.spec.to_dict()
    np.testing.assert_array_equal(predict_baseline(again, Xt), predict_baseline(clf, Xt))


@pytest.mark.parametrize("kind", KINDS)
def test_dimension_mismatch_rejected(kind, separable):
    X, y = separable
    clf = fit_baseline(_spec(kind), X, y)
    with pytest.raises(ValueError, match="features"):
        predict_baseline(clf, X[:, :5])


@pytest.mark.parametrize("kind", KINDS)
def test_empty_training_set_rejected(kind):
    with pytest.raises(ValueError, match="empty"):
        fit_baseline(_spec(kind), np.zeros((0, 3)), np.zeros(0, dtype=int))


@pytest.mark.parametrize(
    "kind, hp",
    [
        ("knn", {"k": 0}),
        ("knn", {"k": 2.5}),
        ("random_forest", {"n_trees": 0}),
        ("random_forest", {"min_leaf": 0}),
        ("linear_svm", {"C": 0.0}),
        ("linear_svm", {"C": -1.0}),
        ("logistic_regression", {"learning_rate": 0.0}),
        ("logistic_regression", {"l2": -1.0}),
        ("logistic_regression", {"momentum": 0.9}),
    ],
)
def test_invalid_hyperparameters_rejected(kind, hp):
    with pytest.raises(ValueError):
        BaselineSpec(kind, hp, 0)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown baseline"):
        BaselineSpec("xgboost")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 7))
def test_knn_predictions_are_training_labels(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 3))
    y = rng.integers(3, 9, size=15)
    pred = predict_baseline(fit_baseline(BaselineSpec("knn", {"k": k}, 0), X, y), rng.normal(size=(10, 3)))
    assert set(pred) <= set(y)
