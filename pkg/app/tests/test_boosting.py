import math

import numpy as np
import pytest

from app.errors import BoostingError, SchemaMismatchError, SingleClassError
from app.models.ensemble import LEAF, TrainConfig, TreeParams
from app.models.features import FeatureSchema, FeatureVector
from app.services.boosting_service import BoostingService

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([-1, 1, 1, -1])


def uniform(n):
    return np.full(n, 1.0 / n)


def noisy_problem(rng, n=80):
    X = rng.normal(size=(n, 3))
    y = np.where(X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.7, size=n) > 0, 1, -1)
    return X, y


def test_stump_finds_the_separating_midpoint():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([-1, -1, 1, 1])
    tree = BoostingService.train_tree(X, y, uniform(4), TreeParams(max_depth=1))
    assert tree.feature[0] == 0
    assert tree.threshold[0] == 2.5
    np.testing.assert_array_equal(tree.predict(X), y)


def test_ties_go_to_the_lowest_feature_index():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    y = np.array([-1, -1, 1, 1])
    tree = BoostingService.train_tree(X, y, uniform(4), TreeParams(max_depth=1))
    assert tree.feature[0] == 0


def test_weighted_leaf_tie_goes_negative():
    X = np.array([[1.0], [1.0]])
    tree = BoostingService.train_tree(X, np.array([1, -1]), uniform(2))
    assert tree.n_nodes == 1 and tree.feature[0] == LEAF
    assert tree.predict(X).tolist() == [-1, -1]


def test_weights_decide_the_leaf():
    X = np.array([[1.0], [1.0]])
    tree = BoostingService.train_tree(X, np.array([1, -1]), np.array([0.6, 0.4]))
    assert tree.predict(X).tolist() == [1, 1]


def test_depth_two_tree_solves_xor():
    tree = BoostingService.train_tree(XOR_X, XOR_Y, uniform(4), TreeParams(max_depth=2))
    assert tree.depth == 2
    np.testing.assert_array_equal(tree.predict(XOR_X), XOR_Y)


def test_min_samples_leaf_blocks_small_children():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([1, -1, -1, -1])
    tree = BoostingService.train_tree(X, y, uniform(4), TreeParams(max_depth=1, min_samples_leaf=2))
    assert tree.threshold[0] == 2.5


def test_stump_cannot_boost_xor():
    with pytest.raises(BoostingError):
        BoostingService.train_adaboost(XOR_X, XOR_Y, TrainConfig(n_rounds=5, tree=TreeParams(1)))


def test_perfect_first_round_stops_training():
    model = BoostingService.train_adaboost(XOR_X, XOR_Y, TrainConfig(n_rounds=5, tree=TreeParams(2)))
    assert len(model.rounds) == 1
    assert model.errors[0] == 0.0
    # alpha uses the clamped error
    assert model.alphas[0] == pytest.approx(0.5 * math.log((1 - 1e-10) / 1e-10))


def test_single_class_is_rejected():
    with pytest.raises(SingleClassError):
        BoostingService.train_adaboost(XOR_X, np.ones(4, dtype=int))


def test_reweighting_trace_matches_hand_simulation(rng):
    X, y = noisy_problem(rng)
    model = BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=4, tree=TreeParams(1)))
    assert len(model.rounds) == 4

    w = uniform(len(y))
    for r in model.rounds:
        h = r.tree.predict(X)
        eps = w[h != y].sum()
        assert r.error == pytest.approx(eps, abs=1e-12)
        assert r.alpha == pytest.approx(0.5 * math.log((1 - eps) / eps), abs=1e-9)
        w = w * np.exp(-r.alpha * y * h)
        w = w / w.sum()
        # after the update the last learner is exactly at chance
        assert w[h != y].sum() == pytest.approx(0.5, abs=1e-12)


def test_training_error_respects_the_boosting_bound(rng):
    X, y = noisy_problem(rng, n=120)
    model = BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=15, tree=TreeParams(1)))
    bound = np.prod([2 * math.sqrt(e * (1 - e)) for e in model.errors])
    assert BoostingService.training_error(model, X, y) <= bound + 1e-12


def test_positive_weight_scales_initial_weights():
    X = np.zeros((4, 1))
    y = np.array([1, -1, -1, -1])
    plain = BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=1))
    heavy = BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=1, positive_weight=5.0))
    # no split is possible, so the single leaf follows the weighted majority
    assert plain.rounds[0].tree.predict(X).tolist() == [-1] * 4
    assert heavy.rounds[0].tree.predict(X).tolist() == [1] * 4
    assert plain.errors[0] == pytest.approx(0.25)
    assert heavy.errors[0] == pytest.approx(3 / 8)


def test_scores_and_classification(rng):
    X, y = noisy_problem(rng)
    model = BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=10, tree=TreeParams(2)))
    scores = BoostingService.score_matrix(model, X)
    assert ((scores >= 0) & (scores <= 1)).all()
    assert BoostingService.score(model, X[3]) == scores[3]
    assert not any(BoostingService.classify(model, x, 1.0) for x in X)
    assert BoostingService.classify(model, X[3], 0.0) == (scores[3] > 0)
    with pytest.raises(ValueError):
        BoostingService.classify(model, X[0], 1.5)


def test_decisions_survive_monotone_feature_transforms(rng):
    X, y = noisy_problem(rng, n=120)
    # rounding keeps some ties in every column
    X = np.round(X, 1)
    warped = np.column_stack([np.exp(X[:, 0]), X[:, 1] ** 3 + 2 * X[:, 1], 5 * X[:, 2] - 3])
    config = TrainConfig(n_rounds=15, tree=TreeParams(max_depth=2))
    plain = BoostingService.train_adaboost(X, y, config)
    bent = BoostingService.train_adaboost(warped, y, config)

    assert [r.alpha for r in plain.rounds] == [r.alpha for r in bent.rounds]
    assert [r.tree.feature for r in plain.rounds] == [r.tree.feature for r in bent.rounds]
    np.testing.assert_array_equal(
        BoostingService.score_matrix(plain, X), BoostingService.score_matrix(bent, warped))
    for tr in (0.25, 0.5, 0.75):
        assert ([BoostingService.classify(plain, x, tr) for x in X]
                == [BoostingService.classify(bent, x, tr) for x in warped])


def test_schema_checks(rng):
    X, y = noisy_problem(rng)
    schema = FeatureSchema(("a", "b", "c"))
    model = BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=3), schema)
    with pytest.raises(SchemaMismatchError):
        BoostingService.score(model, X[0, :2])
    with pytest.raises(SchemaMismatchError):
        BoostingService.score(model, FeatureVector(FeatureSchema(("a", "b", "d")), X[0]))
    assert BoostingService.score(model, FeatureVector(schema, X[0])) == BoostingService.score(model, X[0])
    with pytest.raises(SchemaMismatchError):
        BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=3), FeatureSchema(("a",)))


def test_training_is_deterministic(rng):
    X, y = noisy_problem(rng)
    config = TrainConfig(n_rounds=8, tree=TreeParams(2))
    first = BoostingService.to_document(BoostingService.train_adaboost(X, y, config))
    second = BoostingService.to_document(BoostingService.train_adaboost(X, y, config))
    assert first == second


def test_model_file_round_trip(rng, tmp_path):
    X, y = noisy_problem(rng)
    model = BoostingService.train_adaboost(X, y, TrainConfig(n_rounds=8, tree=TreeParams(3)))
    path = tmp_path / "model.json"
    BoostingService.save_model(model, path, {"alarm_id": "IntProt"})

    loaded = BoostingService.load_model(path)
    assert BoostingService.to_document(loaded) == BoostingService.to_document(model)
    np.testing.assert_array_equal(
        BoostingService.score_matrix(loaded, X), BoostingService.score_matrix(model, X))
    assert loaded.train_config == model.train_config
