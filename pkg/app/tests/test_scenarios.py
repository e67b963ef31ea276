"""End-to-end checks on the simulated scenarios (slowest tests of the suite)."""
import numpy as np
import pytest

from app.models.ensemble import TrainConfig, TreeParams
from app.models.features import FeatureSet
from app.services.evaluation_service import EvaluationService
from app.services.feature_service import FeatureService
from app.services.simulation_service import SimulationService
from app.services.window_service import WindowService

ALARM = "IntProt"
TRAIN = TrainConfig(n_rounds=30, tree=TreeParams(max_depth=2))


def scenario_matrix(config, feature_set=FeatureSet.COHORT_PS):
    dataset, _ = SimulationService.generate_cohort(config)
    windows = WindowService.enumerate_windows(dataset, SimulationService.scenario_window())
    windows = WindowService.label_windows(windows, dataset.alarms, [ALARM])
    return FeatureService.build_matrix(windows, dataset, feature_set)


@pytest.fixture(scope="module")
def s1_folds():
    matrix = scenario_matrix(SimulationService.scenario_s1(seed=0))
    folds, _ = EvaluationService.evaluate_matrix(matrix, ALARM, TRAIN)
    return folds


def test_s1_cohort_features_detect_decorrelation(s1_folds):
    assert [f.appliance_id for f in s1_folds] == [f"HVAC0{i}" for i in range(1, 7)]
    assert np.mean([f.auc for f in s1_folds]) >= 0.90


def test_s0_null_scenario_is_at_chance():
    means = []
    for seed in range(5):
        matrix = scenario_matrix(SimulationService.scenario_s0(seed=seed))
        rng = np.random.default_rng(seed)
        labels = rng.random(len(matrix)) < 0.05
        folds, _ = EvaluationService.evaluate_matrix(
            matrix, ALARM, TrainConfig(n_rounds=10, tree=TreeParams(2)), labels=labels,
        )
        means.append(np.mean([f.auc for f in folds]))
    assert 0.40 <= np.mean(means) <= 0.60


def test_s2_seasonal_shift_hurts_baseline_but_not_cohort():
    feature_sets = (FeatureSet.BASELINE, FeatureSet.COHORT_PS)
    reference = scenario_matrix(SimulationService.scenario_s2(seed=0), FeatureSet.COMB)
    before = {}
    for feature_set in feature_sets:
        folds, _ = EvaluationService.evaluate_matrix(reference.select(feature_set), ALARM, TRAIN)
        before[feature_set] = [f.auc for f in folds]
    tested = [f"HVAC0{i}" for i in range(1, 7)]

    after = {feature_set: [] for feature_set in feature_sets}
    for test in tested:
        matrix = scenario_matrix(SimulationService.scenario_s2(test, seed=0), FeatureSet.COMB)
        y = matrix.labels(ALARM)
        train = [a for a in dict.fromkeys(matrix.appliance_ids) if a != test]
        for feature_set in feature_sets:
            fold = EvaluationService.evaluate_fold(matrix.select(feature_set), y, test, train, TRAIN)
            after[feature_set].append(fold.auc)

    assert len(before[FeatureSet.COHORT_PS]) == len(tested)
    assert np.mean(after[FeatureSet.COHORT_PS]) >= np.mean(before[FeatureSet.COHORT_PS]) - 0.05
    assert np.mean(after[FeatureSet.BASELINE]) <= np.mean(before[FeatureSet.BASELINE]) - 0.15
