import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from app.errors import EmptyFoldPlanError, InvariantViolation, SingleClassError
from app.models.ensemble import TrainConfig
from app.models.evaluation import (
    CostModel, ExperimentResult, FoldPlan, FoldResult, RocCurve, ThresholdChoice,
)
from app.models.features import FeatureMatrix, FeatureSet
from app.models.telemetry import CohortDataset
from app.models.windows import LabeledWindow, WindowSpec
from app.services.boosting_service import BoostingService
from app.services.feature_service import FeatureService
from app.services.window_service import WindowService

logger = logging.getLogger(__name__)


def _check_two_classes(labels: np.ndarray):
    if not (labels.any() and (~labels).any()):
        raise SingleClassError("need at least one positive and one negative label")


class EvaluationService:
    @staticmethod
    def make_folds(windows: Sequence[LabeledWindow], alarm_id: str) -> FoldPlan:
        """One fold per appliance with at least one positive window.

        A fold whose training appliances hold a single class is skipped with a
        warning.
        """
        appliances = list(dict.fromkeys(w.appliance_id for w in windows))
        positives = {a for a in appliances
                     if any(w.label(alarm_id) for w in windows if w.appliance_id == a)}
        if not positives:
            raise EmptyFoldPlanError(f"empty fold plan: no appliance has a positive window for {alarm_id}")
        folds = []
        for test in appliances:
            if test not in positives:
                continue
            classes = {w.label(alarm_id) for w in windows if w.appliance_id != test}
            if len(classes) < 2:
                logger.warning("Skipping fold %s for %s: its training windows hold a single class",
                               test, alarm_id)
                continue
            folds.append((test, tuple(a for a in appliances if a != test)))
        if not folds:
            raise EmptyFoldPlanError(
                f"empty fold plan: no fold for {alarm_id} trains on both classes "
                f"(positives only on {', '.join(sorted(positives))})"
            )
        return FoldPlan(alarm_id, tuple(folds))

    @staticmethod
    def roc_curve(scores, labels) -> RocCurve:
        """ROC with one point per distinct score, preceded by (0, 0).

        The point at threshold s counts a window as positive iff its score >= s.
        """
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels, dtype=bool)
        if scores.shape != labels.shape:
            raise ValueError("scores and labels must have the same length")
        _check_two_classes(labels)

        order = np.argsort(-scores, kind="stable")
        scores, labels = scores[order], labels[order]
        tp = np.cumsum(labels)
        fp = np.cumsum(~labels)
        # last index of every run of tied scores
        ends = np.flatnonzero(np.r_[scores[1:] != scores[:-1], True])
        tpr = np.r_[0.0, tp[ends] / tp[-1]]
        fpr = np.r_[0.0, fp[ends] / fp[-1]]
        thresholds = np.r_[np.inf, scores[ends]]
        return RocCurve(fpr, tpr, thresholds)

    @staticmethod
    def auc(curve: RocCurve) -> float:
        return float(trapezoid(curve.tpr, curve.fpr))

    @staticmethod
    def average_roc(folds: Sequence[FoldResult], grid_size: int = 101) -> RocCurve:
        """Vertical averaging of fold curves on a uniform FPR grid."""
        if not folds:
            raise ValueError("cannot average an empty list of folds")
        if grid_size < 2:
            raise ValueError(f"grid_size must be at least 2, got {grid_size}")
        grid = np.linspace(0.0, 1.0, grid_size)
        curves = []
        for fold in folds:
            fpr, tpr = fold.roc.fpr, fold.roc.tpr
            # collapse vertical segments onto their upper end
            last = np.r_[fpr[1:] != fpr[:-1], True]
            curves.append(np.interp(grid, fpr[last], tpr[last]))
        tpr = np.mean(curves, axis=0)
        # Every fold curve ends at (1, 1); pin the mean against rounding.
        tpr[-1] = 1.0
        fpr_points = np.r_[0.0, grid]
        tpr_points = np.r_[0.0, tpr]
        return RocCurve(fpr_points, tpr_points, np.full(len(fpr_points), np.nan))

    @staticmethod
    def expected_cost(n_um: int, n_uoc: int, cm: CostModel) -> float:
        if n_um < 0 or n_uoc < 0:
            raise ValueError("error counts must be non-negative")
        return n_um * cm.c_um + n_uoc * cm.c_uoc

    @staticmethod
    def candidate_thresholds(scores) -> np.ndarray:
        """0, 1 and the midpoints between distinct scores, ascending.

        When some score is 0, Tr = 0 leaves that window silent, so -inf
        (alarm on every window) leads the candidates.
        """
        distinct = np.unique(np.asarray(scores, dtype=np.float64))
        mids = (distinct[1:] + distinct[:-1]) / 2.0
        candidates = np.unique(np.r_[0.0, mids, 1.0])
        if len(distinct) and distinct[0] <= 0.0:
            candidates = np.r_[-np.inf, candidates]
        return candidates

    @staticmethod
    def select_threshold(scores, labels, cm: CostModel) -> ThresholdChoice:
        """Cost-minimizing Tr; ties go to the largest Tr (fewest interventions)."""
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels, dtype=bool)
        _check_two_classes(labels)
        best = None
        for tr in EvaluationService.candidate_thresholds(scores):
            alarm = scores > tr
            n_um = int((alarm & ~labels).sum())
            n_uoc = int((~alarm & labels).sum())
            cost = EvaluationService.expected_cost(n_um, n_uoc, cm)
            # candidates ascend, so <= keeps the largest Tr among equal costs
            if best is None or cost <= best.cost:
                best = ThresholdChoice(float(tr), float(cost), n_um, n_uoc)
        return best

    # -- experiments ------------------------------------------------------------------

    @staticmethod
    def evaluate_matrix(matrix: FeatureMatrix, alarm_id: str, train_config: TrainConfig,
                        cost: Optional[CostModel] = None, grid_size: int = 101,
                        labels: Optional[np.ndarray] = None) -> Tuple[List[FoldResult], RocCurve]:
        """Leave-one-appliance-out evaluation over a prebuilt feature matrix.

        `labels` overrides the window labels (used by the null scenario).
        """
        y = matrix.labels(alarm_id) if labels is None else np.asarray(labels, dtype=bool)
        windows = [w.with_labels({alarm_id: bool(v)}) for w, v in zip(matrix.windows, y)]
        plan = EvaluationService.make_folds(windows, alarm_id)
        results = [
            EvaluationService.evaluate_fold(matrix, y, test, train, train_config, cost)
            for test, train in plan.folds
        ]
        return results, EvaluationService.average_roc(results, grid_size)

    @staticmethod
    def evaluate_fold(matrix: FeatureMatrix, y: np.ndarray, test: str, train: Sequence[str],
                      train_config: TrainConfig, cost: Optional[CostModel] = None) -> FoldResult:
        """Train on the `train` appliances' windows and score every window of `test`."""
        owners = matrix.appliance_ids
        test_rows = np.flatnonzero(owners == test)
        train_rows = np.flatnonzero(np.isin(owners, list(train)))
        if np.intersect1d(test_rows, train_rows).size:
            raise InvariantViolation(f"fold {test}: test windows leaked into training")
        model = BoostingService.train_adaboost(
            matrix.X[train_rows], y[train_rows], train_config, matrix.schema
        )
        scores = BoostingService.score_matrix(model, matrix.X[test_rows])
        truth = y[test_rows]
        roc = EvaluationService.roc_curve(scores, truth)
        area = EvaluationService.auc(roc)
        choice = EvaluationService.select_threshold(scores, truth, cost) if cost else None
        logger.info("Fold %s: AUC %.3f over %d windows (%d positive)",
                    test, area, len(truth), int(truth.sum()))
        return FoldResult(test, roc, area, scores, truth, choice)

    @staticmethod
    def run_experiment(dataset: Optional[CohortDataset], spec: WindowSpec, feature_set: FeatureSet,
                       train_config: TrainConfig, alarm_id: str,
                       cost: Optional[CostModel] = None, grid_size: int = 101,
                       matrix: Optional[FeatureMatrix] = None) -> ExperimentResult:
        """Train on all but one appliance, score the held-out one, for every fold.

        A prebuilt matrix (e.g. the Comb matrix) may be passed in and is
        column-sliced to the requested feature set.
        """
        if matrix is None:
            windows = WindowService.enumerate_windows(dataset, spec)
            windows = WindowService.label_windows(windows, dataset.alarms, [alarm_id])
            matrix = FeatureService.build_matrix(windows, dataset, feature_set)
        else:
            matrix = matrix.select(feature_set)
        folds, average = EvaluationService.evaluate_matrix(
            matrix, alarm_id, train_config, cost, grid_size
        )
        result = ExperimentResult(alarm_id, feature_set.label, tuple(folds), average)
        logger.info("%s / %s: mean AUC %.3f over %d folds",
                    alarm_id, feature_set.label, result.mean_auc, len(folds))
        return result
