from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.errors import InvariantViolation


@dataclass(frozen=True)
class FoldPlan:
    alarm_id: str
    # (test appliance, training appliances) per fold
    folds: Tuple[Tuple[str, Tuple[str, ...]], ...]

    def __len__(self):
        return len(self.folds)

    @property
    def test_appliances(self) -> Tuple[str, ...]:
        return tuple(test for test, _ in self.folds)


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        for name in ("fpr", "tpr", "thresholds"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.fpr) == len(self.tpr) == len(self.thresholds)) or len(self.fpr) < 2:
            raise InvariantViolation("ROC curve needs matching point arrays of length >= 2")
        if np.any(np.diff(self.fpr) < 0) or np.any(np.diff(self.tpr) < 0):
            raise InvariantViolation("ROC rates must be non-decreasing along the curve")
        if (self.fpr[0], self.tpr[0]) != (0.0, 0.0) or (self.fpr[-1], self.tpr[-1]) != (1.0, 1.0):
            raise InvariantViolation("ROC curve must run from (0,0) to (1,1)")

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))

    def __len__(self):
        return len(self.fpr)


@dataclass(frozen=True)
class CostModel:
    c_um: float
    c_uoc: float

    def __post_init__(self):
        if self.c_um < 0 or self.c_uoc < 0:
            raise ValueError(f"unit costs must be non-negative, got {self.c_um}, {self.c_uoc}")


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: float
    cost: float
    n_um: int
    n_uoc: int


@dataclass(frozen=True, eq=False)
class FoldResult:
    appliance_id: str
    roc: RocCurve
    auc: float
    scores: np.ndarray
    labels: np.ndarray
    threshold: Optional[ThresholdChoice] = None

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise InvariantViolation(f"fold AUC {self.auc} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    alarm_id: str
    feature_set: str
    folds: Tuple[FoldResult, ...]
    average: RocCurve

    @property
    def mean_auc(self) -> float:
        return float(np.mean([f.auc for f in self.folds]))
