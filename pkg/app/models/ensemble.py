from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Tuple

import numpy as np

from app.errors import InvariantViolation

LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 3
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")


@dataclass(frozen=True)
class TrainConfig:
    n_rounds: int = 100
    tree: TreeParams = TreeParams()
    epsilon_clamp: float = 1e-10
    seed: int = 0
    # Initial weight multiplier for positive samples; 1.0 keeps uniform weights.
    positive_weight: float = 1.0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if not 0 < self.epsilon_clamp < 0.5:
            raise ValueError(f"epsilon_clamp must lie in (0, 0.5), got {self.epsilon_clamp}")
        if self.positive_weight <= 0:
            raise ValueError(f"positive_weight must be positive, got {self.positive_weight}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data) -> "TrainConfig":
        data = dict(data)
        data["tree"] = TreeParams(**data.get("tree", {}))
        return cls(**data)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Binary tree stored as parallel node arrays; node 0 is the root.

    Internal nodes send x to `left` when x[feature] <= threshold.
    Leaves have feature == LEAF and carry a class in {-1, +1}.
    """
    feature: Tuple[int, ...]
    threshold: Tuple[float, ...]
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    label: Tuple[int, ...]

    def __post_init__(self):
        n = len(self.feature)
        if not n or any(len(a) != n for a in (self.threshold, self.left, self.right, self.label)):
            raise InvariantViolation("decision tree node arrays are empty or ragged")

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        def _depth(node):
            if self.feature[node] == LEAF:
                return 0
            return 1 + max(_depth(self.left[node]), _depth(self.right[node]))
        return _depth(0)

    @property
    def max_feature_index(self) -> int:
        return max(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        feature = np.array(self.feature)
        threshold = np.array(self.threshold)
        left = np.array(self.left)
        right = np.array(self.right)
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            active = feature[node] != LEAF
            if not active.any():
                break
            f = np.where(active, feature[node], 0)
            go_left = X[rows, f] <= threshold[node]
            node = np.where(active, np.where(go_left, left[node], right[node]), node)
        return np.array(self.label)[node]

    def to_dict(self, node: int = 0):
        if self.feature[node] == LEAF:
            return {"leaf": int(self.label[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(self.left[node]),
            "right": self.to_dict(self.right[node]),
        }

    @classmethod
    def from_dict(cls, data) -> "DecisionTree":
        feature, threshold, left, right, label = [], [], [], [], []

        def _add(item):
            index = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            label.append(0)
            if "leaf" in item:
                label[index] = int(item["leaf"])
            else:
                feature[index] = int(item["feature"])
                threshold[index] = float(item["threshold"])
                left[index] = _add(item["left"])
                right[index] = _add(item["right"])
            return index

        _add(data)
        return cls(tuple(feature), tuple(threshold), tuple(left), tuple(right), tuple(label))


@dataclass(frozen=True, eq=False)
class BoostingRound:
    tree: DecisionTree
    alpha: float
    # Unclamped weighted training error of the tree at this round.
    error: float


@dataclass(frozen=True, eq=False)
class AdaBoostModel:
    rounds: Tuple[BoostingRound, ...]
    schema_names: Tuple[str, ...]
    schema_fingerprint: str
    train_config: TrainConfig

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        object.__setattr__(self, "schema_names", tuple(self.schema_names))
        if not self.rounds:
            raise InvariantViolation("an AdaBoost model needs at least one round")
        for r in self.rounds:
            if not np.isfinite(r.alpha) or r.alpha < 0:
                raise InvariantViolation(f"round weight {r.alpha} is not a finite non-negative number")
            if r.tree.max_feature_index >= len(self.schema_names):
                raise InvariantViolation("tree splits on a feature outside the schema")

    @property
    def alphas(self) -> np.ndarray:
        return np.array([r.alpha for r in self.rounds])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rounds])

    def margins(self, X: np.ndarray) -> np.ndarray:
        """Normalized vote in [-1, 1] for each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        total = np.zeros(X.shape[0])
        for r in self.rounds:
            total += r.alpha * r.tree.predict(X)
        return np.clip(total / self.alphas.sum(), -1.0, 1.0)
