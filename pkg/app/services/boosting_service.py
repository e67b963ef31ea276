import json
import logging
import math
from typing import Optional

import numpy as np

from app.errors import BoostingError, DataError, SchemaMismatchError, SingleClassError
from app.models.ensemble import (
    LEAF, AdaBoostModel, BoostingRound, DecisionTree, TrainConfig, TreeParams,
)
from app.models.features import FeatureSchema, FeatureVector
from app.utils.artifacts import atomic_write_text

logger = logging.getLogger(__name__)

MODEL_FORMAT = "cohort-adaboost/1"


def _as_signed(y) -> np.ndarray:
    """Labels as {-1, +1}; booleans map True -> +1."""
    y = np.asarray(y)
    if y.dtype == bool:
        return np.where(y, 1, -1)
    y = y.astype(np.int64)
    if not np.isin(y, (-1, 1)).all():
        raise DataError("labels must be booleans or in {-1, +1}")
    return y


def _leaf_label(w_pos: float, w_neg: float) -> int:
    # Weighted majority; an exact tie goes to -1.
    return 1 if w_pos > w_neg else -1


class _SplitSearch:
    """Greedy weighted-Gini tree growth over presorted feature columns."""

    def __init__(self, X: np.ndarray, y: np.ndarray, w: np.ndarray, params: TreeParams,
                 order: Optional[np.ndarray] = None):
        self.X = X
        self.pos = w * (y > 0)
        self.w = w
        self.params = params
        # order[:, j] sorts column j ascending; stable so equal values keep sample order
        self.order = np.argsort(X, axis=0, kind="stable") if order is None else order
        self.nodes = []

    def grow(self) -> DecisionTree:
        self._grow(np.ones(self.X.shape[0], dtype=bool), depth=0)
        feature, threshold, left, right, label = (tuple(col) for col in zip(*self.nodes))
        return DecisionTree(feature, threshold, left, right, label)

    def _new_node(self):
        self.nodes.append([LEAF, 0.0, LEAF, LEAF, 0])
        return len(self.nodes) - 1

    def _grow(self, mask: np.ndarray, depth: int) -> int:
        index = self._new_node()
        w_pos = float(self.pos[mask].sum())
        w_all = float(self.w[mask].sum())
        w_neg = w_all - w_pos
        pure = w_pos == 0.0 or w_neg == 0.0
        split = None
        if not pure and depth < self.params.max_depth:
            split = self._best_split(mask)
        if split is None:
            self.nodes[index][4] = _leaf_label(w_pos, w_neg)
            return index

        feature, threshold = split
        goes_left = self.X[:, feature] <= threshold
        left = self._grow(mask & goes_left, depth + 1)
        right = self._grow(mask & ~goes_left, depth + 1)
        self.nodes[index][:4] = [feature, threshold, left, right]
        return index

    def _best_split(self, mask: np.ndarray):
        """Lowest weighted Gini over (feature, midpoint) candidates; first minimum wins."""
        m = int(mask.sum())
        leaf = self.params.min_samples_leaf
        if m < 2 * leaf:
            return None
        d = self.X.shape[1]
        # member indices per feature, each column sorted by that feature
        member = mask[self.order]
        idx = self.order.T[member.T].reshape(d, m)
        values = np.take_along_axis(self.X.T, idx, axis=1)
        pos = self.pos[idx]
        tot = self.w[idx]

        # cut c puts sorted positions [0..c] left
        cum_pos = np.cumsum(pos, axis=1)[:, :-1]
        cum_tot = np.cumsum(tot, axis=1)[:, :-1]
        all_pos = cum_pos[:, -1:] + pos[:, -1:]
        all_tot = cum_tot[:, -1:] + tot[:, -1:]
        left_pos, left_tot = cum_pos, cum_tot
        right_pos, right_tot = all_pos - cum_pos, all_tot - cum_tot

        with np.errstate(invalid="ignore", divide="ignore"):
            # W * gini = W - (p^2 + n^2) / W
            left_imp = left_tot - (left_pos ** 2 + (left_tot - left_pos) ** 2) / left_tot
            right_imp = right_tot - (right_pos ** 2 + (right_tot - right_pos) ** 2) / right_tot
        left_imp = np.where(left_tot > 0, left_imp, 0.0)
        right_imp = np.where(right_tot > 0, right_imp, 0.0)
        impurity = left_imp + right_imp

        sizes = np.arange(1, m)
        valid = (values[:, :-1] < values[:, 1:]) & (sizes >= leaf) & (m - sizes >= leaf)
        if not valid.any():
            return None
        impurity = np.where(valid, impurity, np.inf)
        flat = int(np.argmin(impurity))
        feature, cut = divmod(flat, m - 1)
        threshold = (values[feature, cut] + values[feature, cut + 1]) / 2.0
        # Midpoint of two adjacent floats can round onto the upper value.
        if threshold >= values[feature, cut + 1]:
            threshold = values[feature, cut]
        return feature, float(threshold)


class BoostingService:
    @staticmethod
    def train_tree(X, y, w, params: TreeParams = TreeParams(),
                   order: Optional[np.ndarray] = None) -> DecisionTree:
        """Grow one depth-limited tree by weighted-Gini greedy splitting.

        Ties resolve to the lowest feature index, then the lowest threshold.
        `order` may carry a precomputed column-wise argsort of X.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise DataError("training needs a non-empty 2-D feature matrix")
        y = _as_signed(y)
        w = np.asarray(w, dtype=np.float64)
        if len(y) != X.shape[0] or len(w) != X.shape[0]:
            raise DataError("labels and weights must have one entry per sample")
        if (w < 0).any() or not w.sum() > 0:
            raise DataError("sample weights must be non-negative with a positive sum")
        return _SplitSearch(X, y, w, params, order).grow()

    @staticmethod
    def train_adaboost(X, y, config: TrainConfig = TrainConfig(),
                       schema: Optional[FeatureSchema] = None) -> AdaBoostModel:
        """Discrete two-class AdaBoost over depth-limited trees."""
        X = np.asarray(X, dtype=np.float64)
        y = _as_signed(y)
        if X.ndim != 2 or len(y) != X.shape[0] or len(y) == 0:
            raise DataError("training needs a 2-D feature matrix with one label per row")
        if not ((y > 0).any() and (y < 0).any()):
            raise SingleClassError("training set holds a single class")
        if schema is None:
            schema = FeatureSchema(tuple(f"x{j}" for j in range(X.shape[1])))
        elif len(schema) != X.shape[1]:
            raise SchemaMismatchError(f"schema has {len(schema)} names for {X.shape[1]} columns")

        w = np.where(y > 0, config.positive_weight, 1.0)
        w = w / w.sum()
        order = np.argsort(X, axis=0, kind="stable")
        clamp = config.epsilon_clamp
        rounds = []
        for t in range(config.n_rounds):
            tree = BoostingService.train_tree(X, y, w, config.tree, order=order)
            h = tree.predict(X)
            eps = float(w[h != y].sum())
            if eps >= 0.5:
                logger.debug("Round %d: error %.6f >= 0.5, stopping", t, eps)
                break
            clamped = min(max(eps, clamp), 1.0 - clamp)
            alpha = 0.5 * math.log((1.0 - clamped) / clamped)
            rounds.append(BoostingRound(tree, alpha, eps))
            logger.debug("Round %d: error %.6f alpha %.6f", t, eps, alpha)
            if eps == 0.0:
                break
            w = w * np.exp(-alpha * y * h)
            w = w / w.sum()

        if not rounds:
            raise BoostingError("no weak learner beats chance on the first round")
        return AdaBoostModel(tuple(rounds), schema.names, schema.fingerprint, config)

    @staticmethod
    def _check_schema(model: AdaBoostModel, x) -> np.ndarray:
        if isinstance(x, FeatureVector):
            if x.schema.fingerprint != model.schema_fingerprint:
                raise SchemaMismatchError("feature vector schema does not match the model")
            return x.values
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != len(model.schema_names):
            raise SchemaMismatchError(
                f"expected {len(model.schema_names)} features, got {x.shape[-1]}"
            )
        return x

    @staticmethod
    def score(model: AdaBoostModel, x) -> float:
        """Normalized margin mapped onto [0, 1]."""
        values = BoostingService._check_schema(model, x)
        return float((model.margins(values[None, :])[0] + 1.0) / 2.0)

    @staticmethod
    def score_matrix(model: AdaBoostModel, X) -> np.ndarray:
        X = BoostingService._check_schema(model, np.atleast_2d(X))
        return (model.margins(X) + 1.0) / 2.0

    @staticmethod
    def classify(model: AdaBoostModel, x, Tr: float) -> bool:
        if not 0.0 <= Tr <= 1.0:
            raise ValueError(f"decision threshold must lie in [0, 1], got {Tr}")
        return BoostingService.score(model, x) > Tr

    @staticmethod
    def training_error(model: AdaBoostModel, X, y) -> float:
        y = _as_signed(y)
        margins = model.margins(np.asarray(X, dtype=np.float64))
        # A zero margin counts as a mistake.
        return float(np.mean(np.where(margins > 0, 1, -1) != y))

    # -- persistence -------------------------------------------------------------

    @staticmethod
    def to_document(model: AdaBoostModel, extra: Optional[dict] = None) -> str:
        document = {
            "format": MODEL_FORMAT,
            "schema": {"fingerprint": model.schema_fingerprint, "names": list(model.schema_names)},
            "train_config": model.train_config.to_dict(),
            "rounds": [
                {"alpha": r.alpha, "error": r.error, "tree": r.tree.to_dict()}
                for r in model.rounds
            ],
        }
        if extra:
            document.update(extra)
        return json.dumps(document, indent=1, sort_keys=True) + "\n"

    @staticmethod
    def from_document(text: str) -> AdaBoostModel:
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"model document is not valid JSON: {e}") from e
        if document.get("format") != MODEL_FORMAT:
            raise DataError(f"unsupported model format {document.get('format')!r}")
        schema = FeatureSchema(tuple(document["schema"]["names"]))
        if schema.fingerprint != document["schema"]["fingerprint"]:
            raise SchemaMismatchError("model schema fingerprint does not match its names")
        rounds = tuple(
            BoostingRound(DecisionTree.from_dict(r["tree"]), float(r["alpha"]), float(r["error"]))
            for r in document["rounds"]
        )
        return AdaBoostModel(rounds, schema.names, schema.fingerprint,
                             TrainConfig.from_dict(document["train_config"]))

    @staticmethod
    def save_model(model: AdaBoostModel, path, extra: Optional[dict] = None):
        return atomic_write_text(path, BoostingService.to_document(model, extra))

    @staticmethod
    def load_model(path) -> AdaBoostModel:
        with open(path, encoding="utf-8") as fh:
            return BoostingService.from_document(fh.read())
