import logging
import warnings
from collections import OrderedDict
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from app.errors import InvariantViolation
from app.models.features import (
    BASELINE, COHORT, DissimilarityConfig, FeatureMatrix, FeatureSchema, FeatureSet,
    FeatureVector, Measure,
)
from app.models.telemetry import CohortDataset
from app.models.windows import LabeledWindow

logger = logging.getLogger(__name__)

BASELINE_STATS = ("max", "min", "mean", "std", "skew", "kurt")


def _check_pair(x, y) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValueError(f"series must be 1-D and of equal length, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError(f"need at least 2 samples, got {len(x)}")
    return x, y


def _correlation_dissim(a: np.ndarray, b: np.ndarray, flat_value: float) -> np.ndarray:
    """1 - Pearson r along the last axis, broadcasting a against b.

    Constant slices (max == min) have no defined r and map to `flat_value`.
    """
    ac = a - a.mean(axis=-1, keepdims=True)
    bc = b - b.mean(axis=-1, keepdims=True)
    num = (ac * bc).sum(axis=-1)
    ss_a = (ac * ac).sum(axis=-1)
    ss_b = (bc * bc).sum(axis=-1)
    flat = (np.ptp(a, axis=-1) == 0) | (np.ptp(b, axis=-1) == 0)
    flat = np.broadcast_to(flat, num.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / np.sqrt(ss_a * ss_b)
    d = 1.0 - np.clip(r, -1.0, 1.0)
    return np.where(flat | ~np.isfinite(d), flat_value, d)


def _ranks(a: np.ndarray) -> np.ndarray:
    # Ties share the mean of their rank span.
    return stats.rankdata(a, method="average", axis=-1)


class FeatureService:
    @staticmethod
    def pearson_dissim(x, y) -> float:
        x, y = _check_pair(x, y)
        return float(_correlation_dissim(x, y, DissimilarityConfig().zero_variance_value))

    @staticmethod
    def spearman_dissim(x, y) -> float:
        x, y = _check_pair(x, y)
        return float(_correlation_dissim(_ranks(x), _ranks(y), DissimilarityConfig().zero_variance_value))

    # -- schemas --------------------------------------------------------------

    @staticmethod
    def cohort_schema(n_appliances: int, roster: Sequence[str], measure: Measure) -> FeatureSchema:
        """Peer p is the p-th other appliance in ascending dataset order."""
        return FeatureSchema(tuple(
            f"{COHORT}.{m.value}.peer{p + 1:02d}.{sensor}"
            for m in measure.components
            for p in range(n_appliances - 1)
            for sensor in roster
        ))

    @staticmethod
    def baseline_schema(roster: Sequence[str]) -> FeatureSchema:
        names = [f"{BASELINE}.{stat}.{sensor}" for sensor in roster for stat in BASELINE_STATS]
        rows, cols = np.triu_indices(len(roster), k=1)
        names += [f"{BASELINE}.cov.{roster[i]}~{roster[j]}" for i, j in zip(rows, cols)]
        return FeatureSchema(tuple(names))

    # -- block computations (all appliances at one instant) -------------------

    @staticmethod
    def _cohort_block(block: np.ndarray, config: DissimilarityConfig) -> np.ndarray:
        """Cohort rows for every appliance of an (N, M, L) concurrent block."""
        n, m, _ = block.shape
        keep = ~np.eye(n, dtype=bool)
        parts = []
        for measure in config.measure.components:
            data = block if measure is Measure.PEARSON else _ranks(block)
            d = _correlation_dissim(data[:, None], data[None, :], config.zero_variance_value)
            # d[i, j, k]; drop the self term and flatten peer-major per appliance
            parts.append(d[keep].reshape(n, (n - 1) * m))
        return np.concatenate(parts, axis=1)

    @staticmethod
    def _baseline_row(own: np.ndarray) -> np.ndarray:
        """Baseline statistics of one appliance's (M, L) telemetry slice."""
        flat = np.ptp(own, axis=1) == 0
        with warnings.catch_warnings(), np.errstate(invalid="ignore", divide="ignore"):
            warnings.simplefilter("ignore", RuntimeWarning)
            skew = stats.skew(own, axis=1, bias=True)
            kurt = stats.kurtosis(own, axis=1, fisher=True, bias=True)
        # Degenerate second moment: skewness and kurtosis are defined as 0.
        skew = np.where(flat | ~np.isfinite(skew), 0.0, skew)
        kurt = np.where(flat | ~np.isfinite(kurt), 0.0, kurt)
        per_sensor = np.column_stack([
            own.max(axis=1), own.min(axis=1), own.mean(axis=1),
            own.std(axis=1, ddof=1), skew, kurt,
        ])
        rows, cols = np.triu_indices(own.shape[0], k=1)
        cov = np.atleast_2d(np.cov(own, ddof=1))[rows, cols]
        return np.concatenate([per_sensor.ravel(), cov])

    # -- per-window operations -------------------------------------------------

    @staticmethod
    def cohort_features(window: LabeledWindow, dataset: CohortDataset,
                        config: DissimilarityConfig = DissimilarityConfig()) -> FeatureVector:
        start, end = window.telemetry_range
        block = dataset.block(start, end)
        i = dataset.index_of(window.appliance_id)
        schema = FeatureService.cohort_schema(len(dataset.appliances), dataset.roster, config.measure)
        return FeatureVector(schema, FeatureService._cohort_block(block, config)[i])

    @staticmethod
    def baseline_features(window: LabeledWindow, dataset: CohortDataset) -> FeatureVector:
        start, end = window.telemetry_range
        own = dataset.block(start, end, (window.appliance_id,))[0]
        return FeatureVector(FeatureService.baseline_schema(dataset.roster),
                             FeatureService._baseline_row(own))

    @staticmethod
    def combine(parts: Sequence[FeatureVector]) -> FeatureVector:
        """Concatenate feature vectors of one window in the given order."""
        parts = list(parts)
        if len(parts) == 1:
            return parts[0]
        names = tuple(name for p in parts for name in p.schema.names)
        return FeatureVector(FeatureSchema(names), np.concatenate([p.values for p in parts]))

    # -- whole-run matrices ------------------------------------------------------

    @staticmethod
    def build_matrix(windows: Sequence[LabeledWindow], dataset: CohortDataset,
                     feature_set: FeatureSet = FeatureSet.COMB) -> FeatureMatrix:
        """Feature rows for every window, computing each instant's cohort block once."""
        windows = list(windows)
        with_baseline = FeatureSet.BASELINE.prefixes[0] in feature_set.prefixes
        measures = [m for m in (Measure.PEARSON, Measure.SPEARMAN)
                    if f"{COHORT}.{m.value}." in feature_set.prefixes]
        measure = Measure.BOTH if len(measures) == 2 else (measures[0] if measures else None)

        schemas = []
        if with_baseline:
            schemas.append(FeatureService.baseline_schema(dataset.roster))
        if measure is not None:
            schemas.append(FeatureService.cohort_schema(len(dataset.appliances), dataset.roster, measure))
        schema = FeatureSchema(tuple(name for s in schemas for name in s.names))

        X = np.empty((len(windows), len(schema)), dtype=np.float64)
        by_instant: Dict[int, List[int]] = OrderedDict()
        for row, w in enumerate(windows):
            by_instant.setdefault(w.t, []).append(row)

        config = DissimilarityConfig(measure=measure) if measure is not None else None
        for t, rows in by_instant.items():
            start, end = windows[rows[0]].telemetry_range
            block = dataset.block(start, end)
            cohort = FeatureService._cohort_block(block, config) if config else None
            for row in rows:
                i = dataset.index_of(windows[row].appliance_id)
                pieces = []
                if with_baseline:
                    pieces.append(FeatureService._baseline_row(block[i]))
                if cohort is not None:
                    pieces.append(cohort[i])
                X[row] = np.concatenate(pieces)

        if not np.isfinite(X).all():
            raise InvariantViolation("feature extraction produced non-finite values")
        logger.info("Built %s feature matrix: %d windows x %d features",
                    feature_set.label, X.shape[0], X.shape[1])
        return FeatureMatrix(schema, tuple(windows), X)
