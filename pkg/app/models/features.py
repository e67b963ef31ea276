from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from app.errors import SchemaMismatchError
from app.models.windows import LabeledWindow

COHORT = "cohort"
BASELINE = "baseline"


class Measure(str, Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"
    BOTH = "both"

    @property
    def components(self) -> Tuple["Measure", ...]:
        if self is Measure.BOTH:
            return (Measure.PEARSON, Measure.SPEARMAN)
        return (self,)


@dataclass(frozen=True)
class DissimilarityConfig:
    measure: Measure = Measure.BOTH
    # A constant slice has no defined correlation; it maps to the midpoint.
    zero_variance_value: float = 1.0


class FeatureSet(str, Enum):
    """The five feature sets compared in the evaluation table."""
    BASELINE = "baseline"
    COHORT_PEARSON = "cohort_pearson"
    COHORT_SPEARMAN = "cohort_spearman"
    COHORT_PS = "cohort_ps"
    COMB = "comb"

    @property
    def label(self) -> str:
        return {
            FeatureSet.BASELINE: "Baseline",
            FeatureSet.COHORT_PEARSON: "Cohort_Pearson",
            FeatureSet.COHORT_SPEARMAN: "Cohort_Spearman",
            FeatureSet.COHORT_PS: "Cohort_P&S",
            FeatureSet.COMB: "Comb",
        }[self]

    @property
    def prefixes(self) -> Tuple[str, ...]:
        """Schema-name prefixes of the feature blocks, in concatenation order."""
        pearson = f"{COHORT}.{Measure.PEARSON.value}."
        spearman = f"{COHORT}.{Measure.SPEARMAN.value}."
        return {
            FeatureSet.BASELINE: (f"{BASELINE}.",),
            FeatureSet.COHORT_PEARSON: (pearson,),
            FeatureSet.COHORT_SPEARMAN: (spearman,),
            FeatureSet.COHORT_PS: (pearson, spearman),
            FeatureSet.COMB: (f"{BASELINE}.", pearson, spearman),
        }[self]

    @classmethod
    def parse(cls, text: str) -> "FeatureSet":
        key = text.strip().lower().replace("&", "").replace("-", "_")
        aliases = {"cohort_ps": cls.COHORT_PS, "cohort_p_s": cls.COHORT_PS}
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class FeatureSchema:
    names: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            seen, dupes = set(), []
            for name in self.names:
                if name in seen:
                    dupes.append(name)
                seen.add(name)
            raise SchemaMismatchError(f"duplicate feature names: {dupes[:5]}")

    def __len__(self):
        return len(self.names)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256("\n".join(self.names).encode("utf-8")).hexdigest()

    def select(self, prefixes: Sequence[str]) -> np.ndarray:
        """Column indices of the names starting with each prefix, block by block."""
        columns = []
        for prefix in prefixes:
            columns.extend(i for i, name in enumerate(self.names) if name.startswith(prefix))
        return np.array(columns, dtype=np.intp)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    schema: FeatureSchema
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (len(self.schema),):
            raise SchemaMismatchError(
                f"feature vector has {values.shape} values for a schema of {len(self.schema)}"
            )
        if not np.isfinite(values).all():
            raise SchemaMismatchError("feature vector contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def as_dict(self):
        return dict(zip(self.schema.names, self.values.tolist()))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """One row per window, columns per schema."""
    schema: FeatureSchema
    windows: Tuple[LabeledWindow, ...]
    X: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        if self.X.shape != (len(self.windows), len(self.schema)):
            raise SchemaMismatchError(
                f"matrix shape {self.X.shape} does not match "
                f"{len(self.windows)} windows x {len(self.schema)} features"
            )

    def __len__(self):
        return len(self.windows)

    def labels(self, alarm_id: str) -> np.ndarray:
        return np.array([w.label(alarm_id) for w in self.windows], dtype=bool)

    @property
    def appliance_ids(self) -> np.ndarray:
        return np.array([w.appliance_id for w in self.windows], dtype=object)

    def select(self, feature_set: FeatureSet) -> "FeatureMatrix":
        columns = self.schema.select(feature_set.prefixes)
        if len(columns) == 0:
            raise SchemaMismatchError(
                f"feature matrix holds no columns for {feature_set.label}"
            )
        names = tuple(self.schema.names[i] for i in columns)
        return FeatureMatrix(FeatureSchema(names), self.windows, self.X[:, columns])
