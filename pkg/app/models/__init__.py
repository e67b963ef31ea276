from app.models.telemetry import (
    Timestamp, MINUTES_PER_DAY, SensorSeries, ApplianceTelemetry, AlarmEvent,
    Exclusion, CohortDataset,
)
from app.models.windows import WindowSpec, LabeledWindow
from app.models.features import (
    Measure, DissimilarityConfig, FeatureSet, FeatureSchema, FeatureVector, FeatureMatrix,
)
from app.models.ensemble import TreeParams, TrainConfig, DecisionTree, BoostingRound, AdaBoostModel
from app.models.evaluation import (
    FoldPlan, RocCurve, CostModel, ThresholdChoice, FoldResult, ExperimentResult,
)
from app.models.simulation import AnomalyMode, FaultScript, SimConfig
