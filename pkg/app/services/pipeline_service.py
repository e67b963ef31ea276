import logging
import os
from typing import List

from app.config import RunConfig
from app.errors import EmptyFoldPlanError
from app.models.evaluation import ExperimentResult
from app.models.features import FeatureMatrix, FeatureSet
from app.models.telemetry import CohortDataset
from app.services.boosting_service import BoostingService
from app.services.evaluation_service import EvaluationService
from app.services.feature_service import FeatureService
from app.services.report_service import ReportService
from app.services.telemetry_service import TelemetryService
from app.services.window_service import WindowService
from app.utils.artifacts import comment_header, content_hash

logger = logging.getLogger(__name__)

FEATURES_FILE = "features.csv"


class PipelineService:
    """Steps shared by the CLI subcommands, driven by one RunConfig."""

    @staticmethod
    def header(run: RunConfig) -> str:
        return comment_header(run.to_lines(), content_hash(run.paths.inputs))

    @staticmethod
    def load_dataset(run: RunConfig) -> CohortDataset:
        raw = TelemetryService.load_cohort(run.paths.telemetry, run.paths.alarms)
        exclusions = []
        if run.paths.exclusions:
            exclusions = TelemetryService.load_exclusions(run.paths.exclusions)
        return TelemetryService.prepare_cohort(raw, run.grid_interval, exclusions)

    @staticmethod
    def build_matrix(run: RunConfig, dataset: CohortDataset) -> FeatureMatrix:
        windows = WindowService.enumerate_windows(dataset, run.window)
        windows = WindowService.label_windows(windows, dataset.alarms, run.alarm_ids)
        return FeatureService.build_matrix(windows, dataset, FeatureSet.COMB)

    @staticmethod
    def feature_matrix(run: RunConfig) -> FeatureMatrix:
        """The featurize output when it was produced from this exact run, else a fresh build."""
        path = run.paths.output(FEATURES_FILE)
        if path.is_file() and PipelineService._has_header(path, PipelineService.header(run)):
            logger.info("Reusing feature matrix %s", path)
            return ReportService.read_matrix(path, run.window)
        return PipelineService.build_matrix(run, PipelineService.load_dataset(run))

    @staticmethod
    def _has_header(path, header: str) -> bool:
        with open(path, encoding="utf-8") as fh:
            return fh.read(len(header)) == header

    @staticmethod
    def featurize(run: RunConfig) -> List[str]:
        dataset = PipelineService.load_dataset(run)
        matrix = PipelineService.build_matrix(run, dataset)
        header = PipelineService.header(run)
        out = run.paths.output_dir
        written = [str(run.paths.output(FEATURES_FILE))]
        ReportService.write_matrix(matrix, run.alarm_ids, written[0], header)
        for alarm_id in run.alarm_ids:
            path = os.path.join(out, f"windows_{alarm_id}.csv")
            ReportService.write_csv(WindowService.manifest(matrix.windows, alarm_id), path, header)
            written.append(path)
        return written

    @staticmethod
    def evaluate(run: RunConfig) -> List[ExperimentResult]:
        """Every configured (alarm, feature set) pair; alarms without a usable fold plan are skipped."""
        matrix = PipelineService.feature_matrix(run)
        results, skipped = [], []
        for alarm_id in run.alarm_ids:
            try:
                EvaluationService.make_folds(matrix.windows, alarm_id)
            except EmptyFoldPlanError as e:
                logger.warning("Skipping %s: %s", alarm_id, e)
                skipped.append(str(e))
                continue
            results.extend(
                EvaluationService.run_experiment(
                    None, run.window, feature_set, run.train, alarm_id,
                    cost=run.cost, grid_size=run.roc_grid_size, matrix=matrix,
                )
                for feature_set in run.feature_sets
            )
        if not results:
            raise EmptyFoldPlanError("; ".join(skipped))
        return results

    @staticmethod
    def train(run: RunConfig) -> List[str]:
        """One model per (alarm, feature set), trained on every window of the cohort."""
        matrix = PipelineService.feature_matrix(run)
        extra = {
            "run_config": run.to_lines(),
            "input_sha256": content_hash(run.paths.inputs),
        }
        written = []
        for alarm_id in run.alarm_ids:
            y = matrix.labels(alarm_id)
            for feature_set in run.feature_sets:
                subset = matrix.select(feature_set)
                model = BoostingService.train_adaboost(subset.X, y, run.train, subset.schema)
                path = run.paths.output(f"model_{alarm_id}_{feature_set.value}.json")
                BoostingService.save_model(model, path, {
                    **extra, "alarm_id": alarm_id, "feature_set": feature_set.label,
                })
                logger.info("Trained %s / %s: %d rounds -> %s",
                            alarm_id, feature_set.label, len(model.rounds), path)
                written.append(str(path))
        return written
