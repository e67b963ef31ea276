import logging
import os
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from app.errors import CsvFormatError, SchemaMismatchError
from app.models.evaluation import CostModel, ExperimentResult
from app.models.features import FeatureMatrix, FeatureSchema
from app.models.windows import LabeledWindow, WindowSpec
from app.utils.artifacts import atomic_write_text

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["alarm", "features", "mean_auc"]
FOLD_COLUMNS = ["alarm", "features", "appliance_id", "auc"]
COST_COLUMNS = ["threshold", "cost", "n_um", "n_uoc", "corrective_cost"]
LABEL_PREFIX = "label."


def _file_token(label: str) -> str:
    return label.replace("&", "").replace(" ", "_")


class ReportService:
    @staticmethod
    def write_csv(frame: pd.DataFrame, path, header: str = ""):
        atomic_write_text(path, header + frame.to_csv(index=False, lineterminator="\n"))
        logger.info("Wrote %s (%d rows)", path, len(frame))

    @staticmethod
    def read_csv(path, columns: Optional[Sequence[str]] = None, **kwargs) -> pd.DataFrame:
        if not os.path.isfile(path):
            raise CsvFormatError(f"file not found: {path}")
        frame = pd.read_csv(path, comment="#", **kwargs)
        if columns is not None and list(frame.columns[:len(columns)]) != list(columns):
            raise CsvFormatError(f"{path}: expected columns {','.join(columns)}")
        return frame

    # -- experiment reports -----------------------------------------------------

    @staticmethod
    def summary_frame(results: Sequence[ExperimentResult]) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.alarm_id, r.feature_set, r.mean_auc) for r in results], columns=SUMMARY_COLUMNS
        )

    @staticmethod
    def folds_frame(results: Sequence[ExperimentResult],
                    cost: Optional[CostModel] = None) -> pd.DataFrame:
        """Per-fold AUC; with a cost model also the chosen Tr and the never-alarm cost."""
        rows = []
        for r in results:
            for fold in r.folds:
                row = [r.alarm_id, r.feature_set, fold.appliance_id, fold.auc]
                if cost is not None:
                    choice = fold.threshold
                    # Tr = 1 never alarms: every positive window is an unscheduled fault.
                    corrective = int(fold.labels.sum()) * cost.c_uoc
                    row += [choice.threshold, choice.cost, choice.n_um, choice.n_uoc, corrective]
                rows.append(row)
        columns = FOLD_COLUMNS + (COST_COLUMNS if cost is not None else [])
        return pd.DataFrame(rows, columns=columns)

    @staticmethod
    def roc_frame(result: ExperimentResult) -> pd.DataFrame:
        return pd.DataFrame({"fpr": result.average.fpr, "tpr": result.average.tpr})

    @staticmethod
    def roc_filename(result: ExperimentResult) -> str:
        return f"roc_{result.alarm_id}_{_file_token(result.feature_set)}.csv"

    @staticmethod
    def write_experiments(results: Sequence[ExperimentResult], output_dir,
                          header: str = "", cost: Optional[CostModel] = None) -> List[str]:
        written = [os.path.join(output_dir, "summary.csv"), os.path.join(output_dir, "folds.csv")]
        ReportService.write_csv(ReportService.summary_frame(results), written[0], header)
        ReportService.write_csv(ReportService.folds_frame(results, cost), written[1], header)
        for r in results:
            path = os.path.join(output_dir, ReportService.roc_filename(r))
            ReportService.write_csv(ReportService.roc_frame(r), path, header)
            written.append(path)
        return written

    @staticmethod
    def render_table(summary: pd.DataFrame) -> str:
        """Plain-text results table: one block per alarm, best feature set starred."""
        lines = [f"{'Alarm':<12}{'Features':<18}{'Average AUC':>11}"]
        for alarm, rows in summary.groupby("alarm", sort=False):
            best = rows["mean_auc"].max()
            for k, (_, row) in enumerate(rows.iterrows()):
                name = alarm if k == 0 else ""
                mark = " *" if row["mean_auc"] == best else ""
                lines.append(f"{name:<12}{row['features']:<18}{row['mean_auc']:>11.3f}{mark}")
        return "\n".join(lines) + "\n"

    # -- feature matrices -------------------------------------------------------

    @staticmethod
    def matrix_frame(matrix: FeatureMatrix, alarm_ids: Sequence[str]) -> pd.DataFrame:
        """`appliance_id,t,label.<alarm>...,<feature names>` with exact float text."""
        columns = {
            "appliance_id": [w.appliance_id for w in matrix.windows],
            "t": [w.t for w in matrix.windows],
        }
        for alarm_id in alarm_ids:
            columns[LABEL_PREFIX + alarm_id] = matrix.labels(alarm_id).astype(int)
        frame = pd.DataFrame(columns)
        values = pd.DataFrame(matrix.X.astype(str), columns=list(matrix.schema.names))
        return pd.concat([frame, values], axis=1)

    @staticmethod
    def write_matrix(matrix: FeatureMatrix, alarm_ids: Sequence[str], path, header: str = ""):
        ReportService.write_csv(ReportService.matrix_frame(matrix, alarm_ids), path, header)

    @staticmethod
    def read_matrix(path, spec: WindowSpec) -> FeatureMatrix:
        frame = ReportService.read_csv(
            path, ["appliance_id", "t"], dtype={"appliance_id": str}, float_precision="round_trip",
        )
        label_columns = [c for c in frame.columns if c.startswith(LABEL_PREFIX)]
        names = [c for c in frame.columns[2:] if not c.startswith(LABEL_PREFIX)]
        if not names:
            raise SchemaMismatchError(f"{path}: no feature columns")
        windows = tuple(
            LabeledWindow(a, int(t), spec,
                          {c[len(LABEL_PREFIX):]: bool(v) for c, v in zip(label_columns, labels)})
            for a, t, labels in zip(frame["appliance_id"], frame["t"],
                                    frame[label_columns].to_numpy(dtype=int))
        )
        X = frame[names].to_numpy(dtype=np.float64)
        return FeatureMatrix(FeatureSchema(tuple(names)), windows, X)
