import logging
import warnings
from typing import Iterable, List, Sequence

import pandas as pd

from app.models.telemetry import AlarmEvent, CohortDataset
from app.models.windows import LabeledWindow, WindowSpec

logger = logging.getLogger(__name__)


class ExtentTooShortWarning(UserWarning):
    """The dataset cannot host a single telemetry + action + forecasting span."""


class WindowService:
    @staticmethod
    def prediction_instants(dataset: CohortDataset, spec: WindowSpec) -> List[int]:
        first = dataset.start + spec.T
        last = dataset.end - (spec.Ta + spec.Tf)
        if last < first:
            return []
        return list(range(first, last + 1, spec.step))

    @staticmethod
    def enumerate_windows(dataset: CohortDataset, spec: WindowSpec) -> List[LabeledWindow]:
        """All (appliance, t) windows, ordered by appliance then t; labels empty."""
        instants = WindowService.prediction_instants(dataset, spec)
        if not instants:
            message = (f"dataset extent of {dataset.end - dataset.start} min is shorter than "
                       f"T + Ta + Tf = {spec.horizon} min; no windows")
            logger.warning(message)
            warnings.warn(message, ExtentTooShortWarning, stacklevel=2)
            return []
        windows = [
            LabeledWindow(appliance_id, t, spec)
            for appliance_id in dataset.appliance_ids
            for t in instants
        ]
        logger.info("Enumerated %d windows (%d instants x %d appliances)",
                    len(windows), len(instants), len(dataset.appliance_ids))
        return windows

    @staticmethod
    def label_window(window: LabeledWindow, alarms: Iterable[AlarmEvent], alarm_id: str) -> bool:
        begin, end = window.forecast_range
        return any(
            a.appliance_id == window.appliance_id and a.alarm_id == alarm_id and begin <= a.at < end
            for a in alarms
        )

    @staticmethod
    def label_windows(windows: Sequence[LabeledWindow], alarms: Iterable[AlarmEvent],
                      alarm_ids: Sequence[str]) -> List[LabeledWindow]:
        """Attach one boolean per requested alarm to every window."""
        by_key = {}
        for a in alarms:
            by_key.setdefault((a.appliance_id, a.alarm_id), []).append(a)
        labeled = []
        for w in windows:
            labels = {
                alarm_id: WindowService.label_window(w, by_key.get((w.appliance_id, alarm_id), ()), alarm_id)
                for alarm_id in alarm_ids
            }
            labeled.append(w.with_labels(labels))
        return labeled

    @staticmethod
    def manifest(windows: Sequence[LabeledWindow], alarm_id: str) -> pd.DataFrame:
        """Debug manifest with columns appliance_id, t, label."""
        return pd.DataFrame({
            "appliance_id": [w.appliance_id for w in windows],
            "t": [w.t for w in windows],
            "label": [int(w.label(alarm_id)) for w in windows],
        })
