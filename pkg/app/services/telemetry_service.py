import logging
import math
import os
from collections import OrderedDict
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from app.errors import CsvFormatError, DataError, UnimputableSeriesError
from app.models.telemetry import (
    AlarmEvent, ApplianceTelemetry, CohortDataset, Exclusion, SensorSeries, series_with,
)
from app.utils.timestamps import format_minutes, parse_timestamps

logger = logging.getLogger(__name__)

TELEMETRY_COLUMNS = ["timestamp", "appliance_id", "sensor_id", "value"]
ALARM_COLUMNS = ["timestamp", "appliance_id", "alarm_id"]
EXCLUSION_COLUMNS = ["appliance_id", "alarm_id", "from", "to"]


def _read_csv(path, columns: List[str]) -> pd.DataFrame:
    if not os.path.isfile(path):
        raise CsvFormatError(f"file not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, comment="#")
    if list(frame.columns) != columns:
        raise CsvFormatError(
            f"{path}: expected header {','.join(columns)}, got {','.join(frame.columns)}"
        )
    return frame


def _to_float(text: str) -> float:
    """Exact decimal parse; empty means missing, anything unparseable is None."""
    if text == "":
        return math.nan
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _timestamp_column(frame: pd.DataFrame, column: str):
    if not len(frame):
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool)
    minutes = parse_timestamps(frame[column])
    bad = (minutes.isna() | (minutes.fillna(0) < 0)).to_numpy(dtype=bool)
    return minutes.fillna(0).to_numpy(dtype=np.int64), bad


def _row_errors(path, bad: np.ndarray, reason: str) -> List[str]:
    # +2: header line plus 1-based numbering
    return [f"{path}:{i + 2}: {reason}" for i in np.flatnonzero(bad)]


class TelemetryService:
    @staticmethod
    def load_cohort(telemetry_path, alarms_path, strict: bool = True) -> CohortDataset:
        """Load telemetry and alarm CSVs into a dataset at each series' native interval.

        Unparseable rows are collected into a row-level report. With `strict`
        the report is raised as a CsvFormatError, otherwise the rows are
        logged and skipped.
        """
        frame = _read_csv(telemetry_path, TELEMETRY_COLUMNS)
        alarm_frame = _read_csv(alarms_path, ALARM_COLUMNS)

        minutes, bad_ts = _timestamp_column(frame, "timestamp")
        parsed = frame["value"].str.strip().map(_to_float)
        bad_value = parsed.isna().to_numpy() & (frame["value"].str.strip() != "").to_numpy()
        values = parsed.astype(np.float64).to_numpy() if len(frame) else np.zeros(0)
        bad_id = ((frame["appliance_id"].str.strip() == "")
                  | (frame["sensor_id"].str.strip() == "")).to_numpy(dtype=bool)
        alarm_minutes, bad_alarm = _timestamp_column(alarm_frame, "timestamp")

        errors = (
            _row_errors(telemetry_path, bad_ts, "bad timestamp")
            + _row_errors(telemetry_path, bad_value, "bad value")
            + _row_errors(telemetry_path, bad_id, "empty identifier")
            + _row_errors(alarms_path, bad_alarm, "bad timestamp")
        )
        if errors:
            if strict:
                raise CsvFormatError(
                    f"{len(errors)} unparseable rows (first: {errors[0]})", row_errors=errors
                )
            for message in errors:
                logger.warning("Skipping row %s", message)

        keep = ~(bad_ts | bad_value | bad_id)
        rows = pd.DataFrame({
            "t": minutes[keep],
            "appliance_id": frame["appliance_id"].str.strip().to_numpy()[keep],
            "sensor_id": frame["sensor_id"].str.strip().to_numpy()[keep],
            "value": np.where(bad_value, np.nan, values)[keep],
        })

        appliances = []
        for appliance_id, own in rows.groupby("appliance_id", sort=False):
            series = OrderedDict(
                (sensor_id, TelemetryService._build_series(
                    sensor_id, samples["t"].to_numpy(), samples["value"].to_numpy()))
                for sensor_id, samples in own.groupby("sensor_id", sort=False)
            )
            appliances.append(ApplianceTelemetry(appliance_id, series))

        # Canonical roster order comes from the first appliance.
        if appliances:
            roster = appliances[0].roster
            appliances = [TelemetryService._reorder(a, roster) for a in appliances]

        if len(rows):
            extent = (int(rows["t"].min()),
                      max(s.end for a in appliances for s in a.series.values()))
        else:
            extent = (0, 0)

        alarms = []
        for i in np.flatnonzero(~bad_alarm):
            event = AlarmEvent(
                appliance_id=alarm_frame["appliance_id"].iat[i].strip(),
                alarm_id=alarm_frame["alarm_id"].iat[i].strip(),
                at=int(alarm_minutes[i]),
            )
            if not extent[0] <= event.at < extent[1]:
                logger.warning("Dropping alarm %s/%s at %s outside the dataset extent",
                               event.appliance_id, event.alarm_id, format_minutes(event.at))
                continue
            alarms.append(event)

        dataset = CohortDataset(tuple(appliances), tuple(alarms), extent)
        logger.info("Loaded cohort: %d appliances x %d sensors, %d alarms",
                    len(dataset.appliances), len(dataset.roster), len(dataset.alarms))
        return dataset

    @staticmethod
    def _reorder(appliance: ApplianceTelemetry, roster) -> ApplianceTelemetry:
        if set(appliance.roster) != set(roster):
            # Left as is; the dataset constructor reports the mismatch.
            return appliance
        return ApplianceTelemetry(
            appliance.appliance_id, OrderedDict((k, appliance.series[k]) for k in roster)
        )

    @staticmethod
    def _build_series(sensor_id, timestamps: np.ndarray, values: np.ndarray) -> SensorSeries:
        """Place samples on the series' native grid.

        The grid spacing is the greatest common divisor of the sample offsets,
        so every sample keeps its own slot even when the spacing is jittered.
        """
        order = np.argsort(timestamps, kind="stable")
        timestamps, values = timestamps[order], values[order]
        start = int(timestamps[0])
        offsets = (timestamps - start).astype(np.int64)
        positive = offsets[offsets > 0]
        interval = int(np.gcd.reduce(positive)) if len(positive) else 1
        slots = offsets // interval
        grid = np.full(int(slots[-1]) + 1, np.nan)
        observed = ~np.isnan(values)
        # Repeated timestamps are averaged.
        sums = np.bincount(slots[observed], weights=values[observed], minlength=len(grid))
        counts = np.bincount(slots[observed], minlength=len(grid))
        filled = counts > 0
        grid[filled] = sums[filled] / counts[filled]
        return SensorSeries(sensor_id, interval, start, grid)

    @staticmethod
    def resample(series: SensorSeries, target_interval: int,
                 origin: Optional[int] = None, n_bins: Optional[int] = None) -> SensorSeries:
        """Bin-mean resampling onto a coarser grid.

        Bin b covers [origin + b*target, origin + (b+1)*target). Bins without
        any non-missing source sample become missing.
        """
        if target_interval <= 0:
            raise ValueError(f"target_interval must be positive, got {target_interval}")
        origin = series.start if origin is None else origin
        if n_bins is None:
            n_bins = max(0, -(-(series.end - origin) // target_interval))
        if (target_interval == series.grid_interval and origin == series.start
                and n_bins == len(series)):
            return series

        timestamps = series.timestamps
        observed = ~np.isnan(series.values)
        bins = (timestamps - origin) // target_interval
        inside = observed & (bins >= 0) & (bins < n_bins)
        sums = np.bincount(bins[inside], weights=series.values[inside], minlength=n_bins)[:n_bins]
        counts = np.bincount(bins[inside], minlength=n_bins)[:n_bins]
        values = np.full(n_bins, np.nan)
        filled = counts > 0
        values[filled] = sums[filled] / counts[filled]
        return series_with(series, grid_interval=target_interval, start=origin, values=values)

    @staticmethod
    def impute_median(series: SensorSeries) -> SensorSeries:
        """Fill missing samples with the median of the observed ones."""
        missing = np.isnan(series.values)
        if not missing.any():
            return series
        if missing.all():
            raise UnimputableSeriesError(
                f"sensor {series.sensor_id} has no observed samples to take a median from"
            )
        values = series.values.copy()
        values[missing] = np.median(values[~missing])
        return series_with(series, values=values)

    @staticmethod
    def filter_alarms(alarms: Sequence[AlarmEvent],
                      exclusions: Iterable[Exclusion]) -> List[AlarmEvent]:
        """Drop alarms matching any exclusion, keeping order."""
        exclusions = list(exclusions)
        kept = [a for a in alarms if not any(x.matches(a) for x in exclusions)]
        if len(kept) != len(alarms):
            logger.info("Excluded %d technician-test alarms", len(alarms) - len(kept))
        return kept

    @staticmethod
    def load_exclusions(path) -> List[Exclusion]:
        frame = _read_csv(path, EXCLUSION_COLUMNS)
        begin, bad_begin = _timestamp_column(frame, "from")
        finish, bad_finish = _timestamp_column(frame, "to")
        bad = bad_begin | bad_finish
        if bad.any():
            raise CsvFormatError(f"{path}: bad exclusion time range",
                                 row_errors=_row_errors(path, bad, "bad time range"))
        return [
            Exclusion(frame["appliance_id"].iat[i].strip(), frame["alarm_id"].iat[i].strip(),
                      int(begin[i]), int(finish[i]))
            for i in range(len(frame))
        ]

    @staticmethod
    def prepare_cohort(dataset: CohortDataset, grid_interval: int = 60,
                       exclusions: Iterable[Exclusion] = ()) -> CohortDataset:
        """Resample every series onto one grid anchored at the dataset start, then impute."""
        if grid_interval <= 0:
            raise ValueError(f"grid_interval must be positive, got {grid_interval}")
        start = dataset.start
        n_bins = -(-(dataset.end - start) // grid_interval)
        appliances = []
        for appliance in dataset.appliances:
            series = OrderedDict()
            for sensor_id in dataset.roster:
                source = appliance.series[sensor_id]
                if source.grid_interval > grid_interval:
                    raise DataError(
                        f"sensor {sensor_id} of {appliance.appliance_id} is sampled every "
                        f"{source.grid_interval} min, coarser than the {grid_interval} min grid"
                    )
                aligned = TelemetryService.resample(source, grid_interval, origin=start, n_bins=n_bins)
                try:
                    series[sensor_id] = TelemetryService.impute_median(aligned)
                except UnimputableSeriesError as e:
                    raise UnimputableSeriesError(f"appliance {appliance.appliance_id}: {e}") from e
            appliances.append(ApplianceTelemetry(appliance.appliance_id, series))

        alarms = TelemetryService.filter_alarms(dataset.alarms, exclusions)
        extent = (start, start + n_bins * grid_interval)
        prepared = CohortDataset(tuple(appliances), tuple(alarms), extent)
        logger.info("Prepared cohort on a %d-minute grid: %d samples per series", grid_interval, n_bins)
        return prepared
