from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from app.errors import CoverageError, RosterMismatchError, CohortSizeError

# Minutes since the epoch. No time zones, no DST.
Timestamp = int

MINUTES_PER_DAY = 24 * 60
WILDCARD = "*"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SensorSeries:
    """One sensor's samples on a regular grid; NaN is the missing marker."""
    sensor_id: str
    grid_interval: int
    start: Timestamp
    values: np.ndarray

    def __post_init__(self):
        if self.grid_interval <= 0:
            raise ValueError(f"grid_interval must be positive, got {self.grid_interval}")
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self):
        return len(self.values)

    @property
    def end(self) -> Timestamp:
        """Exclusive end of the covered time span."""
        return self.start + len(self.values) * self.grid_interval

    @property
    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(len(self.values), dtype=np.int64) * self.grid_interval

    @property
    def missing_count(self) -> int:
        return int(np.isnan(self.values).sum())

    def equals(self, other: "SensorSeries") -> bool:
        return (
            self.sensor_id == other.sensor_id
            and self.grid_interval == other.grid_interval
            and self.start == other.start
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True, eq=False)
class ApplianceTelemetry:
    appliance_id: str
    series: Dict[str, SensorSeries]

    @property
    def roster(self) -> Tuple[str, ...]:
        return tuple(self.series)


@dataclass(frozen=True)
class AlarmEvent:
    appliance_id: str
    alarm_id: str
    at: Timestamp


@dataclass(frozen=True)
class Exclusion:
    """Declarative test-alarm filter; either id may be the `*` wildcard."""
    appliance_id: str
    alarm_id: str
    start: Timestamp
    end: Timestamp

    def matches(self, alarm: AlarmEvent) -> bool:
        if self.appliance_id != WILDCARD and self.appliance_id != alarm.appliance_id:
            return False
        if self.alarm_id != WILDCARD and self.alarm_id != alarm.alarm_id:
            return False
        return self.start <= alarm.at <= self.end


@dataclass(frozen=True, eq=False)
class CohortDataset:
    appliances: Tuple[ApplianceTelemetry, ...]
    alarms: Tuple[AlarmEvent, ...]
    extent: Tuple[Timestamp, Timestamp]

    def __post_init__(self):
        object.__setattr__(self, "appliances", tuple(self.appliances))
        object.__setattr__(self, "alarms", tuple(self.alarms))
        if len(self.appliances) < 2:
            raise CohortSizeError(
                f"a cohort needs at least 2 appliances, got {len(self.appliances)}"
            )
        roster = set(self.appliances[0].roster)
        for appliance in self.appliances[1:]:
            if set(appliance.roster) != roster:
                raise RosterMismatchError(
                    f"appliance {appliance.appliance_id} exposes sensors "
                    f"{sorted(appliance.roster)}, expected {sorted(roster)}"
                )

    @property
    def roster(self) -> Tuple[str, ...]:
        return self.appliances[0].roster

    @property
    def appliance_ids(self) -> Tuple[str, ...]:
        return tuple(a.appliance_id for a in self.appliances)

    @property
    def start(self) -> Timestamp:
        return self.extent[0]

    @property
    def end(self) -> Timestamp:
        return self.extent[1]

    def index_of(self, appliance_id: str) -> int:
        try:
            return self.appliance_ids.index(appliance_id)
        except ValueError:
            raise KeyError(f"unknown appliance {appliance_id}") from None

    def appliance(self, appliance_id: str) -> ApplianceTelemetry:
        return self.appliances[self.index_of(appliance_id)]

    def sensor_slice(self, appliance_id: str, sensor_id: str,
                     start: Timestamp, end: Timestamp) -> np.ndarray:
        """Samples with timestamps in the closed range [start, end]."""
        series = self.appliance(appliance_id).series[sensor_id]
        if start < series.start or end >= series.end:
            raise CoverageError(
                f"appliance {appliance_id} sensor {sensor_id} does not cover "
                f"[{start}, {end}] (series spans [{series.start}, {series.end}))"
            )
        first = -(-(start - series.start) // series.grid_interval)
        last = (end - series.start) // series.grid_interval
        values = series.values[first:last + 1]
        if np.isnan(values).any():
            raise CoverageError(
                f"appliance {appliance_id} sensor {sensor_id} has missing samples "
                f"in [{start}, {end}]; impute before extracting features"
            )
        return values

    def block(self, start: Timestamp, end: Timestamp,
              appliance_ids: Optional[Tuple[str, ...]] = None) -> np.ndarray:
        """Concurrent telemetry as an (appliances, sensors, samples) array."""
        ids = appliance_ids if appliance_ids is not None else self.appliance_ids
        if self.is_aligned:
            return self._aligned_block(start, end, ids)
        return np.stack([
            np.stack([self.sensor_slice(a, k, start, end) for k in self.roster])
            for a in ids
        ])

    @cached_property
    def is_aligned(self) -> bool:
        first = next(iter(self.appliances[0].series.values()))
        return all(
            s.grid_interval == first.grid_interval and s.start == first.start
            and len(s) == len(first)
            for a in self.appliances for s in a.series.values()
        )

    @cached_property
    def _cube(self) -> np.ndarray:
        cube = np.stack([
            np.stack([a.series[k].values for k in self.roster]) for a in self.appliances
        ])
        cube.flags.writeable = False
        return cube

    def _aligned_block(self, start, end, ids) -> np.ndarray:
        first = next(iter(self.appliances[0].series.values()))
        if start < first.start or end >= first.end:
            raise CoverageError(
                f"appliance {ids[0]} sensor {self.roster[0]} does not cover "
                f"[{start}, {end}] (series spans [{first.start}, {first.end}))"
            )
        lo = -(-(start - first.start) // first.grid_interval)
        hi = (end - first.start) // first.grid_interval + 1
        rows = [self.index_of(a) for a in ids]
        block = self._cube[rows, :, lo:hi]
        gaps = np.isnan(block)
        if gaps.any():
            i, k, _ = np.argwhere(gaps)[0]
            raise CoverageError(
                f"appliance {ids[i]} sensor {self.roster[k]} has missing samples "
                f"in [{start}, {end}]; impute before extracting features"
            )
        return block

    @property
    def alarm_ids(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(e.alarm_id for e in self.alarms))


def series_with(series: SensorSeries, **changes) -> SensorSeries:
    fields = {
        "sensor_id": series.sensor_id,
        "grid_interval": series.grid_interval,
        "start": series.start,
        "values": series.values,
    }
    fields.update(changes)
    return SensorSeries(**fields)
