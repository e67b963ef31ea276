from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple

from app.models.telemetry import MINUTES_PER_DAY, Timestamp

# Sensor roster of the air-handling units the method was first applied to.
HVAC_SENSORS = (
    "ComValvFred", "ComValvPre", "ComValvUmid", "PortataMand", "PortataRip",
    "PresManWilso", "PresRipWilso", "SgnIVM1", "SgnIVM2", "SgnIVR1",
    "SgnIVR2", "TempMand", "TempRip", "UmidMand", "UmidRip",
)

HVAC_ALARMS = ("AlmBIVR1", "AlmBIVR2", "AlmSP", "IntProt")


def sensor_names(m: int) -> Tuple[str, ...]:
    if m <= len(HVAC_SENSORS):
        return HVAC_SENSORS[:m]
    return HVAC_SENSORS + tuple(f"Sensor{k:02d}" for k in range(len(HVAC_SENSORS), m))


def appliance_names(n: int) -> Tuple[str, ...]:
    return tuple(f"HVAC{i + 1:02d}" for i in range(n))


class AnomalyMode(str, Enum):
    DRIFT = "drift"
    DECORRELATE = "decorrelate"
    # Daily cycle phase-shifted against the cohort; per-appliance statistics unchanged.
    DESYNC = "desync"
    FLATLINE = "flatline"


@dataclass(frozen=True)
class FaultScript:
    appliance_id: str
    alarm_id: str
    fault_time: Timestamp
    lead: int
    affected_sensors: Tuple[str, ...]
    mode: AnomalyMode = AnomalyMode.DECORRELATE
    severity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "affected_sensors", tuple(self.affected_sensors))
        object.__setattr__(self, "mode", AnomalyMode(self.mode))
        if self.lead <= 0:
            raise ValueError(f"fault lead must be positive, got {self.lead}")

    @property
    def onset(self) -> Timestamp:
        return self.fault_time - self.lead


@dataclass(frozen=True)
class SimConfig:
    n_appliances: int = 17
    n_sensors: int = 15
    days: int = 365
    grid_interval: int = 60
    seasonal_amplitude: float = 10.0
    daily_amplitude: float = 4.0
    bias_spread: float = 5.0
    noise_std: float = 1.0
    faults: Tuple[FaultScript, ...] = ()
    seed: int = 0
    start: Timestamp = 0
    # Per-appliance phase shift of the yearly component, in days.
    seasonal_shift_days: Dict[str, float] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "faults", tuple(self.faults))
        if self.n_appliances < 2:
            raise ValueError(f"a cohort needs at least 2 appliances, got {self.n_appliances}")
        if self.n_sensors < 1:
            raise ValueError(f"need at least one sensor, got {self.n_sensors}")
        if self.days < 1 or self.grid_interval <= 0:
            raise ValueError("days and grid_interval must be positive")
        if (self.days * MINUTES_PER_DAY) % self.grid_interval:
            raise ValueError("grid_interval must divide a day count evenly")
        if self.noise_std < 0 or self.bias_spread < 0:
            raise ValueError("noise_std and bias_spread must be non-negative")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise TypeError(f"seed must be an integer, got {self.seed!r}")

    @property
    def appliance_ids(self) -> Tuple[str, ...]:
        return appliance_names(self.n_appliances)

    @property
    def sensor_ids(self) -> Tuple[str, ...]:
        return sensor_names(self.n_sensors)

    @property
    def n_samples(self) -> int:
        return self.days * MINUTES_PER_DAY // self.grid_interval

    @property
    def end(self) -> Timestamp:
        return self.start + self.days * MINUTES_PER_DAY
