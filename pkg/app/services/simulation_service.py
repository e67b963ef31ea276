"""Synthetic cohort generator.

Random streams use numpy's PCG64 bit generator seeded through SeedSequence,
so a dataset is reproducible from its SimConfig alone:

    cohort stream              SeedSequence([seed, 0])          sensor bases and phases
    appliance/sensor stream    SeedSequence([seed, 1, i, k])    bias, then per-sample noise
    fault stream               SeedSequence([seed, 2, f])       replacement noise of script f

Each (appliance, sensor) stream is independent of the others, so generation
may be split per appliance without changing a single value.
"""
import logging
from collections import OrderedDict
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from app.errors import DataError, ScriptOutsideExtentError
from app.models.simulation import (
    HVAC_ALARMS, AnomalyMode, FaultScript, SimConfig,
)
from app.models.telemetry import (
    MINUTES_PER_DAY, AlarmEvent, ApplianceTelemetry, CohortDataset, SensorSeries,
)
from app.models.windows import WindowSpec
from app.utils.artifacts import atomic_write_text

logger = logging.getLogger(__name__)

DAYS_PER_YEAR = 365.0

S1_FAULT_DAYS = (40, 95, 150, 205, 260, 315)
# Day of its own year on which every S2 fault falls.
S2_SEASON_DAY = 150.0


def _rng(*key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


class SimulationService:
    @staticmethod
    def generate_cohort(config: SimConfig) -> Tuple[CohortDataset, List[AlarmEvent]]:
        """Shared seasonality + per-appliance bias + noise, with scripted pre-fault anomalies."""
        appliance_ids, sensor_ids = config.appliance_ids, config.sensor_ids
        SimulationService._check_scripts(config)

        cohort = _rng(config.seed, 0)
        base = cohort.uniform(20.0, 80.0, size=config.n_sensors)
        yearly_phase = cohort.uniform(0.0, 2 * np.pi, size=config.n_sensors)
        daily_phase = cohort.uniform(0.0, 2 * np.pi, size=config.n_sensors)

        minutes = config.start + np.arange(config.n_samples, dtype=np.int64) * config.grid_interval
        days = (minutes - config.start) / MINUTES_PER_DAY
        daily = np.sin(2 * np.pi * days[None, :] + daily_phase[:, None])

        signals = np.empty((config.n_appliances, config.n_sensors, config.n_samples))
        levels = np.empty((config.n_appliances, config.n_sensors))
        for i, appliance_id in enumerate(appliance_ids):
            shift = config.seasonal_shift_days.get(appliance_id, 0.0)
            yearly = np.sin(2 * np.pi * (days[None, :] - shift) / DAYS_PER_YEAR + yearly_phase[:, None])
            for k in range(config.n_sensors):
                stream = _rng(config.seed, 1, i, k)
                bias = stream.uniform(-config.bias_spread, config.bias_spread)
                noise = stream.standard_normal(config.n_samples) * config.noise_std
                levels[i, k] = base[k] + bias
                signals[i, k] = (base[k] + config.seasonal_amplitude * yearly[k]
                                 + config.daily_amplitude * daily[k] + bias + noise)

        alarms = []
        for f, script in enumerate(config.faults):
            i = appliance_ids.index(script.appliance_id)
            SimulationService._inject(signals[i], levels[i], daily_phase, script, f,
                                      minutes, sensor_ids, config)
            alarms.append(AlarmEvent(script.appliance_id, script.alarm_id, script.fault_time))

        appliances = tuple(
            ApplianceTelemetry(appliance_id, OrderedDict(
                (sensor_id, SensorSeries(sensor_id, config.grid_interval, config.start, signals[i, k]))
                for k, sensor_id in enumerate(sensor_ids)
            ))
            for i, appliance_id in enumerate(appliance_ids)
        )
        dataset = CohortDataset(appliances, tuple(alarms), (config.start, config.end))
        logger.info("Simulated cohort: %d appliances x %d sensors x %d samples, %d faults",
                    config.n_appliances, config.n_sensors, config.n_samples, len(alarms))
        return dataset, alarms

    @staticmethod
    def _check_scripts(config: SimConfig):
        for script in config.faults:
            if script.appliance_id not in config.appliance_ids:
                raise DataError(f"fault script names unknown appliance {script.appliance_id}")
            unknown = set(script.affected_sensors) - set(config.sensor_ids)
            if unknown:
                raise DataError(f"fault script names unknown sensors {sorted(unknown)}")
            if script.onset < config.start or script.fault_time >= config.end:
                raise ScriptOutsideExtentError(
                    f"fault of {script.appliance_id}/{script.alarm_id} spans "
                    f"[{script.onset}, {script.fault_time}] outside [{config.start}, {config.end})"
                )

    @staticmethod
    def _inject(signals: np.ndarray, levels: np.ndarray, daily_phase: np.ndarray,
                script: FaultScript, f: int, minutes: np.ndarray, sensor_ids, config: SimConfig):
        """Perturb one appliance's (M, S) signals in place during [onset, fault_time]."""
        during = (minutes >= script.onset) & (minutes <= script.fault_time)
        if not during.any():
            return
        stream = _rng(config.seed, 2, f)
        scale = np.sqrt(config.seasonal_amplitude ** 2 / 2 + config.daily_amplitude ** 2 / 2
                        + config.noise_std ** 2)
        first = int(np.argmax(during))
        for sensor_id in script.affected_sensors:
            k = sensor_ids.index(sensor_id)
            if script.mode is AnomalyMode.DRIFT:
                elapsed = (minutes[during] - script.onset) / MINUTES_PER_DAY
                signals[k, during] += script.severity * elapsed
            elif script.mode is AnomalyMode.DECORRELATE:
                replacement = levels[k] + scale * stream.standard_normal(int(during.sum()))
                signals[k, during] = ((1.0 - script.severity) * signals[k, during]
                                      + script.severity * replacement)
            elif script.mode is AnomalyMode.DESYNC:
                # daily cycle moved by severity * pi; level and spread stay put
                elapsed = (minutes[during] - config.start) / MINUTES_PER_DAY
                phase = 2 * np.pi * elapsed + daily_phase[k]
                signals[k, during] += config.daily_amplitude * (
                    np.sin(phase + script.severity * np.pi) - np.sin(phase))
            elif script.mode is AnomalyMode.FLATLINE:
                signals[k, during] = signals[k, max(first - 1, 0)]

    @staticmethod
    def to_frames(dataset: CohortDataset) -> Tuple[pd.DataFrame, pd.DataFrame]:
        """Telemetry and alarm tables in the CSV layout the loader reads."""
        parts = []
        for appliance in dataset.appliances:
            for sensor_id, series in appliance.series.items():
                values = series.values.astype(str)
                values[np.isnan(series.values)] = ""
                parts.append(pd.DataFrame({
                    "timestamp": series.timestamps,
                    "appliance_id": appliance.appliance_id,
                    "sensor_id": sensor_id,
                    "value": values,
                }))
        telemetry = pd.concat(parts, ignore_index=True)
        alarms = pd.DataFrame({
            "timestamp": [a.at for a in dataset.alarms],
            "appliance_id": [a.appliance_id for a in dataset.alarms],
            "alarm_id": [a.alarm_id for a in dataset.alarms],
        })
        return telemetry, alarms

    @staticmethod
    def write_cohort(dataset: CohortDataset, telemetry_path, alarms_path, header: str = ""):
        telemetry, alarms = SimulationService.to_frames(dataset)
        atomic_write_text(telemetry_path, header + telemetry.to_csv(index=False, lineterminator="\n"))
        atomic_write_text(alarms_path, header + alarms.to_csv(index=False, lineterminator="\n"))
        logger.info("Wrote %d telemetry rows to %s and %d alarms to %s",
                    len(telemetry), telemetry_path, len(alarms), alarms_path)

    # -- scenarios ----------------------------------------------------------------------

    @staticmethod
    def scenario_faults(appliance_ids, alarm_id: str, days, sensor_ids, lead_days: float = 10,
                        severity: float = 0.8,
                        mode: AnomalyMode = AnomalyMode.DECORRELATE) -> Tuple[FaultScript, ...]:
        return tuple(
            FaultScript(appliance_id, alarm_id, int(day * MINUTES_PER_DAY),
                        int(lead_days * MINUTES_PER_DAY), tuple(sensor_ids), mode, severity)
            for appliance_id, day in zip(appliance_ids, days)
        )

    @staticmethod
    def scenario_s1(seed: int = 0, seasonal_shift_days=None) -> SimConfig:
        """8 appliances x 6 sensors, one year, 6 decorrelation faults with a 10-day lead."""
        layout = SimConfig(n_appliances=8, n_sensors=6, seed=seed)
        faults = SimulationService.scenario_faults(
            layout.appliance_ids[:6], "IntProt", S1_FAULT_DAYS, layout.sensor_ids,
        )
        return SimConfig(
            n_appliances=8, n_sensors=6, days=365, grid_interval=60,
            seasonal_amplitude=10.0, daily_amplitude=4.0, bias_spread=5.0,
            noise_std=1.0, faults=faults, seed=seed,
            seasonal_shift_days=dict(seasonal_shift_days or {}),
        )

    @staticmethod
    def scenario_s0(seed: int = 0) -> SimConfig:
        """S1's cohort without any fault."""
        s1 = SimulationService.scenario_s1(seed)
        return SimConfig(
            n_appliances=s1.n_appliances, n_sensors=s1.n_sensors, days=s1.days,
            grid_interval=s1.grid_interval, seasonal_amplitude=s1.seasonal_amplitude,
            daily_amplitude=s1.daily_amplitude, bias_spread=s1.bias_spread,
            noise_std=s1.noise_std, seed=seed,
        )

    @staticmethod
    def scenario_s2(test_appliance: Optional[str] = None, seed: int = 0,
                    shift_days: float = 90.0) -> SimConfig:
        """Seasonal contrast on S1's cohort.

        Every faulty appliance has its yearly cycle shifted so that its fault
        falls on the same day of its own year (S2_SEASON_DAY). Faults
        desynchronise the daily cycle, which leaves per-appliance statistics
        untouched, so only the seasonal level ties them to the positives.
        Biases are kept small so that level pins the season down. With
        `test_appliance` set, that appliance's cycle moves a further
        `shift_days`; without it the cohort is the unshifted reference.
        """
        s1 = SimulationService.scenario_s1(seed)
        faults = SimulationService.scenario_faults(
            s1.appliance_ids[:6], "IntProt", S1_FAULT_DAYS, s1.sensor_ids,
            mode=AnomalyMode.DESYNC,
        )
        shifts = {f.appliance_id: f.fault_time / MINUTES_PER_DAY - S2_SEASON_DAY for f in faults}
        if test_appliance is not None:
            shifts[test_appliance] = shifts.get(test_appliance, 0.0) + shift_days
        return SimConfig(
            n_appliances=s1.n_appliances, n_sensors=s1.n_sensors, days=s1.days,
            grid_interval=s1.grid_interval, seasonal_amplitude=s1.seasonal_amplitude,
            daily_amplitude=s1.daily_amplitude, bias_spread=0.25,
            noise_std=s1.noise_std, faults=faults, seed=seed, seasonal_shift_days=shifts,
        )

    @staticmethod
    def scenario_window() -> WindowSpec:
        # Ta shorter than the fault lead so positive windows overlap the anomaly.
        return WindowSpec.from_days(T=7, Ta=1, Tf=7, step=1)

    @staticmethod
    def hvac_like(seed: int = 0, days: int = 365) -> SimConfig:
        """17 x 15 cohort with two scripted faults for each of the four alarm types."""
        layout = SimConfig(seed=seed, days=days)
        fault_day = min(days - 10, 30 + days // 2)
        faults = []
        for a, alarm_id in enumerate(HVAC_ALARMS):
            for appliance_id in layout.appliance_ids[2 * a:2 * a + 2]:
                faults.append(FaultScript(
                    appliance_id, alarm_id, fault_day * MINUTES_PER_DAY, 5 * MINUTES_PER_DAY,
                    layout.sensor_ids, AnomalyMode.DECORRELATE, 0.8,
                ))
        return SimConfig(seed=seed, days=days, faults=tuple(faults))
