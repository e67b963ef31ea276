import sys
sys.path.append('.')

from collections import OrderedDict

import numpy as np
import pytest

from app.config import PATH_OVERRIDES
from app.models.telemetry import (
    MINUTES_PER_DAY, AlarmEvent, ApplianceTelemetry, CohortDataset, SensorSeries,
)
from main import create_app


def make_dataset(values, interval=60, start=0, alarms=(), appliance_ids=None, sensor_ids=None):
    """Dataset from an (N, M, L) array on a shared grid."""
    values = np.asarray(values, dtype=np.float64)
    n, m, length = values.shape
    appliance_ids = appliance_ids or [f"A{i}" for i in range(n)]
    sensor_ids = sensor_ids or [f"s{k}" for k in range(m)]
    appliances = tuple(
        ApplianceTelemetry(a, OrderedDict(
            (s, SensorSeries(s, interval, start, values[i, k])) for k, s in enumerate(sensor_ids)
        ))
        for i, a in enumerate(appliance_ids)
    )
    return CohortDataset(appliances, tuple(alarms), (start, start + length * interval))


def days(d):
    return int(d * MINUTES_PER_DAY)


@pytest.fixture
def app():
    app = create_app({"TESTING": True, "COHORT_CONFIG": None,
                      **{key: None for key in PATH_OVERRIDES.values()}})
    yield app


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def daily_cohort(rng):
    """4 appliances x 3 sensors, 30 days hourly: a shared daily cycle plus noise."""
    hours = np.arange(30 * 24)
    cycle = np.sin(2 * np.pi * hours / 24)
    values = cycle[None, None, :] * np.array([3.0, 2.0, 1.0])[None, :, None]
    values = values + rng.normal(0, 0.3, size=(4, 3, len(hours)))
    alarms = (
        AlarmEvent("A1", "IntProt", days(20)),
        AlarmEvent("A2", "AlmSP", days(22)),
    )
    return make_dataset(values, alarms=alarms)


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="run.ini"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write
