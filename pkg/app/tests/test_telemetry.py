import numpy as np
import pytest

from app.errors import (
    CohortSizeError, CsvFormatError, DataError, RosterMismatchError, UnimputableSeriesError,
)
from app.models.simulation import AnomalyMode, FaultScript, SimConfig
from app.models.telemetry import AlarmEvent, Exclusion, SensorSeries
from app.services.simulation_service import SimulationService
from app.services.telemetry_service import TelemetryService
from app.tests.conftest import days, make_dataset

TELEMETRY_HEADER = "timestamp,appliance_id,sensor_id,value\n"
ALARMS_HEADER = "timestamp,appliance_id,alarm_id\n"


def write_files(tmp_path, rows, alarms=()):
    telemetry = tmp_path / "telemetry.csv"
    telemetry.write_text(TELEMETRY_HEADER + "".join(f"{r}\n" for r in rows))
    alarm_file = tmp_path / "alarms.csv"
    alarm_file.write_text(ALARMS_HEADER + "".join(f"{r}\n" for r in alarms))
    return telemetry, alarm_file


def grid_rows(appliances=("A", "B"), sensors=("x", "y"), n=4, interval=60):
    return [
        f"{k * interval},{a},{s},{i + k * 0.5}"
        for i, a in enumerate(appliances) for s in sensors for k in range(n)
    ]


def test_load_cohort_shapes(tmp_path):
    telemetry, alarms = write_files(tmp_path, grid_rows(), ["120,A,IntProt"])
    dataset = TelemetryService.load_cohort(telemetry, alarms)

    assert dataset.appliance_ids == ("A", "B")
    assert dataset.roster == ("x", "y")
    assert dataset.extent == (0, 240)
    series = dataset.appliance("B").series["y"]
    assert series.grid_interval == 60
    assert series.values.tolist() == [1.0, 1.5, 2.0, 2.5]
    assert dataset.alarms == (AlarmEvent("A", "IntProt", 120),)


def test_iso_timestamps_match_integer_minutes(tmp_path):
    rows = [f"1970-01-01T0{k}:00:00Z,{a},x,{k}" for a in "AB" for k in range(3)]
    telemetry, alarms = write_files(tmp_path, rows, ["1970-01-01T01:00:00,A,AlmSP"])
    dataset = TelemetryService.load_cohort(telemetry, alarms)

    assert dataset.appliance("A").series["x"].timestamps.tolist() == [0, 60, 120]
    assert dataset.alarms[0].at == 60


def test_bad_rows_are_reported_with_line_numbers(tmp_path):
    rows = grid_rows()
    rows[2] = "120,A,x,not-a-number"
    rows[5] = "-60,A,y,1.0"
    telemetry, alarms = write_files(tmp_path, rows)

    with pytest.raises(CsvFormatError) as exc:
        TelemetryService.load_cohort(telemetry, alarms)
    assert f"{telemetry}:4: bad value" in exc.value.row_errors
    assert f"{telemetry}:7: bad timestamp" in exc.value.row_errors


def test_non_strict_load_skips_bad_rows(tmp_path):
    rows = grid_rows()
    rows[1] = "60,A,x,oops"
    telemetry, alarms = write_files(tmp_path, rows)
    dataset = TelemetryService.load_cohort(telemetry, alarms, strict=False)

    values = dataset.appliance("A").series["x"].values
    assert np.isnan(values[1])
    assert values[0] == 0.0 and values[2] == 1.0


def test_empty_value_is_missing(tmp_path):
    rows = grid_rows()
    rows[1] = "60,A,x,"
    telemetry, alarms = write_files(tmp_path, rows)
    dataset = TelemetryService.load_cohort(telemetry, alarms)
    assert dataset.appliance("A").series["x"].missing_count == 1


def test_missing_file(tmp_path):
    with pytest.raises(CsvFormatError, match="file not found"):
        TelemetryService.load_cohort(tmp_path / "nope.csv", tmp_path / "alarms.csv")


def test_wrong_header(tmp_path):
    telemetry = tmp_path / "telemetry.csv"
    telemetry.write_text("time,appliance,sensor,value\n0,A,x,1\n")
    alarms = tmp_path / "alarms.csv"
    alarms.write_text(ALARMS_HEADER)
    with pytest.raises(CsvFormatError, match="expected header"):
        TelemetryService.load_cohort(telemetry, alarms)


def test_roster_mismatch(tmp_path):
    rows = grid_rows(appliances=("A",)) + grid_rows(appliances=("B",), sensors=("x", "z"))
    telemetry, alarms = write_files(tmp_path, rows)
    with pytest.raises(RosterMismatchError):
        TelemetryService.load_cohort(telemetry, alarms)


def test_single_appliance_is_not_a_cohort(tmp_path):
    telemetry, alarms = write_files(tmp_path, grid_rows(appliances=("A",)))
    with pytest.raises(CohortSizeError):
        TelemetryService.load_cohort(telemetry, alarms)


def test_alarm_outside_extent_is_dropped(tmp_path, caplog):
    telemetry, alarms = write_files(tmp_path, grid_rows(), ["60,A,IntProt", "99999,B,IntProt"])
    with caplog.at_level("WARNING", logger="app.services.telemetry_service"):
        dataset = TelemetryService.load_cohort(telemetry, alarms)
    assert [a.at for a in dataset.alarms] == [60]
    assert "B/IntProt at 1970-03-11T10:39Z" in caplog.text


def test_resample_bin_mean():
    series = SensorSeries("x", 15, 0, [1, 2, 3, 4, 5, 6, 7, 8])
    out = TelemetryService.resample(series, 60)
    assert out.grid_interval == 60
    assert out.values.tolist() == [2.5, 6.5]


def test_resample_ignores_missing_and_marks_empty_bins():
    series = SensorSeries("x", 15, 0, [1, np.nan, 3, np.nan, np.nan, np.nan, np.nan, np.nan, 9])
    out = TelemetryService.resample(series, 60)
    assert out.values[0] == 2.0
    assert np.isnan(out.values[1])
    assert out.values[2] == 9.0


def test_resample_same_grid_is_identity():
    series = SensorSeries("x", 60, 120, [1.0, 2.0])
    assert TelemetryService.resample(series, 60) is series


def test_resample_rejects_non_positive_interval():
    with pytest.raises(ValueError):
        TelemetryService.resample(SensorSeries("x", 60, 0, [1.0]), 0)


def test_impute_median_odd_and_even():
    odd = SensorSeries("x", 60, 0, [1, np.nan, 3, 10])
    assert TelemetryService.impute_median(odd).values.tolist() == [1, 3, 3, 10]
    even = SensorSeries("x", 60, 0, [1, np.nan, 2, 4, 10])
    # even count: mean of the two central values
    assert TelemetryService.impute_median(even).values[1] == 3.0


def test_impute_median_all_missing():
    with pytest.raises(UnimputableSeriesError):
        TelemetryService.impute_median(SensorSeries("x", 60, 0, [np.nan, np.nan]))


def test_filter_alarms_with_wildcards():
    alarms = [
        AlarmEvent("A", "IntProt", 100),
        AlarmEvent("B", "IntProt", 100),
        AlarmEvent("A", "AlmSP", 200),
        AlarmEvent("A", "AlmSP", 301),
    ]
    kept = TelemetryService.filter_alarms(alarms, [
        Exclusion("*", "IntProt", 100, 100),
        Exclusion("A", "*", 150, 300),
    ])
    assert kept == [alarms[3]]


def test_load_exclusions(tmp_path):
    path = tmp_path / "exclusions.csv"
    path.write_text("appliance_id,alarm_id,from,to\n*,AlmSP,0,1440\nHVAC01,*,60,120\n")
    exclusions = TelemetryService.load_exclusions(path)
    assert exclusions == [Exclusion("*", "AlmSP", 0, 1440), Exclusion("HVAC01", "*", 60, 120)]


def test_prepare_cohort_aligns_and_imputes():
    values = np.arange(2 * 1 * 8, dtype=float).reshape(2, 1, 8)
    values[1, 0, 3] = np.nan
    dataset = make_dataset(values, interval=15, alarms=[AlarmEvent("A0", "IntProt", 30)])
    prepared = TelemetryService.prepare_cohort(
        dataset, grid_interval=30, exclusions=[Exclusion("*", "IntProt", 0, 60)],
    )
    assert prepared.extent == (0, 120)
    assert prepared.appliance("A0").series["s0"].values.tolist() == [0.5, 2.5, 4.5, 6.5]
    # bin 1 of A1 only holds 10.0
    assert prepared.appliance("A1").series["s0"].values.tolist() == [8.5, 10.0, 12.5, 14.5]
    assert prepared.alarms == ()
    assert prepared.is_aligned


def test_prepare_cohort_rejects_coarser_source():
    dataset = make_dataset(np.zeros((2, 1, 4)), interval=120)
    with pytest.raises(DataError):
        TelemetryService.prepare_cohort(dataset, grid_interval=60)


def test_jittered_timestamps_keep_their_own_bins(tmp_path):
    samples = [(0, 10), (60, 20), (121, 30), (180, 40)]
    telemetry, alarms = write_files(tmp_path, [f"{t},{a},x,{v}" for a in "AB" for t, v in samples])
    dataset = TelemetryService.load_cohort(telemetry, alarms)

    series = dataset.appliance("A").series["x"]
    assert series.grid_interval == 1
    assert series.end == 181
    prepared = TelemetryService.prepare_cohort(dataset, grid_interval=60)
    assert prepared.appliance("A").series["x"].values.tolist() == [10.0, 20.0, 30.0, 40.0]


def test_irregular_spacing_uses_the_common_divisor(tmp_path):
    samples = [(0, 1), (50, 2), (130, 3)]
    telemetry, alarms = write_files(tmp_path, [f"{t},{a},x,{v}" for a in "AB" for t, v in samples])
    dataset = TelemetryService.load_cohort(telemetry, alarms)

    assert dataset.appliance("B").series["x"].grid_interval == 10
    prepared = TelemetryService.prepare_cohort(dataset, grid_interval=60)
    # bin 1 is empty and takes the median of the other two
    assert prepared.appliance("B").series["x"].values.tolist() == [1.5, 2.25, 3.0]


def test_simulated_cohort_round_trips_through_csv(tmp_path):
    config = SimConfig(
        n_appliances=3, n_sensors=2, days=3, seed=7,
        faults=[FaultScript("HVAC02", "AlmSP", days(2), days(1), ("ComValvFred",), AnomalyMode.DRIFT, 0.5)],
    )
    dataset, alarms = SimulationService.generate_cohort(config)
    telemetry, alarm_file = tmp_path / "t.csv", tmp_path / "a.csv"
    SimulationService.write_cohort(dataset, telemetry, alarm_file, header="# seed = 7\n")

    loaded = TelemetryService.load_cohort(telemetry, alarm_file)
    assert loaded.appliance_ids == dataset.appliance_ids
    assert loaded.extent == dataset.extent
    assert loaded.alarms == tuple(alarms)
    for original, copy in zip(dataset.appliances, loaded.appliances):
        for sensor_id, series in original.series.items():
            assert copy.series[sensor_id].equals(series)
