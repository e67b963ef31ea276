import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from dotenv import load_dotenv

from app.errors import ConfigError
from app.models.ensemble import TrainConfig, TreeParams
from app.models.evaluation import CostModel
from app.models.features import FeatureSet
from app.models.simulation import HVAC_ALARMS, AnomalyMode, FaultScript, SimConfig
from app.models.telemetry import MINUTES_PER_DAY
from app.models.windows import WindowSpec

load_dotenv()


class Config:
    # Default run-config file for every subcommand
    COHORT_CONFIG = os.getenv("COHORT_CONFIG")

    # Path overrides; take precedence over the [paths] section
    COHORT_TELEMETRY_PATH = os.getenv("COHORT_TELEMETRY_PATH")
    COHORT_ALARMS_PATH = os.getenv("COHORT_ALARMS_PATH")
    COHORT_EXCLUSIONS_PATH = os.getenv("COHORT_EXCLUSIONS_PATH")
    COHORT_OUTPUT_DIR = os.getenv("COHORT_OUTPUT_DIR")

    COHORT_LOG_LEVEL = os.getenv("COHORT_LOG_LEVEL", "INFO")


PATH_OVERRIDES = {
    "telemetry": "COHORT_TELEMETRY_PATH",
    "alarms": "COHORT_ALARMS_PATH",
    "exclusions": "COHORT_EXCLUSIONS_PATH",
    "output_dir": "COHORT_OUTPUT_DIR",
}

FAULT_PREFIX = "fault."


def _fmt(value) -> str:
    """Canonical text for the config echo."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _days(minutes: int):
    return minutes // MINUTES_PER_DAY if minutes % MINUTES_PER_DAY == 0 else minutes / MINUTES_PER_DAY


# -- value parsers ----------------------------------------------------------------

def _int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _float(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None


def _names(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _feature_sets(text: str) -> Tuple[FeatureSet, ...]:
    sets = []
    for name in _names(text):
        try:
            sets.append(FeatureSet.parse(name))
        except ValueError:
            raise ValueError(f"unknown feature set {name!r}") from None
    return tuple(sets)


def _shifts(text: str) -> Dict[str, float]:
    """`HVAC01: 90, HVAC03: 45` -> {appliance: days}."""
    shifts = {}
    for item in _names(text):
        appliance_id, sep, days = item.partition(":")
        if not sep:
            raise ValueError(f"expected appliance:days, got {item!r}")
        shifts[appliance_id.strip()] = _float(days)
    return shifts


SCHEMA = {
    "run": {
        "alarm_ids": _names,
        "feature_sets": _feature_sets,
        "grid_interval": _int,
        "roc_grid_size": _int,
    },
    "window": {
        "telemetry_days": _float,
        "action_days": _float,
        "forecast_days": _float,
        "step_days": _float,
    },
    "train": {
        "n_rounds": _int,
        "max_depth": _int,
        "min_samples_leaf": _int,
        "epsilon_clamp": _float,
        "seed": _int,
        "positive_weight": _float,
    },
    "cost": {"c_um": _float, "c_uoc": _float},
    "paths": {"telemetry": str, "alarms": str, "exclusions": str, "output_dir": str},
    "simulate": {
        "n_appliances": _int,
        "n_sensors": _int,
        "days": _int,
        "grid_interval": _int,
        "seasonal_amplitude": _float,
        "daily_amplitude": _float,
        "bias_spread": _float,
        "noise_std": _float,
        "seed": _int,
        "seasonal_shift_days": _shifts,
    },
}

FAULT_SCHEMA = {
    "appliance_id": str,
    "alarm_id": str,
    "day": _float,
    "lead_days": _float,
    "sensors": _names,
    "mode": str,
    "severity": _float,
}


@dataclass(frozen=True)
class RunPaths:
    telemetry: str = "telemetry.csv"
    alarms: str = "alarms.csv"
    exclusions: Optional[str] = None
    output_dir: str = "out"

    @property
    def inputs(self) -> Tuple[Optional[str], ...]:
        return self.telemetry, self.alarms, self.exclusions

    def output(self, name: str) -> Path:
        return Path(self.output_dir) / name


@dataclass(frozen=True)
class RunConfig:
    """Everything one batch run needs, parsed from a single INI file."""
    alarm_ids: Tuple[str, ...] = HVAC_ALARMS
    feature_sets: Tuple[FeatureSet, ...] = tuple(FeatureSet)
    grid_interval: int = 60
    roc_grid_size: int = 101
    window: WindowSpec = WindowSpec()
    train: TrainConfig = TrainConfig()
    cost: Optional[CostModel] = None
    paths: RunPaths = RunPaths()
    simulation: SimConfig = SimConfig()
    # fault section name -> script, in section-name order
    faults: Tuple[Tuple[str, FaultScript], ...] = field(default=())

    @classmethod
    def load(cls, path, overrides: Optional[Mapping[str, Optional[str]]] = None) -> "RunConfig":
        """Parse an INI run config; `overrides` maps COHORT_* path keys to values."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"run config not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigError(f"{path}: {e}") from e
        return cls.from_parser(parser, base_dir=path.parent, overrides=overrides, source=str(path))

    @classmethod
    def from_text(cls, text: str, base_dir=".", overrides=None) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError(str(e)) from e
        return cls.from_parser(parser, base_dir=Path(base_dir), overrides=overrides, source="<text>")

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser, base_dir: Path,
                    overrides=None, source: str = "") -> "RunConfig":
        values: Dict[str, Dict[str, object]] = {}
        fault_sections = {}
        for section in parser.sections():
            if section.startswith(FAULT_PREFIX):
                fault_sections[section[len(FAULT_PREFIX):]] = _parse_section(
                    parser, section, FAULT_SCHEMA, source)
            elif section in SCHEMA:
                values[section] = _parse_section(parser, section, SCHEMA[section], source)
            else:
                raise ConfigError(f"{source}: unknown section [{section}]")

        try:
            return cls._build(values, fault_sections, base_dir, overrides or {})
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{source}: {e}") from e

    @classmethod
    def _build(cls, values, fault_sections, base_dir: Path, overrides) -> "RunConfig":
        defaults = cls()
        run = values.get("run", {})
        window = values.get("window", {})
        train = values.get("train", {})
        cost = values.get("cost")
        sim = values.get("simulate", {})

        spec = WindowSpec.from_days(
            T=window.get("telemetry_days", 14), Ta=window.get("action_days", 7),
            Tf=window.get("forecast_days", 7), step=window.get("step_days", 1),
        )
        train_config = TrainConfig(
            n_rounds=train.get("n_rounds", defaults.train.n_rounds),
            tree=TreeParams(train.get("max_depth", defaults.train.tree.max_depth),
                            train.get("min_samples_leaf", defaults.train.tree.min_samples_leaf)),
            epsilon_clamp=train.get("epsilon_clamp", defaults.train.epsilon_clamp),
            seed=train.get("seed", defaults.train.seed),
            positive_weight=train.get("positive_weight", defaults.train.positive_weight),
        )
        cost_model = None
        if cost is not None:
            if set(cost) != {"c_um", "c_uoc"}:
                raise ConfigError("[cost] needs both c_um and c_uoc")
            cost_model = CostModel(cost["c_um"], cost["c_uoc"])

        paths = dict(values.get("paths", {}))
        for key, env_key in PATH_OVERRIDES.items():
            if overrides.get(env_key):
                paths[key] = overrides[env_key]
        run_paths = RunPaths(**{
            key: str(base_dir / value) if value and not os.path.isabs(value) else value
            for key, value in {**RunPaths().__dict__, **paths}.items()
        })

        sim_defaults = SimConfig()
        sim_kwargs = {key: sim.get(key, getattr(sim_defaults, key)) for key in (
            "n_appliances", "n_sensors", "days", "grid_interval", "seasonal_amplitude",
            "daily_amplitude", "bias_spread", "noise_std", "seed",
        )}
        sim_kwargs["seasonal_shift_days"] = sim.get("seasonal_shift_days", {})
        layout = SimConfig(**sim_kwargs)
        faults = tuple(
            (name, _fault_script(name, fault_sections[name], layout))
            for name in sorted(fault_sections)
        )
        simulation = SimConfig(**sim_kwargs, faults=tuple(script for _, script in faults))

        feature_sets = run.get("feature_sets", defaults.feature_sets)
        alarm_ids = run.get("alarm_ids", defaults.alarm_ids)
        if not feature_sets or not alarm_ids:
            raise ConfigError("[run] needs at least one alarm id and one feature set")
        grid_interval = run.get("grid_interval", defaults.grid_interval)
        if grid_interval <= 0:
            raise ConfigError(f"grid_interval must be positive, got {grid_interval}")
        roc_grid_size = run.get("roc_grid_size", defaults.roc_grid_size)
        if roc_grid_size < 2:
            raise ConfigError(f"roc_grid_size must be at least 2, got {roc_grid_size}")

        return cls(
            alarm_ids=tuple(dict.fromkeys(alarm_ids)),
            feature_sets=tuple(dict.fromkeys(feature_sets)),
            grid_interval=grid_interval,
            roc_grid_size=roc_grid_size,
            window=spec,
            train=train_config,
            cost=cost_model,
            paths=run_paths,
            simulation=simulation,
            faults=faults,
        )

    def to_lines(self) -> List[str]:
        """Canonical INI rendering of the effective configuration."""
        sections = [
            ("run", {
                "alarm_ids": self.alarm_ids,
                "feature_sets": tuple(s.label for s in self.feature_sets),
                "grid_interval": self.grid_interval,
                "roc_grid_size": self.roc_grid_size,
            }),
            ("window", {
                "telemetry_days": _days(self.window.T),
                "action_days": _days(self.window.Ta),
                "forecast_days": _days(self.window.Tf),
                "step_days": _days(self.window.step),
            }),
            ("train", {
                "n_rounds": self.train.n_rounds,
                "max_depth": self.train.tree.max_depth,
                "min_samples_leaf": self.train.tree.min_samples_leaf,
                "epsilon_clamp": self.train.epsilon_clamp,
                "seed": self.train.seed,
                "positive_weight": self.train.positive_weight,
            }),
        ]
        if self.cost is not None:
            sections.append(("cost", {"c_um": self.cost.c_um, "c_uoc": self.cost.c_uoc}))
        sections.append(("paths", {k: v for k, v in self.paths.__dict__.items() if v is not None}))
        sim = self.simulation
        sections.append(("simulate", {
            "n_appliances": sim.n_appliances,
            "n_sensors": sim.n_sensors,
            "days": sim.days,
            "grid_interval": sim.grid_interval,
            "seasonal_amplitude": sim.seasonal_amplitude,
            "daily_amplitude": sim.daily_amplitude,
            "bias_spread": sim.bias_spread,
            "noise_std": sim.noise_std,
            "seed": sim.seed,
            "seasonal_shift_days": tuple(
                f"{a}: {_fmt(float(d))}" for a, d in sorted(sim.seasonal_shift_days.items())),
        }))
        for name, script in self.faults:
            sections.append((FAULT_PREFIX + name, {
                "appliance_id": script.appliance_id,
                "alarm_id": script.alarm_id,
                "day": _days(script.fault_time - sim.start),
                "lead_days": _days(script.lead),
                "sensors": script.affected_sensors,
                "mode": script.mode.value,
                "severity": float(script.severity),
            }))

        lines = []
        for section, entries in sections:
            if lines:
                lines.append("")
            lines.append(f"[{section}]")
            lines.extend(f"{key} = {_fmt(entries[key])}" for key in sorted(entries))
        return lines


def _parse_section(parser, section, schema, source) -> Dict[str, object]:
    parsed = {}
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
        try:
            parsed[key] = schema[key](raw)
        except ValueError as e:
            raise ConfigError(f"{source}: [{section}] {key}: {e}") from e
    return parsed


def _fault_script(name: str, values: Dict[str, object], sim: SimConfig) -> FaultScript:
    missing = {"appliance_id", "alarm_id", "day", "lead_days"} - set(values)
    if missing:
        raise ConfigError(f"[{FAULT_PREFIX}{name}] is missing {sorted(missing)}")
    sensors = values.get("sensors", ("*",))
    if sensors == ("*",):
        sensors = sim.sensor_ids
    try:
        mode = AnomalyMode(values.get("mode", AnomalyMode.DECORRELATE.value))
    except ValueError:
        raise ConfigError(f"[{FAULT_PREFIX}{name}] unknown mode {values['mode']!r}") from None
    return FaultScript(
        appliance_id=values["appliance_id"],
        alarm_id=values["alarm_id"],
        fault_time=sim.start + int(round(values["day"] * MINUTES_PER_DAY)),
        lead=int(round(values["lead_days"] * MINUTES_PER_DAY)),
        affected_sensors=sensors,
        mode=mode,
        severity=values.get("severity", 1.0),
    )
