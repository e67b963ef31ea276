from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

from app.models.telemetry import MINUTES_PER_DAY, Timestamp


@dataclass(frozen=True)
class WindowSpec:
    """Telemetry (T), action (Ta) and forecasting (Tf) windows plus the sliding step, in minutes."""
    T: int = 14 * MINUTES_PER_DAY
    Ta: int = 7 * MINUTES_PER_DAY
    Tf: int = 7 * MINUTES_PER_DAY
    step: int = MINUTES_PER_DAY

    def __post_init__(self):
        for name in ("T", "Ta", "Tf", "step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"window {name} must be strictly positive, got {getattr(self, name)}")

    @classmethod
    def from_days(cls, T=14, Ta=7, Tf=7, step=1) -> "WindowSpec":
        return cls(
            T=int(round(T * MINUTES_PER_DAY)),
            Ta=int(round(Ta * MINUTES_PER_DAY)),
            Tf=int(round(Tf * MINUTES_PER_DAY)),
            step=int(round(step * MINUTES_PER_DAY)),
        )

    @property
    def horizon(self) -> int:
        return self.T + self.Ta + self.Tf


@dataclass(frozen=True)
class LabeledWindow:
    appliance_id: str
    t: Timestamp
    spec: WindowSpec
    labels: Dict[str, bool] = field(default_factory=dict, compare=False, hash=False)

    @property
    def telemetry_range(self) -> Tuple[Timestamp, Timestamp]:
        """Closed range [t - T, t]."""
        return self.t - self.spec.T, self.t

    @property
    def forecast_range(self) -> Tuple[Timestamp, Timestamp]:
        """Half-open range [t + Ta, t + Ta + Tf)."""
        begin = self.t + self.spec.Ta
        return begin, begin + self.spec.Tf

    @property
    def key(self) -> Tuple[str, Timestamp]:
        return self.appliance_id, self.t

    def label(self, alarm_id: str) -> bool:
        return self.labels[alarm_id]

    def with_labels(self, labels: Dict[str, bool]) -> "LabeledWindow":
        merged = dict(self.labels)
        merged.update(labels)
        return replace(self, labels=merged)
