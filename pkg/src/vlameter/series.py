"""Per-step metric series and per-run summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Identifier order is the canonical presentation order in reports.
METRIC_IDS = (
    "A_PI",
    "A_VI",
    "A_AI",
    "TB_TP",
    "TB_PCS",
    "TB_D",
    "TB_E",
    "EV",
    "TCP_PI",
    "TCP_VI",
    "TCP_AI",
    "OT",
)

UNCERTAINTY_METRICS = ("A_PI", "A_VI", "A_AI", "TB_TP", "TB_PCS", "TB_D", "TB_E", "EV")
QUALITY_METRICS = ("TCP_PI", "TCP_VI", "TCP_AI", "TI", "OT")


class SeriesUndefinedError(ValueError):
    """Raised when a trace is too short or lacks the channel a metric needs."""


@dataclass
class MetricSeries:
    """Per-step values of one metric, defined from ``valid_from`` onward."""

    metric_id: str
    valid_from: int
    data: np.ndarray  # value for step valid_from + i

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.metric_id not in METRIC_IDS:
            raise ValueError(f"unknown metric_id '{self.metric_id}'")
        if not np.all(np.isfinite(self.data)):
            raise ValueError(f"{self.metric_id}: non-finite metric values")

    def __len__(self) -> int:
        return len(self.data)

    def value_at(self, t: int) -> float:
        if t < self.valid_from or t >= self.valid_from + len(self.data):
            raise KeyError(f"{self.metric_id} is undefined at step {t}")
        return float(self.data[t - self.valid_from])

    def values(self) -> dict[int, float]:
        """Step -> value mapping (insertion-ordered by step)."""
        return {self.valid_from + i: float(v) for i, v in enumerate(self.data)}

    def mean(self) -> float:
        return float(self.data.mean())

    def to_json_dict(self) -> dict:
        return {
            "valid_from": self.valid_from,
            "values": {str(self.valid_from + i): float(v) for i, v in enumerate(self.data)},
        }


@dataclass
class RunSummary:
    """One row per run: per-metric means plus run-level outcome fields."""

    run_id: str
    task: str
    model: str = ""
    success: bool = False
    per_metric_mean: dict[str, float] = field(default_factory=dict)
    ti: float | None = None
    quality_label: str | None = None
    notes: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "task": self.task,
            "model": self.model,
            "success": self.success,
            "per_metric_mean": {k: self.per_metric_mean[k] for k in METRIC_IDS
                                if k in self.per_metric_mean},
            "ti": self.ti,
            "quality_label": self.quality_label,
            "notes": list(self.notes),
        }

    @classmethod
    def from_json_dict(cls, rec: dict) -> "RunSummary":
        return cls(
            run_id=rec["run_id"],
            task=rec["task"],
            model=rec.get("model", ""),
            success=bool(rec["success"]),
            per_metric_mean={k: float(v) for k, v in rec.get("per_metric_mean", {}).items()},
            ti=float(rec["ti"]) if rec.get("ti") is not None else None,
            quality_label=rec.get("quality_label"),
            notes=list(rec.get("notes", [])),
        )
