"""Study-level report tables and the per-metric overhead benchmark.

Four table families over a set of run summaries joined with human labels:

* quality_breakdown: success counts/rates and the quality-level split
* correlation_table: rank correlation of each metric with quality labels
* discrimination_table: A12 effect sizes of quality groups versus failures
* overhead: measured per-step cost of each metric group

Every table renders as JSON (the machine contract, ``schema_version`` 1),
CSV, and aligned text. Cell values are rounded once, identically in every
format, so outputs are deterministic functions of the dataset.
"""

from __future__ import annotations

import csv
import io
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from .engine import ALL_GROUPS, EvReplayComputer, StepwiseComputer
from .model import RunTrace, Task
from .series import RunSummary
from .stats import StatsError, mann_whitney_u, spearman

SCHEMA_VERSION = 1

QUALITY_LEVELS = ("high", "medium", "low")
FALSE_NEGATIVE = "false_negative"
VALID_LABELS = QUALITY_LEVELS + (FALSE_NEGATIVE,)

# Ordinal encoding of the quality levels: positive correlation then means
# larger metric values go with worse quality.
LABEL_RANK = {"high": 1.0, "medium": 2.0, "low": 3.0}

# Presentation order: uncertainty metrics first, then trajectory quality.
REPORT_METRICS = (
    "TB_TP", "TB_PCS", "TB_D", "TB_E", "A_PI", "A_VI", "A_AI", "EV",
    "TCP_PI", "TCP_VI", "TCP_AI", "TI", "OT",
)

TASK_ORDER = tuple(t.value for t in Task)

MIN_CELL_SAMPLES = 4  # below this a cell renders "-"


class ReportError(ValueError):
    pass


@dataclass
class StudyDataset:
    """Run summaries plus the final human label per run."""

    runs: list[RunSummary]
    labels: dict[str, str] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [r.run_id for r in self.runs]
        if len(set(ids)) != len(ids):
            raise ReportError("duplicate run_ids in dataset")
        known = set(ids)
        for run_id, label in self.labels.items():
            if run_id not in known:
                raise ReportError(f"label for unknown run '{run_id}'")
            if label not in VALID_LABELS:
                raise ReportError(f"unknown label '{label}' for run '{run_id}'")

    def groups(self) -> list[tuple[str, str, list[RunSummary]]]:
        """(model, task) groups in stable order."""
        keys = sorted(
            {(r.model, r.task) for r in self.runs},
            key=lambda k: (k[0], TASK_ORDER.index(k[1])),
        )
        return [
            (model, task, [r for r in self.runs if r.model == model and r.task == task])
            for model, task in keys
        ]

    def label_of(self, run: RunSummary) -> str | None:
        return self.labels.get(run.run_id, run.quality_label)


def metric_value(run: RunSummary, metric: str) -> float | None:
    if metric == "TI":
        return run.ti
    return run.per_metric_mean.get(metric)


def _pct(count: int, base: int) -> float | None:
    return round(100.0 * count / base, 1) if base > 0 else None


def format_count_pct(count: int, pct: float | None) -> str:
    return f"{count} (-)" if pct is None else f"{count} ({pct:.1f}%)"


def quality_breakdown(dataset: StudyDataset) -> dict:
    """Per (model, task): success rate and quality-level split.

    The success column counts oracle successes that humans did not flag as
    false negatives; quality percentages are over that count, while success
    and false-negative percentages are over all scenes.
    """
    rows = []
    for model, task, runs in dataset.groups():
        scenes = len(runs)
        oracle_succ = [r for r in runs if r.success]
        fn = [r for r in oracle_succ if dataset.label_of(r) == FALSE_NEGATIVE]
        successes = len(oracle_succ) - len(fn)
        counts = {
            level: sum(1 for r in oracle_succ if dataset.label_of(r) == level)
            for level in QUALITY_LEVELS
        }
        row = {
            "model": model,
            "task": task,
            "scenes": scenes,
            "success_count": successes,
            "success_pct": _pct(successes, scenes),
            "false_negative_count": len(fn),
            "false_negative_pct": _pct(len(fn), scenes),
        }
        for level in QUALITY_LEVELS:
            row[f"{level}_count"] = counts[level]
            row[f"{level}_pct"] = _pct(counts[level], successes)
        rows.append(row)
    return {"schema_version": SCHEMA_VERSION, "table": "quality_breakdown", "rows": rows}


def correlation_table(dataset: StudyDataset) -> dict:
    """Spearman correlation of per-run metric means with quality labels.

    Only successful runs carrying a quality level enter a cell; sparse or
    degenerate cells are marked instead of computed.
    """
    rows = []
    for model, task, runs in dataset.groups():
        labeled = [
            (r, LABEL_RANK[dataset.label_of(r)])
            for r in runs
            if r.success and dataset.label_of(r) in LABEL_RANK
        ]
        for metric in REPORT_METRICS:
            pairs = [
                (metric_value(r, metric), rank)
                for r, rank in labeled
                if metric_value(r, metric) is not None
            ]
            base = {"metric": metric, "model": model, "task": task, "n": len(pairs)}
            if len(pairs) < MIN_CELL_SAMPLES:
                rows.append({**base, "rho": None, "reason": "insufficient samples"})
                continue
            values = [p[0] for p in pairs]
            ranks = [p[1] for p in pairs]
            try:
                res = spearman(values, ranks)
            except StatsError:
                rows.append({**base, "rho": None, "reason": "undefined correlation"})
                continue
            rows.append(
                {
                    **base,
                    "rho": round(res.rho, 3),
                    "p_value": res.p_value,
                    "category": res.category.value,
                    "significant": res.significant,
                }
            )
    return {"schema_version": SCHEMA_VERSION, "table": "correlation", "rows": rows}


def discrimination_table(dataset: StudyDataset) -> dict:
    """A12 effect size of each quality group against failing runs."""
    rows = []
    for model, task, runs in dataset.groups():
        failing = [r for r in runs if not r.success]
        for metric in REPORT_METRICS:
            fail_values = [
                v for r in failing if (v := metric_value(r, metric)) is not None
            ]
            for level in QUALITY_LEVELS:
                group = [
                    v
                    for r in runs
                    if r.success and dataset.label_of(r) == level
                    and (v := metric_value(r, metric)) is not None
                ]
                base = {
                    "metric": metric,
                    "model": model,
                    "task": task,
                    "quality": level,
                    "n_quality": len(group),
                    "n_fail": len(fail_values),
                }
                if len(group) < MIN_CELL_SAMPLES or len(fail_values) < MIN_CELL_SAMPLES:
                    rows.append({**base, "a12": None, "reason": "insufficient samples"})
                    continue
                res = mann_whitney_u(group, fail_values)
                rows.append(
                    {
                        **base,
                        "a12": round(res.a12, 3),
                        "p_value": res.p_value,
                        "magnitude": res.magnitude.value,
                        "direction": res.direction.value,
                        "significant": res.significant,
                    }
                )
    return {"schema_version": SCHEMA_VERSION, "table": "discrimination", "rows": rows}


# --- overhead benchmark -----------------------------------------------------

@dataclass
class OverheadSample:
    metric_group: str
    mean_seconds: float
    std_seconds: float
    n: int
    # fastest repetition: scheduler noise is additive, so this is the most
    # stable estimate of the true per-step cost
    min_seconds: float = 0.0


def _time_group(traces: list[RunTrace], group: str, window: int, backend) -> float:
    """One wall-clock pass of a metric group over all steps; seconds per step."""
    total_steps = 0
    start = time.perf_counter()
    for trace in traces:
        if group == "EV":
            computer = EvReplayComputer(trace, window=window, backend=backend)
        else:
            computer = StepwiseComputer(trace, window=window, groups=(group,), backend=backend)
        for step in trace.steps:
            computer.push(step)
        total_steps += len(trace)
    elapsed = time.perf_counter() - start
    return elapsed / total_steps


def overhead_bench(
    traces: list[RunTrace],
    repetitions: int = 5,
    window: int = 8,
    backend=None,
    groups: tuple[str, ...] = ALL_GROUPS,
) -> list[OverheadSample]:
    """Measure per-step wall-clock cost of each metric group.

    EV is measured as a replay of the per-step output processing once per
    recorded inference sample plus the spread computation; the model
    re-inference a live system would pay is out of measurement scope.
    """
    if not traces or all(len(t) == 0 for t in traces):
        raise ReportError("nothing to time: no steps in the given traces")
    if repetitions < 1:
        raise ReportError("repetitions must be >= 1")
    samples = [OverheadSample("inference_placeholder", 0.0, 0.0, 0)]
    for group in groups:
        per_rep = [_time_group(traces, group, window, backend) for _ in range(repetitions)]
        samples.append(
            OverheadSample(
                metric_group=group,
                mean_seconds=float(np.mean(per_rep)),
                std_seconds=float(np.std(per_rep)),
                n=repetitions,
                min_seconds=float(np.min(per_rep)),
            )
        )
    return samples


def machine_info(backend_name: str) -> dict:
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "numpy": np.__version__,
        "backend": backend_name,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def overhead_table(samples_by_backend: dict[str, list[OverheadSample]], machine: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "table": "overhead",
        "machine": machine,
        "notes": [
            "seconds are per processed step",
            "EV replays per-step output processing once per inference sample;"
            " model re-inference cost is out of scope and reported as the"
            " inference_placeholder row",
        ],
        "results": [
            {
                "backend": name,
                "samples": [
                    {
                        "metric_group": s.metric_group,
                        "mean_seconds": s.mean_seconds,
                        "std_seconds": s.std_seconds,
                        "min_seconds": s.min_seconds,
                        "n": s.n,
                    }
                    for s in samples
                ],
            }
            for name, samples in samples_by_backend.items()
        ],
    }


# --- rendering ---------------------------------------------------------------

def _breakdown_cells(row: dict) -> list[str]:
    return [
        row["model"],
        row["task"],
        str(row["scenes"]),
        format_count_pct(row["success_count"], row["success_pct"]),
        format_count_pct(row["high_count"], row["high_pct"]),
        format_count_pct(row["medium_count"], row["medium_pct"]),
        format_count_pct(row["low_count"], row["low_pct"]),
        format_count_pct(row["false_negative_count"], row["false_negative_pct"]),
    ]


_HEADERS = {
    "quality_breakdown": [
        "model", "task", "scenes", "success", "high", "medium", "low", "false_neg",
    ],
    "correlation": ["metric", "model", "task", "n", "rho", "p", "category", "significant"],
    "discrimination": [
        "metric", "model", "task", "quality", "n_quality", "n_fail",
        "a12", "p", "magnitude", "direction", "significant",
    ],
    "overhead": ["backend", "metric_group", "mean_seconds", "std_seconds", "n"],
}


def _cells(table_name: str, row: dict, backend: str = "") -> list[str]:
    if table_name == "quality_breakdown":
        return _breakdown_cells(row)
    if table_name == "correlation":
        if row.get("rho") is None:
            return [row["metric"], row["model"], row["task"], str(row["n"]),
                    "-", "-", "-", "-"]
        return [
            row["metric"], row["model"], row["task"], str(row["n"]),
            f"{row['rho']:.3f}", f"{row['p_value']:.4f}",
            row["category"], str(row["significant"]).lower(),
        ]
    if table_name == "discrimination":
        head = [row["metric"], row["model"], row["task"], row["quality"],
                str(row["n_quality"]), str(row["n_fail"])]
        if row.get("a12") is None:
            return head + ["-", "-", "-", "-", "-"]
        return head + [
            f"{row['a12']:.3f}", f"{row['p_value']:.4f}", row["magnitude"],
            row["direction"], str(row["significant"]).lower(),
        ]
    if table_name == "overhead":
        return [
            backend, row["metric_group"],
            f"{row['mean_seconds']:.6f}", f"{row['std_seconds']:.6f}", str(row["n"]),
        ]
    raise ReportError(f"unknown table '{table_name}'")


def _table_rows(table: dict) -> list[list[str]]:
    name = table["table"]
    if name == "overhead":
        return [
            _cells(name, s, result["backend"])
            for result in table["results"]
            for s in result["samples"]
        ]
    return [_cells(name, row) for row in table["rows"]]


def render_csv(table: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_HEADERS[table["table"]])
    writer.writerows(_table_rows(table))
    return buf.getvalue()


def render_text(table: dict) -> str:
    headers = _HEADERS[table["table"]]
    rows = [headers] + _table_rows(table)
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
