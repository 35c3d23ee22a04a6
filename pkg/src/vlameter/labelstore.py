"""Append-only store for human quality labels.

Every submission is one JSON line in the log; replaying the log rebuilds
the complete state, including overwrites (the newest event per
(run, annotator) pair wins, older events remain as the audit trail).

Resolution rule: a run is resolved once its first two annotators agree, or
once a third, distinct annotator has labeled it (that label wins and the
third annotator is recorded as the resolver).
"""

from __future__ import annotations

import csv
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .report import VALID_LABELS
from .stats import AgreementResult, StatsError, cohen_kappa


class LabelStoreError(ValueError):
    pass


@dataclass(frozen=True)
class QualityLabel:
    run_id: str
    annotator_id: str
    label: str
    timestamp: float
    session_id: str
    seq: int = 0


@dataclass(frozen=True)
class Resolution:
    run_id: str
    label: str
    resolver_id: str | None  # None when the first two annotators agreed


class LabelStore:
    """Event-sourced label log with serialized writes."""

    def __init__(self, log_path: str | Path):
        self._path = Path(log_path)
        self._lock = threading.Lock()
        self._events: list[QualityLabel] = []
        self._seq = 0
        if self._path.exists():
            with self._path.open("r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        rec = json.loads(line)
                        event = QualityLabel(
                            run_id=rec["run_id"],
                            annotator_id=rec["annotator_id"],
                            label=rec["label"],
                            timestamp=float(rec["timestamp"]),
                            session_id=rec.get("session_id", ""),
                            seq=int(rec["seq"]),
                        )
                    except (json.JSONDecodeError, KeyError, ValueError) as exc:
                        raise LabelStoreError(
                            f"{self._path}: line {line_no}: bad label event: {exc}"
                        ) from exc
                    self._events.append(event)
                    self._seq = max(self._seq, event.seq)

    @property
    def path(self) -> Path:
        return self._path

    def events(self) -> list[QualityLabel]:
        """Full audit trail in append order."""
        with self._lock:
            return list(self._events)

    def submit(
        self,
        run_id: str,
        annotator_id: str,
        label: str,
        session_id: str = "",
        timestamp: float | None = None,
    ) -> dict:
        if label not in VALID_LABELS:
            raise LabelStoreError(f"unknown label '{label}'")
        if not run_id or not annotator_id:
            raise LabelStoreError("run_id and annotator_id must be non-empty")
        with self._lock:
            overwrote = any(
                e.run_id == run_id and e.annotator_id == annotator_id for e in self._events
            )
            self._seq += 1
            event = QualityLabel(
                run_id=run_id,
                annotator_id=annotator_id,
                label=label,
                timestamp=time.time() if timestamp is None else timestamp,
                session_id=session_id,
                seq=self._seq,
            )
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {
                            "seq": event.seq,
                            "run_id": event.run_id,
                            "annotator_id": event.annotator_id,
                            "label": event.label,
                            "timestamp": event.timestamp,
                            "session_id": event.session_id,
                        },
                        separators=(",", ":"),
                    )
                    + "\n"
                )
                fh.flush()
            self._events.append(event)
            return {"status": "ok", "seq": event.seq, "overwrote": overwrote}

    def effective_labels(self) -> list[QualityLabel]:
        """Latest label per (run, annotator), ordered by first submission."""
        latest: dict[tuple[str, str], QualityLabel] = {}
        for event in self.events():
            latest[(event.run_id, event.annotator_id)] = event
        return list(latest.values())

    def labels_for_run(self, run_id: str) -> list[QualityLabel]:
        return [e for e in self.effective_labels() if e.run_id == run_id]

    def runs_labeled_by(self, annotator_id: str) -> set[str]:
        return {e.run_id for e in self.effective_labels() if e.annotator_id == annotator_id}

    def session_count(self, annotator_id: str, session_id: str) -> int:
        return sum(
            1
            for e in self.effective_labels()
            if e.annotator_id == annotator_id and e.session_id == session_id
        )

    def resolutions(self) -> tuple[dict[str, Resolution], list[str]]:
        """(resolved run -> Resolution, unresolved run ids needing a tie-break)."""
        per_run: dict[str, list[QualityLabel]] = {}
        for event in self.effective_labels():
            per_run.setdefault(event.run_id, []).append(event)
        resolved: dict[str, Resolution] = {}
        unresolved: list[str] = []
        for run_id, labels in per_run.items():
            # annotators in order of their first submission for this run
            labels.sort(key=lambda e: e.seq)
            if len(labels) < 2:
                continue
            first, second = labels[0], labels[1]
            if first.label == second.label:
                resolved[run_id] = Resolution(run_id, first.label, resolver_id=None)
            elif len(labels) >= 3:
                third = labels[2]
                resolved[run_id] = Resolution(run_id, third.label, third.annotator_id)
            else:
                unresolved.append(run_id)
        return resolved, sorted(unresolved)

    def agreement(self, annotator_a: str, annotator_b: str) -> AgreementResult:
        """Cohen's kappa over the runs both annotators labeled."""
        a_labels = {
            e.run_id: e.label for e in self.effective_labels() if e.annotator_id == annotator_a
        }
        b_labels = {
            e.run_id: e.label for e in self.effective_labels() if e.annotator_id == annotator_b
        }
        shared = sorted(set(a_labels) & set(b_labels))
        if not shared:
            raise StatsError(
                f"annotators '{annotator_a}' and '{annotator_b}' share no labeled runs"
            )
        return cohen_kappa([a_labels[r] for r in shared], [b_labels[r] for r in shared])

    def disagreements(self, annotator_a: str, annotator_b: str) -> list[dict]:
        a_labels = {
            e.run_id: e.label for e in self.effective_labels() if e.annotator_id == annotator_a
        }
        b_labels = {
            e.run_id: e.label for e in self.effective_labels() if e.annotator_id == annotator_b
        }
        return [
            {"run_id": r, annotator_a: a_labels[r], annotator_b: b_labels[r]}
            for r in sorted(set(a_labels) & set(b_labels))
            if a_labels[r] != b_labels[r]
        ]

    def export(self, out_dir: str | Path, partial: bool = False) -> dict:
        """Write labels.csv and resolved.csv; refuse full export with open ties."""
        resolved, unresolved = self.resolutions()
        if unresolved and not partial:
            raise LabelStoreError(
                "unresolved disagreements for runs: " + ", ".join(unresolved)
            )
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        labels_path = out_dir / "labels.csv"
        with labels_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run_id", "annotator_id", "label", "timestamp", "session_id"])
            for e in sorted(self.effective_labels(), key=lambda e: (e.run_id, e.annotator_id)):
                writer.writerow([e.run_id, e.annotator_id, e.label, e.timestamp, e.session_id])
        resolved_path = out_dir / "resolved.csv"
        with resolved_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run_id", "label", "resolver_id"])
            for run_id in sorted(resolved):
                res = resolved[run_id]
                writer.writerow([res.run_id, res.label, res.resolver_id or ""])
        return {
            "labels_csv": str(labels_path),
            "resolved_csv": str(resolved_path),
            "n_labels": len(self.effective_labels()),
            "n_resolved": len(resolved),
            "unresolved": unresolved,
        }


def load_final_labels(path: str | Path) -> dict[str, str]:
    """Read a resolved.csv (or any run_id,label CSV) into a mapping."""
    path = Path(path)
    labels: dict[str, str] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "run_id" not in reader.fieldnames:
            raise LabelStoreError(f"{path}: expected a CSV with a run_id column")
        for row in reader:
            label = row.get("label", "")
            if label not in VALID_LABELS:
                raise LabelStoreError(f"{path}: unknown label '{label}'")
            labels[row["run_id"]] = label
    return labels
