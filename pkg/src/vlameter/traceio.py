"""JSONL trace files: one JSON record per line, header first.

Record types are tagged with a ``"type"`` field: ``header``, then one
``step`` per timestep, then an optional trailing ``outcome``. All field
names are snake_case; numbers are plain JSON doubles.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .model import (
    ObjectDecl,
    ObjectRole,
    Outcome,
    Pose,
    RunTrace,
    StepRecord,
    Task,
    TokenDistribution,
    TraceError,
    TraceHeader,
)


def _parse_header(rec: dict, line_no: int) -> TraceHeader:
    try:
        objects = [
            ObjectDecl(
                object_id=o["object_id"],
                object_role=ObjectRole(o["object_role"]),
                half_extents=tuple(o["half_extents"]) if "half_extents" in o else None,
            )
            for o in rec.get("objects", [])
        ]
        return TraceHeader(
            run_id=rec["run_id"],
            task=Task(rec["task"]),
            instruction=rec.get("instruction", ""),
            robot=rec.get("robot", ""),
            model=rec.get("model", ""),
            action_dims=int(rec["action_dims"]),
            action_horizon=int(rec.get("action_horizon", 1)),
            dt=float(rec["dt"]),
            token_count=int(rec.get("token_count", 0)),
            vocab_size=int(rec.get("vocab_size", 0)),
            ev_samples=int(rec.get("ev_samples", 0)),
            objects=objects,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise TraceError(f"line {line_no}: bad header record: {exc}") from exc


def _parse_token_dist(rec: dict, default_vocab: int, where: str) -> TokenDistribution:
    try:
        entries = rec["entries"]
        return TokenDistribution(
            token_ids=[int(k) for k in entries.keys()],
            probs=[float(v) for v in entries.values()],
            tail_mass=float(rec.get("tail_mass", 0.0)),
            vocab_size=int(rec.get("vocab_size", default_vocab)),
        )
    except (KeyError, ValueError, TypeError, AttributeError) as exc:
        raise TraceError(f"{where}: bad token distribution: {exc}") from exc


def _parse_step(rec: dict, header: TraceHeader, line_no: int) -> StepRecord:
    where = f"line {line_no}"
    try:
        action = np.asarray(rec["action"], dtype=np.float64)
        tcp = np.asarray(rec["tcp"], dtype=np.float64) if rec.get("tcp") is not None else None
        ev = (
            np.asarray(rec["ev_actions"], dtype=np.float64)
            if rec.get("ev_actions") is not None
            else None
        )
        token_probs = None
        if rec.get("token_probs") is not None:
            token_probs = [
                _parse_token_dist(d, header.vocab_size, f"{where}, token {i}")
                for i, d in enumerate(rec["token_probs"])
            ]
        poses = {}
        for object_id, p in rec.get("object_poses", {}).items():
            poses[object_id] = Pose(
                position=tuple(p["position"]),
                orientation=tuple(p.get("orientation", (0.0, 0.0, 0.0, 1.0))),
            )
        gripper = rec.get("gripper_open")
        return StepRecord(
            t=int(rec["t"]),
            action=action,
            tcp=tcp,
            gripper_open=float(gripper) if gripper is not None else None,
            grasped=rec.get("grasped"),
            ev_actions=ev,
            token_probs=token_probs,
            object_poses=poses,
        )
    except TraceError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise TraceError(f"{where}: bad step record: {exc}") from exc


def read_trace(fh: Iterable[str], source: str = "<stream>") -> RunTrace:
    header: TraceHeader | None = None
    steps: list[StepRecord] = []
    outcome: Outcome | None = None
    for line_no, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"{source}: line {line_no}: malformed JSON: {exc}") from exc
        if not isinstance(rec, dict) or "type" not in rec:
            raise TraceError(f"{source}: line {line_no}: record has no 'type' field")
        kind = rec["type"]
        if kind == "header":
            if header is not None:
                raise TraceError(f"{source}: line {line_no}: duplicate header record")
            header = _parse_header(rec, line_no)
        elif kind == "step":
            if header is None:
                raise TraceError(f"{source}: line {line_no}: step record before header")
            steps.append(_parse_step(rec, header, line_no))
        elif kind == "outcome":
            outcome = Outcome(
                oracle_success=rec.get("oracle_success"), notes=rec.get("notes")
            )
        else:
            raise TraceError(f"{source}: line {line_no}: unknown record type '{kind}'")
    if header is None:
        raise TraceError(f"{source}: header record missing")
    trace = RunTrace(header=header, steps=steps, outcome=outcome)
    try:
        trace.validate()
    except TraceError as exc:
        raise TraceError(f"{source}: {exc}") from exc
    return trace


def load_trace(path: str | Path) -> RunTrace:
    """Load and validate one JSONL trace file."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return read_trace(fh, source=str(path))


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _header_record(h: TraceHeader) -> dict:
    rec: dict = {
        "type": "header",
        "run_id": h.run_id,
        "task": h.task.value,
        "instruction": h.instruction,
        "robot": h.robot,
        "action_dims": h.action_dims,
        "action_horizon": h.action_horizon,
        "dt": h.dt,
        "token_count": h.token_count,
        "vocab_size": h.vocab_size,
        "ev_samples": h.ev_samples,
        "objects": [
            {
                "object_id": o.object_id,
                "object_role": o.object_role.value,
                **({"half_extents": list(o.half_extents)} if o.half_extents else {}),
            }
            for o in h.objects
        ],
    }
    if h.model:
        rec["model"] = h.model
    return rec


def _step_record(s: StepRecord) -> dict:
    rec: dict = {"type": "step", "t": s.t, "action": s.action.tolist()}
    if s.tcp is not None:
        rec["tcp"] = s.tcp.tolist()
    if s.gripper_open is not None:
        rec["gripper_open"] = s.gripper_open
    if s.grasped is not None:
        rec["grasped"] = s.grasped
    if s.ev_actions is not None:
        rec["ev_actions"] = s.ev_actions.tolist()
    if s.token_probs is not None:
        rec["token_probs"] = [
            {
                "entries": {str(k): v for k, v in d.entries().items()},
                "tail_mass": d.tail_mass,
                "vocab_size": d.vocab_size,
            }
            for d in s.token_probs
        ]
    if s.object_poses:
        rec["object_poses"] = {
            object_id: {
                "position": list(p.position),
                "orientation": list(p.orientation),
            }
            for object_id, p in s.object_poses.items()
        }
    return rec


def write_trace_stream(trace: RunTrace, fh: IO[str]) -> None:
    fh.write(_dump(_header_record(trace.header)) + "\n")
    for step in trace.steps:
        fh.write(_dump(_step_record(step)) + "\n")
    if trace.outcome is not None:
        rec: dict = {"type": "outcome"}
        if trace.outcome.oracle_success is not None:
            rec["oracle_success"] = trace.outcome.oracle_success
        if trace.outcome.notes is not None:
            rec["notes"] = trace.outcome.notes
        fh.write(_dump(rec) + "\n")


def write_trace(trace: RunTrace, path: str | Path) -> None:
    """Write a trace to a JSONL file (validates first)."""
    trace.validate()
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        write_trace_stream(trace, fh)
