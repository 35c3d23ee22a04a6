"""Streaming per-step metric computation.

``StepwiseComputer`` consumes one step at a time, keeping a bounded
ring-buffer history (the window), and yields exactly the values the batch
functions produce. This is the path the overhead benchmark times, and it is
how a run-time monitor would consume a live trace.
"""

from __future__ import annotations

import numpy as np

from .backend import get_backend
from .model import ObjectRole, RunTrace, StepRecord, Task, TraceError
from .oracle import GRASP_DISTANCE, GRASP_GRIPPER_CLOSED, NEAR_RADIUS
from .uncertainty import step_token_args

MIN_WINDOW = 4  # third-order differences need four samples

ALL_GROUPS = ("AI", "TB", "EV", "TCP", "TI", "OT")


class StepwiseComputer:
    """Per-step metric values over a sliding window of recent steps."""

    def __init__(
        self,
        trace: RunTrace,
        window: int = 8,
        groups: tuple[str, ...] = ALL_GROUPS,
        backend=None,
    ):
        if window < MIN_WINDOW:
            raise ValueError(f"window must be >= {MIN_WINDOW}, got {window}")
        self._kernels = get_backend() if backend is None else backend
        self._groups = set(groups)
        header = trace.header
        self._dt3 = header.dt**3
        self._window = window
        self._actions = np.zeros((window, header.action_dims))
        self._tcp = np.zeros((window, 3))
        self._tb_scratch = np.empty(max(header.vocab_size, 1))
        self._count = 0
        self._jerk_sq_sum = 0.0
        self._jerk_count = 0

        self._task = header.task
        target = header.object_by_role(ObjectRole.TARGET)
        dest = header.object_by_role(ObjectRole.DESTINATION)
        other = header.object_by_role(ObjectRole.SECONDARY_TARGET)
        self._target_id = target.object_id if target else None
        self._dest_id = dest.object_id if dest else None
        self._other_id = other.object_id if other else None
        self._fixed_end: np.ndarray | None = None
        self._grasped = False
        self._prev_d: float | None = None

    def _goal_point(self, step: StepRecord) -> np.ndarray:
        if self._task in (Task.PUT_IN, Task.PUT_ON):
            if self._dest_id is None or self._dest_id not in step.object_poses:
                raise TraceError("OT requires a posed destination object")
            return step.object_poses[self._dest_id].position_array()
        if self._fixed_end is None:
            if self._other_id is None or self._other_id not in step.object_poses:
                raise TraceError("OT requires a posed secondary_target object")
            a0 = step.object_poses[self._target_id].position_array()
            b0 = step.object_poses[self._other_id].position_array()
            gap = a0 - b0
            norm = float(np.linalg.norm(gap))
            self._fixed_end = b0 if norm == 0.0 else b0 + NEAR_RADIUS * gap / norm
        return self._fixed_end

    def _ot_value(self, step: StepRecord) -> float | None:
        if self._target_id is None or self._target_id not in step.object_poses:
            raise TraceError("OT requires a posed target object")
        assert step.tcp is not None
        target = step.object_poses[self._target_id].position_array()
        if self._task == Task.PICK_UP:
            d = float(np.linalg.norm(step.tcp - target))
        else:
            if step.grasped is not None:
                self._grasped = bool(step.grasped)
            elif step.gripper_open is not None:
                closed = step.gripper_open < GRASP_GRIPPER_CLOSED
                if self._grasped:
                    if not closed:
                        self._grasped = False
                elif closed and float(np.linalg.norm(step.tcp - target)) < GRASP_DISTANCE:
                    self._grasped = True
            end = self._goal_point(step)
            d_end = float(np.linalg.norm(step.tcp - end))
            d = d_end if self._grasped else float(np.linalg.norm(step.tcp - target)) + d_end
        prev, self._prev_d = self._prev_d, d
        if prev is None:
            return None
        delta = min(max(d - prev, -1.0), 1.0)
        return 0.5 * (1.0 + delta)

    def push(self, step: StepRecord, action_override: np.ndarray | None = None) -> dict:
        """Process one step; returns the metric values defined at it."""
        self._actions[:-1] = self._actions[1:]
        self._actions[-1] = step.action if action_override is None else action_override
        if step.tcp is not None:
            self._tcp[:-1] = self._tcp[1:]
            self._tcp[-1] = step.tcp
        self._count += 1
        n = min(self._count, self._window)
        out: dict[str, float] = {}

        if "AI" in self._groups:
            for metric_id, order in (("A_PI", 1), ("A_VI", 2), ("A_AI", 3)):
                if n >= order + 1:
                    win = self._actions[self._window - order - 1 :]
                    out[metric_id] = float(self._kernels.diff_abs_mean(win, order)[0])
        if step.tcp is not None:
            if "TCP" in self._groups:
                for metric_id, order in (("TCP_PI", 1), ("TCP_VI", 2), ("TCP_AI", 3)):
                    if n >= order + 1:
                        win = self._tcp[self._window - order - 1 :]
                        out[metric_id] = float(self._kernels.diff_norm(win, order)[0])
            if "TI" in self._groups and n >= 4:
                jerk = float(self._kernels.diff_norm(self._tcp[-4:], 3)[0]) / self._dt3
                self._jerk_sq_sum += jerk * jerk
                self._jerk_count += 1
        if "TB" in self._groups and step.token_probs:
            tp, pcs, gini, ent = self._kernels.token_metrics(
                *step_token_args(step), self._tb_scratch
            )
            out.update(TB_TP=tp, TB_PCS=pcs, TB_D=gini, TB_E=ent)
        if "EV" in self._groups and step.ev_actions is not None and len(step.ev_actions) >= 2:
            out["EV"] = float(self._kernels.ev_std(step.ev_actions))
        if "OT" in self._groups and step.tcp is not None:
            q = self._ot_value(step)
            if q is not None:
                out["OT"] = q
        return out

    def finalize(self) -> dict:
        """Run-level values available once the trace ends."""
        out: dict[str, float] = {}
        if "TI" in self._groups and self._jerk_count > 0:
            out["TI"] = float(np.sqrt(self._jerk_sq_sum / self._jerk_count))
        return out


class EvReplayComputer:
    """Desk-scale stand-in for the true cost of execution-variability.

    In deployment every step would be inferred N extra times; here each
    recorded inference sample is replayed through the full per-step output
    processing pipeline before the spread of the samples is computed, so the
    measured cost scales with N the way the real metric does. The model
    re-inference itself cannot be measured offline and is excluded.
    """

    def __init__(self, trace: RunTrace, window: int = 8, backend=None):
        self._kernels = get_backend() if backend is None else backend
        self._scratch = StepwiseComputer(
            trace, window=window, groups=("AI", "TB", "TCP", "TI", "OT"), backend=backend
        )

    def push(self, step: StepRecord) -> float | None:
        if step.ev_actions is None or len(step.ev_actions) < 2:
            return None
        for sample in step.ev_actions:
            self._scratch.push(step, action_override=sample)
        return float(self._kernels.ev_std(step.ev_actions))


def stream_run(trace: RunTrace, window: int = 8, backend=None):
    """Feed a whole trace through a StepwiseComputer.

    Returns (per-step value dicts in step order, finalized run-level dict).
    """
    computer = StepwiseComputer(trace, window=window, backend=backend)
    per_step = [computer.push(step) for step in trace.steps]
    return per_step, computer.finalize()
