"""Per-step and per-run quality metrics over the TCP trajectory.

TCP_PI / TCP_VI / TCP_AI are Euclidean norms of the first, second and third
differences of the 3D end-effector position. TI is a single per-run value:
the root-mean-square of the discrete jerk (third difference divided by
dt^3). OT tracks a task-adaptive goal distance and scores its per-step
change; values below 0.5 mean the robot is making progress.
"""

from __future__ import annotations

import logging

import numpy as np

from . import uncertainty
from .backend import get_backend
from .model import ObjectRole, RunTrace, Task, TraceError
from .oracle import NEAR_RADIUS, derive_grasped, success_oracle
from .series import METRIC_IDS, MetricSeries, RunSummary, SeriesUndefinedError

logger = logging.getLogger(__name__)

# Change in goal distance is clamped to this band before scoring so OT stays
# in [0, 1] even for pathological meter-scale jumps.
OT_CLAMP = 1.0


def _tcp_array(trace: RunTrace, metric_id: str, order: int) -> np.ndarray:
    tcp = trace.tcp_positions()
    if tcp is None:
        raise SeriesUndefinedError(f"{metric_id} needs tcp on every step")
    if len(tcp) < order + 1:
        raise SeriesUndefinedError(
            f"{metric_id} needs at least {order + 1} steps, trace has {len(tcp)}"
        )
    return tcp


def _tcp_instability(trace: RunTrace, metric_id: str, order: int, backend) -> MetricSeries:
    tcp = _tcp_array(trace, metric_id, order)
    kernels = get_backend() if backend is None else backend
    return MetricSeries(metric_id, valid_from=order, data=kernels.diff_norm(tcp, order))


def tcp_pi(trace: RunTrace, backend=None) -> MetricSeries:
    """Norm of the per-step TCP displacement."""
    return _tcp_instability(trace, "TCP_PI", 1, backend)


def tcp_vi(trace: RunTrace, backend=None) -> MetricSeries:
    """Norm of the per-step TCP velocity change."""
    return _tcp_instability(trace, "TCP_VI", 2, backend)


def tcp_ai(trace: RunTrace, backend=None) -> MetricSeries:
    """Norm of the per-step TCP acceleration change."""
    return _tcp_instability(trace, "TCP_AI", 3, backend)


def ti(trace: RunTrace, backend=None) -> float:
    """Whole-run root-mean-square jerk of the TCP trajectory."""
    tcp = _tcp_array(trace, "TI", 3)
    kernels = get_backend() if backend is None else backend
    dt = trace.header.dt
    if dt <= 0:
        logger.warning("run %s: invalid dt, using 1 s", trace.header.run_id)
        dt = 1.0
    jerk_norms = kernels.diff_norm(tcp, 3) / dt**3
    return float(np.sqrt(np.mean(jerk_norms**2)))


def _goal_track(trace: RunTrace) -> np.ndarray:
    """Per-step goal point ("end") for the placement branch of the distance."""
    task = trace.header.task
    if task in (Task.PUT_IN, Task.PUT_ON):
        obj = trace.header.object_by_role(ObjectRole.DESTINATION)
        if obj is None:
            raise TraceError(f"task {task.value} requires an object with role destination")
        return trace.object_positions(obj.object_id)
    # move_near: a fixed point one success radius from the goal object's
    # center, on the line toward the target's starting position.
    other = trace.header.object_by_role(ObjectRole.SECONDARY_TARGET)
    if other is None:
        raise TraceError("task move_near requires an object with role secondary_target")
    target_obj = trace.header.object_by_role(ObjectRole.TARGET)
    assert target_obj is not None
    a0 = trace.steps[0].object_poses[target_obj.object_id].position_array()
    b0 = trace.steps[0].object_poses[other.object_id].position_array()
    gap = a0 - b0
    norm = float(np.linalg.norm(gap))
    end = b0 if norm == 0.0 else b0 + NEAR_RADIUS * gap / norm
    return np.tile(end, (len(trace), 1))


def ot_distance(trace: RunTrace) -> np.ndarray:
    """Per-step goal distance d_t driving the OT metric.

    pick_up measures TCP-to-target distance. The other tasks measure
    TCP-to-target plus TCP-to-goal before the grasp and TCP-to-goal after
    it, re-evaluated per step as the grasp state changes.
    """
    tcp = trace.tcp_positions()
    if tcp is None:
        raise SeriesUndefinedError("OT needs tcp on every step")
    target_obj = trace.header.object_by_role(ObjectRole.TARGET)
    if target_obj is None:
        raise TraceError("OT requires an object with role target")
    target = trace.object_positions(target_obj.object_id)

    if trace.header.task == Task.PICK_UP:
        return np.linalg.norm(tcp - target, axis=1)

    end = _goal_track(trace)
    grasped = np.asarray(derive_grasped(trace), dtype=bool)
    d_target = np.linalg.norm(tcp - target, axis=1)
    d_end = np.linalg.norm(tcp - end, axis=1)
    return np.where(grasped, d_end, d_target + d_end)


def ot(trace: RunTrace) -> MetricSeries:
    """Goal-approach score: 0.5 + half the clamped change in goal distance."""
    d = ot_distance(trace)
    if len(d) < 2:
        raise SeriesUndefinedError("OT needs at least 2 steps")
    delta = np.clip(np.diff(d), -OT_CLAMP, OT_CLAMP)
    return MetricSeries("OT", valid_from=1, data=0.5 * (1.0 + delta))


_SERIES_FUNCS = {
    "A_PI": uncertainty.a_pi,
    "A_VI": uncertainty.a_vi,
    "A_AI": uncertainty.a_ai,
    "EV": uncertainty.ev,
    "TCP_PI": tcp_pi,
    "TCP_VI": tcp_vi,
    "TCP_AI": tcp_ai,
}


def compute_all_series(trace: RunTrace, backend=None):
    """Every available metric series plus TI and availability notes.

    Metrics whose inputs are missing are omitted and noted instead of
    failing the run.
    """
    series: dict[str, MetricSeries] = {}
    notes: list[str] = []
    try:
        series.update(uncertainty.token_metric_series(trace, backend))
    except SeriesUndefinedError as exc:
        notes.append(f"TB_TP/TB_PCS/TB_D/TB_E unavailable: {exc}")
    for metric_id in METRIC_IDS:
        func = _SERIES_FUNCS.get(metric_id)
        if func is None:
            continue
        try:
            series[metric_id] = func(trace, backend=backend)
        except SeriesUndefinedError as exc:
            notes.append(f"{metric_id} unavailable: {exc}")
    try:
        series["OT"] = ot(trace)
    except (SeriesUndefinedError, TraceError) as exc:
        notes.append(f"OT unavailable: {exc}")
    ti_value: float | None = None
    try:
        ti_value = ti(trace, backend=backend)
    except SeriesUndefinedError as exc:
        notes.append(f"TI unavailable: {exc}")
    ordered = {k: series[k] for k in METRIC_IDS if k in series}
    return ordered, ti_value, notes


def run_success(trace: RunTrace) -> bool:
    """Oracle verdict, falling back to the recorded outcome."""
    try:
        return success_oracle(trace)
    except TraceError:
        if trace.outcome is not None and trace.outcome.oracle_success is not None:
            return bool(trace.outcome.oracle_success)
        raise


def summarize_run(
    trace: RunTrace,
    labels: dict[str, str] | None = None,
    backend=None,
) -> RunSummary:
    """Collapse a run to per-metric means plus outcome and optional label."""
    series, ti_value, notes = compute_all_series(trace, backend)
    label = labels.get(trace.header.run_id) if labels else None
    return RunSummary(
        run_id=trace.header.run_id,
        task=trace.header.task.value,
        model=trace.header.model,
        success=run_success(trace),
        per_metric_mean={k: s.mean() for k, s in series.items()},
        ti=ti_value,
        quality_label=label,
        notes=notes,
    )
