"""Symbolic success oracles and grasp-state derivation.

Each oracle is a pure geometric predicate over the recorded object poses:

* pick_up: the target rises at least ``LIFT_HEIGHT`` above its starting
  height for at least ``STABILITY_STEPS`` consecutive steps.
* move_near: the final center distance between the target and the second
  target is at most ``NEAR_RADIUS``.
* put_in: the target's axis-aligned bounding box is contained in the
  destination's at the final step and the five steps before it.
* put_on: the target rests on top of the destination (x/y AABB overlap,
  bottom face within ``CONTACT_TOL`` of the destination's top face) over
  the final five steps.
"""

from __future__ import annotations

import logging

import numpy as np

from .model import ObjectRole, RunTrace, Task, TraceError

logger = logging.getLogger(__name__)

LIFT_HEIGHT = 0.02
NEAR_RADIUS = 0.05
CONTACT_TOL = 0.01
STABILITY_STEPS = 5

# Grasp-latch thresholds: gripper considered closed below this fraction,
# and the TCP must be within this distance of the target to latch.
GRASP_GRIPPER_CLOSED = 0.5
GRASP_DISTANCE = 0.05


def _required_positions(trace: RunTrace, role: ObjectRole) -> np.ndarray:
    obj = trace.header.object_by_role(role)
    if obj is None:
        raise TraceError(
            f"task {trace.header.task.value} requires an object with role {role.value}"
        )
    return trace.object_positions(obj.object_id)


def _half_extents(trace: RunTrace, role: ObjectRole) -> np.ndarray:
    obj = trace.header.object_by_role(role)
    assert obj is not None
    return np.asarray(obj.effective_half_extents(), dtype=np.float64)


def _aabb_contained(inner_c: np.ndarray, inner_h: np.ndarray,
                    outer_c: np.ndarray, outer_h: np.ndarray) -> bool:
    return bool(
        np.all(inner_c - inner_h >= outer_c - outer_h)
        and np.all(inner_c + inner_h <= outer_c + outer_h)
    )


def _resting_on(top_c: np.ndarray, top_h: np.ndarray,
                base_c: np.ndarray, base_h: np.ndarray) -> bool:
    xy_overlap = bool(np.all(np.abs(top_c[:2] - base_c[:2]) <= top_h[:2] + base_h[:2]))
    bottom = top_c[2] - top_h[2]
    base_top = base_c[2] + base_h[2]
    return xy_overlap and abs(bottom - base_top) <= CONTACT_TOL


def success_oracle(trace: RunTrace) -> bool:
    """Decide task success from the recorded object poses."""
    task = trace.header.task
    window = STABILITY_STEPS + 1 if task == Task.PUT_IN else STABILITY_STEPS
    if len(trace) < window:
        raise TraceError(
            f"trace too short for the {task.value} oracle:"
            f" {len(trace)} steps, need {window}"
        )

    target = _required_positions(trace, ObjectRole.TARGET)

    if task == Task.PICK_UP:
        lifted = target[:, 2] - target[0, 2] >= LIFT_HEIGHT
        run = 0
        for flag in lifted:
            run = run + 1 if flag else 0
            if run >= STABILITY_STEPS:
                return True
        return False

    if task == Task.MOVE_NEAR:
        other = _required_positions(trace, ObjectRole.SECONDARY_TARGET)
        return bool(np.linalg.norm(target[-1] - other[-1]) <= NEAR_RADIUS)

    dest = _required_positions(trace, ObjectRole.DESTINATION)
    t_h = _half_extents(trace, ObjectRole.TARGET)
    d_h = _half_extents(trace, ObjectRole.DESTINATION)

    if task == Task.PUT_IN:
        return all(
            _aabb_contained(target[i], t_h, dest[i], d_h) for i in range(-window, 0)
        )
    # PUT_ON
    return all(_resting_on(target[i], t_h, dest[i], d_h) for i in range(-window, 0))


def derive_grasped(trace: RunTrace) -> list[bool]:
    """Per-step grasp flags.

    Explicit per-step flags are passed through unchanged. Otherwise the
    state latches on when the gripper closes near the target and releases
    only when the gripper opens again. Missing gripper data degrades to
    all-false with a warning.
    """
    if trace.steps and all(s.grasped is not None for s in trace.steps):
        return [bool(s.grasped) for s in trace.steps]

    if any(s.gripper_open is None for s in trace.steps if s.grasped is None):
        logger.warning(
            "run %s: gripper_open missing on some steps; treating the whole"
            " run as never grasped",
            trace.header.run_id,
        )
        return [False] * len(trace)

    target = _required_positions(trace, ObjectRole.TARGET)
    flags: list[bool] = []
    grasped = False
    for i, step in enumerate(trace.steps):
        if step.grasped is not None:
            grasped = bool(step.grasped)
            flags.append(grasped)
            continue
        assert step.tcp is not None, f"step {step.t}: tcp required to derive grasp state"
        closed = step.gripper_open < GRASP_GRIPPER_CLOSED
        if grasped:
            if not closed:
                grasped = False
        elif closed and np.linalg.norm(step.tcp - target[i]) < GRASP_DISTANCE:
            grasped = True
        flags.append(grasped)
    return flags
