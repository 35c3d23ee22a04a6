"""Deterministic synthetic traces for testing and benchmarking.

Profiles:

* ``smooth``   minimum-jerk approach/transfer that satisfies the task oracle
* ``jittery``  the smooth trajectory plus per-step noise, still successful
* ``stalled``  the robot never moves (constant pose, constant actions)
* ``failing``  an erratic wander that never satisfies the oracle

Equal seeds give bit-identical traces.
"""

from __future__ import annotations

from enum import Enum

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
    TraceHeader,
)

HOME_TCP = np.array([0.20, 0.0, 0.25])
TARGET_HALF = (0.02, 0.02, 0.02)
DEST_HALF_IN = (0.08, 0.08, 0.05)
DEST_HALF_ON = (0.07, 0.07, 0.02)
MIN_OBJECT_SPACING = 0.15
LIFT_DELTA = 0.12
NEAR_GOAL_DISTANCE = 0.03
REST_SNAP_LIMIT = 0.008  # released objects settle within this box of the goal


class Profile(str, Enum):
    SMOOTH = "smooth"
    JITTERY = "jittery"
    STALLED = "stalled"
    FAILING = "failing"


def _min_jerk(p0: np.ndarray, p1: np.ndarray, n: int) -> np.ndarray:
    """n positions easing from p0 to p1 (endpoints included)."""
    if n <= 1:
        return np.tile(p1, (max(n, 0), 1))
    tau = np.linspace(0.0, 1.0, n)
    s = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    return p0 + s[:, None] * (p1 - p0)


def _sample_ground_position(rng: np.random.Generator, z: float) -> np.ndarray:
    x = rng.uniform(0.25, 0.45)
    y = rng.uniform(-0.20, 0.20)
    return np.array([x, y, z])


def _sample_scene(rng: np.random.Generator, task: Task):
    """Object declarations and initial positions; spacing is enforced."""
    objects = [ObjectDecl("target", ObjectRole.TARGET, TARGET_HALF)]
    positions = {"target": _sample_ground_position(rng, TARGET_HALF[2])}

    def _place_apart(z: float) -> np.ndarray:
        while True:
            pos = _sample_ground_position(rng, z)
            if all(
                np.linalg.norm(pos[:2] - other[:2]) >= MIN_OBJECT_SPACING
                for other in positions.values()
            ):
                return pos

    if task == Task.MOVE_NEAR:
        objects.append(ObjectDecl("goal_object", ObjectRole.SECONDARY_TARGET, TARGET_HALF))
        positions["goal_object"] = _place_apart(TARGET_HALF[2])
    elif task == Task.PUT_IN:
        objects.append(ObjectDecl("container", ObjectRole.DESTINATION, DEST_HALF_IN))
        positions["container"] = _place_apart(DEST_HALF_IN[2])
    elif task == Task.PUT_ON:
        objects.append(ObjectDecl("base", ObjectRole.DESTINATION, DEST_HALF_ON))
        positions["base"] = _place_apart(DEST_HALF_ON[2])
    if rng.random() < 0.5:
        objects.append(ObjectDecl("clutter", ObjectRole.CONFOUNDER, TARGET_HALF))
        positions["clutter"] = _place_apart(TARGET_HALF[2])
    return objects, positions


def _goal_point(task: Task, positions: dict[str, np.ndarray]) -> np.ndarray:
    target0 = positions["target"]
    if task == Task.PICK_UP:
        return target0 + np.array([0.0, 0.0, LIFT_DELTA])
    if task == Task.MOVE_NEAR:
        other = positions["goal_object"]
        gap = target0 - other
        direction = gap / np.linalg.norm(gap)
        return other + NEAR_GOAL_DISTANCE * direction
    if task == Task.PUT_IN:
        return positions["container"].copy()
    base = positions["base"]
    return base + np.array([0.0, 0.0, DEST_HALF_ON[2] + TARGET_HALF[2]])


def _task_tcp_path(task: Task, positions: dict[str, np.ndarray], steps: int):
    """Smooth TCP path, per-step gripper command, and the grasp/release steps."""
    target0 = positions["target"]
    goal = _goal_point(task, positions)
    n_approach = max(2, int(round(steps * 0.30)))
    n_grasp = max(2, int(round(steps * 0.10)))
    n_transfer = max(2, int(round(steps * 0.35)))
    n_settle = steps - n_approach - n_grasp - n_transfer
    above = target0 + np.array([0.0, 0.0, 0.08])

    segments = [
        _min_jerk(HOME_TCP, above, n_approach),
        _min_jerk(above, target0, n_grasp),
        _min_jerk(target0, goal, n_transfer),
    ]
    release = task != Task.PICK_UP
    if release:
        segments.append(_min_jerk(goal, goal + np.array([0.0, 0.0, 0.06]), n_settle))
    else:
        segments.append(np.tile(goal, (n_settle, 1)))
    tcp = np.concatenate(segments)

    grasp_step = n_approach + n_grasp - 1
    release_step = n_approach + n_grasp + n_transfer if release else None
    gripper = np.ones(steps)
    open_until = grasp_step
    close_until = release_step if release_step is not None else steps
    gripper[open_until:close_until] = 0.1
    return tcp, gripper, grasp_step, release_step, goal


def _wander_path(rng: np.random.Generator, steps: int) -> np.ndarray:
    waypoints = [HOME_TCP]
    for _ in range(3):
        waypoints.append(
            np.array([rng.uniform(0.15, 0.5), rng.uniform(-0.3, 0.3), rng.uniform(0.05, 0.35)])
        )
    per = steps // 3
    parts = [
        _min_jerk(waypoints[i], waypoints[i + 1], per if i < 2 else steps - 2 * per)
        for i in range(3)
    ]
    return np.concatenate(parts)


def _token_distributions(
    rng: np.random.Generator,
    token_count: int,
    vocab_size: int,
    peak: float,
    dense: bool,
) -> list[TokenDistribution]:
    dists = []
    for _ in range(token_count):
        p0 = float(np.clip(peak + rng.normal(0.0, 0.02), 0.05, 0.96))
        if dense:
            probs = np.full(vocab_size, (1.0 - p0) / (vocab_size - 1))
            probs[int(rng.integers(vocab_size))] = p0
            dists.append(TokenDistribution(np.arange(vocab_size), probs, 0.0, vocab_size))
        else:
            k = 6
            ids = rng.choice(vocab_size, size=k, replace=False).astype(np.int64)
            rest = np.geomspace(1.0, 0.05, k - 1)
            rest *= (0.98 - p0) / rest.sum()
            probs = np.concatenate([[p0], rest])
            tail = 1.0 - float(probs.sum())
            dists.append(TokenDistribution(ids, probs, tail, vocab_size))
    return dists


def generate_synthetic(
    profile: Profile | str,
    task: Task | str,
    seed: int,
    *,
    steps: int = 60,
    dt: float = 0.2,
    noise_amplitude: float = 0.004,
    action_dims: int = 7,
    token_count: int = 7,
    vocab_size: int = 32064,
    ev_samples: int = 4,
    include_tokens: bool = True,
    include_ev: bool = True,
    dense_tokens: bool = False,
    model: str = "synthetic",
    run_id: str | None = None,
) -> RunTrace:
    """Generate one deterministic synthetic run trace."""
    profile = Profile(profile)
    task = Task(task)
    if steps < 8:
        raise ValueError("synthetic traces need at least 8 steps")
    rng = np.random.default_rng(seed)
    objects, positions = _sample_scene(rng, task)

    if profile == Profile.STALLED:
        tcp = np.tile(HOME_TCP, (steps, 1))
        gripper = np.ones(steps)
        grasp_step, release_step, goal = None, None, None
    elif profile == Profile.FAILING:
        tcp = _wander_path(rng, steps)
        tcp = tcp + rng.normal(0.0, 5 * noise_amplitude, tcp.shape)
        gripper = np.ones(steps)
        grasp_step, release_step, goal = None, None, None
    else:
        tcp, gripper, grasp_step, release_step, goal = _task_tcp_path(task, positions, steps)
        if profile == Profile.JITTERY:
            tcp = tcp + rng.normal(0.0, noise_amplitude, tcp.shape)

    # Carried object follows the TCP between grasp and release, then settles
    # at (or near, for jittery runs) the goal point.
    object_tracks = {oid: np.tile(pos, (steps, 1)) for oid, pos in positions.items()}
    if grasp_step is not None:
        carried = object_tracks["target"]
        stop = release_step if release_step is not None else steps
        carried[grasp_step:stop] = tcp[grasp_step:stop]
        if release_step is not None:
            rest = goal + np.clip(tcp[release_step - 1] - goal, -REST_SNAP_LIMIT, REST_SNAP_LIMIT)
            carried[release_step:] = rest

    actions = np.zeros((steps, action_dims))
    pos_dims = min(3, action_dims)
    actions[1:, :pos_dims] = np.diff(tcp, axis=0)[:, :pos_dims]
    if profile in (Profile.JITTERY, Profile.FAILING) and action_dims > 3:
        rot = slice(3, min(6, action_dims))
        actions[:, rot] = rng.normal(0.0, 0.5 * noise_amplitude, (steps, rot.stop - 3))
    if action_dims >= 7:
        actions[:, 6] = gripper

    peak = {
        Profile.SMOOTH: 0.93,
        Profile.JITTERY: 0.80,
        Profile.STALLED: 0.50,
        Profile.FAILING: 0.45,
    }[profile]

    step_records = []
    for t in range(steps):
        token_probs = None
        if include_tokens and token_count > 0:
            token_probs = _token_distributions(rng, token_count, vocab_size, peak, dense_tokens)
        ev = None
        if include_ev and ev_samples > 0:
            ev = np.tile(actions[t], (ev_samples, 1))
            if profile in (Profile.JITTERY, Profile.FAILING):
                ev = ev + rng.normal(0.0, noise_amplitude, ev.shape)
        step_records.append(
            StepRecord(
                t=t,
                action=actions[t],
                tcp=tcp[t].copy(),
                gripper_open=float(gripper[t]),
                ev_actions=ev,
                token_probs=token_probs,
                object_poses={
                    oid: Pose(position=tuple(track[t])) for oid, track in object_tracks.items()
                },
            )
        )

    instruction = {
        Task.PICK_UP: "pick up the target object",
        Task.MOVE_NEAR: "move the target object near the goal object",
        Task.PUT_IN: "put the target object in the container",
        Task.PUT_ON: "put the target object on the base",
    }[task]
    header = TraceHeader(
        run_id=run_id or f"{task.value}-{profile.value}-{seed:06d}",
        task=task,
        instruction=instruction,
        robot="synthetic_arm",
        model=model,
        action_dims=action_dims,
        action_horizon=1,
        dt=dt,
        token_count=token_count if include_tokens else 0,
        vocab_size=vocab_size if include_tokens else 0,
        ev_samples=ev_samples if include_ev else 0,
        objects=objects,
    )
    expected_success = profile in (Profile.SMOOTH, Profile.JITTERY)
    trace = RunTrace(
        header=header,
        steps=step_records,
        outcome=Outcome(oracle_success=expected_success, notes=f"profile={profile.value}"),
    )
    trace.validate()
    return trace
