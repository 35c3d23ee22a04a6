"""Data model for recorded robot-manipulation traces.

A run trace is a header, a time-ordered list of step records, and an
optional outcome. Traces are treated as immutable after load; everything
downstream (metrics, oracles, reports) is a pure function of a trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

QUAT_NORM_TOL = 1e-6
PROB_SUM_TOL = 1e-6


class TraceError(ValueError):
    """Raised when a trace violates the format or one of its invariants."""


class Task(str, Enum):
    PICK_UP = "pick_up"
    MOVE_NEAR = "move_near"
    PUT_IN = "put_in"
    PUT_ON = "put_on"


class ObjectRole(str, Enum):
    TARGET = "target"
    SECONDARY_TARGET = "secondary_target"
    DESTINATION = "destination"
    CONFOUNDER = "confounder"


# Nominal box half-extents by role, used when a trace does not declare them.
# Destinations (containers / support surfaces) get a larger default so the
# containment and stacking predicates are satisfiable.
DEFAULT_HALF_EXTENTS = {
    ObjectRole.TARGET: (0.02, 0.02, 0.02),
    ObjectRole.SECONDARY_TARGET: (0.02, 0.02, 0.02),
    ObjectRole.DESTINATION: (0.08, 0.08, 0.05),
    ObjectRole.CONFOUNDER: (0.02, 0.02, 0.02),
}

# Roles that must be declared (and posed at every step) for each task.
REQUIRED_ROLES = {
    Task.PICK_UP: (ObjectRole.TARGET,),
    Task.MOVE_NEAR: (ObjectRole.TARGET, ObjectRole.SECONDARY_TARGET),
    Task.PUT_IN: (ObjectRole.TARGET, ObjectRole.DESTINATION),
    Task.PUT_ON: (ObjectRole.TARGET, ObjectRole.DESTINATION),
}


@dataclass(frozen=True)
class ObjectDecl:
    object_id: str
    object_role: ObjectRole
    half_extents: tuple[float, float, float] | None = None

    def effective_half_extents(self) -> tuple[float, float, float]:
        if self.half_extents is not None:
            return self.half_extents
        return DEFAULT_HALF_EXTENTS[self.object_role]


@dataclass(frozen=True)
class Pose:
    """Object pose: position in meters, orientation as a unit quaternion (qx,qy,qz,qw)."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)

    def validate(self, where: str) -> None:
        if len(self.position) != 3:
            raise TraceError(f"{where}: pose position must have 3 components")
        if len(self.orientation) != 4:
            raise TraceError(f"{where}: pose orientation must have 4 components")
        norm = math.sqrt(sum(q * q for q in self.orientation))
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise TraceError(f"{where}: quaternion norm {norm:.8f} is not 1")

    def position_array(self) -> np.ndarray:
        return np.asarray(self.position, dtype=np.float64)


class TokenDistribution:
    """Sparse probability distribution over one output token.

    Explicitly listed token probabilities are kept as parallel id/probability
    arrays; ``tail_mass`` is the total probability of the remaining
    ``vocab_size - len(entries)`` tokens, treated as uniformly spread over
    them. On the wire this is a ``token_id -> probability`` map.
    """

    __slots__ = ("token_ids", "probs", "tail_mass", "vocab_size")

    def __init__(self, token_ids, probs, tail_mass: float = 0.0, vocab_size: int = 0):
        self.token_ids = np.asarray(token_ids, dtype=np.int64)
        self.probs = np.asarray(probs, dtype=np.float64)
        self.tail_mass = float(tail_mass)
        self.vocab_size = int(vocab_size)

    @classmethod
    def from_entries(cls, entries: dict[int, float], tail_mass: float = 0.0,
                     vocab_size: int = 0) -> "TokenDistribution":
        return cls(list(entries.keys()), list(entries.values()), tail_mass, vocab_size)

    def entries(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in zip(self.token_ids, self.probs)}

    def __len__(self) -> int:
        return len(self.probs)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TokenDistribution)
            and np.array_equal(self.token_ids, other.token_ids)
            and np.array_equal(self.probs, other.probs)
            and self.tail_mass == other.tail_mass
            and self.vocab_size == other.vocab_size
        )

    def validate(self, where: str) -> None:
        if self.vocab_size < 2:
            raise TraceError(f"{where}: vocab_size must be >= 2, got {self.vocab_size}")
        if self.token_ids.shape != self.probs.shape:
            raise TraceError(f"{where}: token id / probability arrays differ in length")
        if len(self.probs) > self.vocab_size:
            raise TraceError(
                f"{where}: {len(self.probs)} entries exceed vocab_size {self.vocab_size}"
            )
        if len(self.token_ids) and len(np.unique(self.token_ids)) != len(self.token_ids):
            raise TraceError(f"{where}: duplicate token ids")
        if self.tail_mass < 0:
            raise TraceError(f"{where}: negative tail_mass {self.tail_mass}")
        if self.tail_mass > 0 and len(self.probs) >= self.vocab_size:
            raise TraceError(f"{where}: tail_mass > 0 but no unlisted tokens remain")
        if len(self.probs) and (self.probs.min() < 0.0 or self.probs.max() > 1.0):
            raise TraceError(f"{where}: probabilities outside [0,1]")
        total = float(self.probs.sum()) + self.tail_mass
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise TraceError(f"{where}: probabilities sum to {total:.8f}, expected 1")

    @property
    def unlisted_slots(self) -> int:
        return self.vocab_size - len(self.probs)


@dataclass
class StepRecord:
    t: int
    action: np.ndarray
    tcp: np.ndarray | None = None
    gripper_open: float | None = None
    grasped: bool | None = None
    ev_actions: np.ndarray | None = None
    token_probs: list[TokenDistribution] | None = None
    object_poses: dict[str, Pose] = field(default_factory=dict)


@dataclass
class Outcome:
    oracle_success: bool | None = None
    notes: str | None = None


@dataclass
class TraceHeader:
    run_id: str
    task: Task
    instruction: str = ""
    robot: str = ""
    model: str = ""
    action_dims: int = 7
    action_horizon: int = 1
    dt: float = 1.0
    token_count: int = 0
    vocab_size: int = 0
    ev_samples: int = 0
    objects: list[ObjectDecl] = field(default_factory=list)

    def object_by_role(self, role: ObjectRole) -> ObjectDecl | None:
        for obj in self.objects:
            if obj.object_role == role:
                return obj
        return None

    def validate(self) -> None:
        if not self.run_id:
            raise TraceError("header: run_id must be non-empty")
        if self.action_dims < 1:
            raise TraceError(f"header: action_dims must be >= 1, got {self.action_dims}")
        if self.action_horizon < 1:
            raise TraceError(f"header: action_horizon must be >= 1, got {self.action_horizon}")
        if not (self.dt > 0):
            raise TraceError(f"header: dt must be > 0, got {self.dt}")
        if self.token_count < 0 or self.vocab_size < 0 or self.ev_samples < 0:
            raise TraceError("header: token_count, vocab_size and ev_samples must be >= 0")
        if self.token_count > 0 and self.vocab_size < 2:
            raise TraceError("header: vocab_size must be >= 2 when token_count > 0")
        seen: set[str] = set()
        for obj in self.objects:
            if obj.object_id in seen:
                raise TraceError(f"header: duplicate object_id '{obj.object_id}'")
            seen.add(obj.object_id)
        for role in REQUIRED_ROLES[self.task]:
            if self.object_by_role(role) is None:
                raise TraceError(
                    f"header: task {self.task.value} requires an object with role {role.value}"
                )


@dataclass
class RunTrace:
    header: TraceHeader
    steps: list[StepRecord]
    outcome: Outcome | None = None

    def __len__(self) -> int:
        return len(self.steps)

    def actions(self) -> np.ndarray:
        """All actions stacked as a (T, D) float array."""
        return np.stack([s.action for s in self.steps]) if self.steps else np.empty((0, 0))

    def tcp_positions(self) -> np.ndarray | None:
        """TCP path as a (T, 3) float array, or None if any step lacks it."""
        if any(s.tcp is None for s in self.steps) or not self.steps:
            return None
        return np.stack([s.tcp for s in self.steps])

    def object_positions(self, object_id: str) -> np.ndarray:
        """Per-step center positions of one object as a (T, 3) array."""
        rows = []
        for s in self.steps:
            pose = s.object_poses.get(object_id)
            if pose is None:
                raise TraceError(f"step {s.t}: missing pose for object '{object_id}'")
            rows.append(pose.position_array())
        return np.stack(rows)

    def has_token_probs(self) -> bool:
        return bool(self.steps) and all(s.token_probs is not None for s in self.steps)

    def has_ev_actions(self) -> bool:
        return bool(self.steps) and all(s.ev_actions is not None for s in self.steps)

    def validate(self) -> None:
        self.header.validate()
        h = self.header
        for i, step in enumerate(self.steps):
            where = f"step {step.t}"
            if step.t != i:
                raise TraceError(
                    f"{where}: step index not monotone (expected {i}, got {step.t})"
                )
            if step.action.shape != (h.action_dims,):
                raise TraceError(
                    f"{where}: action has shape {step.action.shape}, expected ({h.action_dims},)"
                )
            if not np.all(np.isfinite(step.action)):
                raise TraceError(f"{where}: action contains non-finite values")
            if step.tcp is not None:
                if step.tcp.shape != (3,):
                    raise TraceError(f"{where}: tcp must be a 3-vector")
                if not np.all(np.isfinite(step.tcp)):
                    raise TraceError(f"{where}: tcp contains non-finite values")
            if step.gripper_open is not None and not (0.0 <= step.gripper_open <= 1.0):
                raise TraceError(f"{where}: gripper_open {step.gripper_open} outside [0,1]")
            if step.ev_actions is not None:
                expected = (h.ev_samples, h.action_dims)
                if step.ev_actions.shape != expected:
                    raise TraceError(
                        f"{where}: ev_actions has shape {step.ev_actions.shape},"
                        f" expected {expected}"
                    )
            if step.token_probs is not None:
                if len(step.token_probs) != h.token_count:
                    raise TraceError(
                        f"{where}: {len(step.token_probs)} token distributions,"
                        f" expected {h.token_count}"
                    )
                for tn, dist in enumerate(step.token_probs):
                    dist.validate(f"{where}, token {tn}")
            declared = {o.object_id for o in h.objects}
            for object_id, pose in step.object_poses.items():
                if object_id not in declared:
                    raise TraceError(f"{where}: pose for undeclared object '{object_id}'")
                pose.validate(f"{where}, object '{object_id}'")
