import numpy as np
import pytest

from vlameter.model import (
    ObjectDecl,
    ObjectRole,
    Pose,
    RunTrace,
    StepRecord,
    Task,
    TokenDistribution,
    TraceHeader,
)


def make_trace(
    actions=None,
    tcp=None,
    task="pick_up",
    dt=1.0,
    gripper=None,
    token_probs=None,
    ev_actions=None,
    object_tracks=None,
    objects=None,
    run_id="test-run",
    model="",
    validate=True,
) -> RunTrace:
    """Assemble a small valid trace from raw arrays.

    Unless object data is supplied, a static target object is declared so
    the trace satisfies the per-task role requirements.
    """
    if actions is None:
        assert tcp is not None
        actions = np.zeros((len(tcp), 1))
    actions = np.asarray(actions, dtype=np.float64)
    if actions.ndim == 1:
        actions = actions[:, None]
    steps_n = len(actions)
    tcp = np.asarray(tcp, dtype=np.float64) if tcp is not None else None

    task = Task(task)
    if objects is None:
        objects = [ObjectDecl("target", ObjectRole.TARGET)]
        if task == Task.MOVE_NEAR:
            objects.append(ObjectDecl("other", ObjectRole.SECONDARY_TARGET))
        elif task in (Task.PUT_IN, Task.PUT_ON):
            objects.append(ObjectDecl("dest", ObjectRole.DESTINATION))
    if object_tracks is None:
        object_tracks = {}
        offset = 0.0
        for obj in objects:
            object_tracks[obj.object_id] = np.tile([0.5 + offset, 0.0, 0.02], (steps_n, 1))
            offset += 0.3

    header = TraceHeader(
        run_id=run_id,
        task=task,
        model=model,
        action_dims=actions.shape[1],
        dt=dt,
        token_count=len(token_probs[0]) if token_probs else 0,
        vocab_size=(token_probs[0][0].vocab_size if token_probs else 0),
        ev_samples=len(ev_actions[0]) if ev_actions is not None else 0,
        objects=objects,
    )
    steps = []
    for t in range(steps_n):
        steps.append(
            StepRecord(
                t=t,
                action=actions[t],
                tcp=tcp[t] if tcp is not None else None,
                gripper_open=float(gripper[t]) if gripper is not None else None,
                ev_actions=np.asarray(ev_actions[t], dtype=np.float64)
                if ev_actions is not None
                else None,
                token_probs=list(token_probs[t]) if token_probs else None,
                object_poses={
                    oid: Pose(position=tuple(track[t]))
                    for oid, track in object_tracks.items()
                },
            )
        )
    trace = RunTrace(header=header, steps=steps)
    if validate:
        trace.validate()
    return trace


def dense_dist(probs, vocab_size=None) -> TokenDistribution:
    """A distribution listing every probability explicitly (zero tail)."""
    probs = np.asarray(probs, dtype=np.float64)
    v = vocab_size if vocab_size is not None else len(probs)
    return TokenDistribution(np.arange(len(probs)), probs, tail_mass=0.0, vocab_size=v)


def token_trace(per_step_dists, **kwargs) -> RunTrace:
    """Trace whose only interesting channel is token distributions."""
    steps_n = len(per_step_dists)
    return make_trace(
        actions=np.zeros((steps_n, 1)), token_probs=per_step_dists, **kwargs
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
