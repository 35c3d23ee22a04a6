"""Per-step uncertainty metrics over a run trace.

Three families:

* action instability (A_PI / A_VI / A_AI): mean absolute first, second and
  third differences of the raw action vector;
* token-based (TB_TP / TB_PCS / TB_D / TB_E): max-probability complement,
  top-two gap complement, Gini impurity and Shannon entropy (nats) of the
  per-token output distributions, averaged over a step's tokens;
* execution variability (EV): mean per-dimension population standard
  deviation across repeated-inference action samples.

All are pure functions of the trace. Action instability values for steps
earlier than the difference order are undefined and excluded.
"""

from __future__ import annotations

import numpy as np

from .backend import get_backend
from .model import RunTrace, StepRecord
from .series import MetricSeries, SeriesUndefinedError


def _action_instability(trace: RunTrace, metric_id: str, order: int, backend) -> MetricSeries:
    if len(trace) < order + 1:
        raise SeriesUndefinedError(
            f"{metric_id} needs at least {order + 1} steps, trace has {len(trace)}"
        )
    kernels = get_backend() if backend is None else backend
    data = kernels.diff_abs_mean(trace.actions(), order)
    return MetricSeries(metric_id, valid_from=order, data=data)


def a_pi(trace: RunTrace, backend=None) -> MetricSeries:
    """Mean absolute per-step action change (first difference)."""
    return _action_instability(trace, "A_PI", 1, backend)


def a_vi(trace: RunTrace, backend=None) -> MetricSeries:
    """Mean absolute change of action velocity (second difference)."""
    return _action_instability(trace, "A_VI", 2, backend)


def a_ai(trace: RunTrace, backend=None) -> MetricSeries:
    """Mean absolute change of action acceleration (third difference)."""
    return _action_instability(trace, "A_AI", 3, backend)


def step_token_args(step: StepRecord):
    """Kernel inputs for one step's token distributions (no copies)."""
    dists = step.token_probs
    assert dists is not None
    probs_list = [d.probs for d in dists]
    tails = np.array([d.tail_mass for d in dists], dtype=np.float64)
    slots = np.array([d.unlisted_slots for d in dists], dtype=np.int64)
    return probs_list, tails, slots


def _token_series(trace: RunTrace, backend) -> dict[str, MetricSeries]:
    if not trace.has_token_probs() or trace.header.token_count == 0:
        raise SeriesUndefinedError("token probabilities are not recorded in this trace")
    kernels = get_backend() if backend is None else backend
    tp = np.empty(len(trace))
    pcs = np.empty(len(trace))
    gini = np.empty(len(trace))
    ent = np.empty(len(trace))
    scratch = np.empty(max(trace.header.vocab_size, 1))
    for i, step in enumerate(trace.steps):
        tp[i], pcs[i], gini[i], ent[i] = kernels.token_metrics(
            *step_token_args(step), scratch
        )
    return {
        "TB_TP": MetricSeries("TB_TP", 0, tp),
        "TB_PCS": MetricSeries("TB_PCS", 0, pcs),
        "TB_D": MetricSeries("TB_D", 0, gini),
        "TB_E": MetricSeries("TB_E", 0, ent),
    }


def tb_tp(trace: RunTrace, backend=None) -> MetricSeries:
    """One minus the mean maximum token probability."""
    return _token_series(trace, backend)["TB_TP"]


def tb_pcs(trace: RunTrace, backend=None) -> MetricSeries:
    """One minus the mean gap between the two most probable tokens."""
    return _token_series(trace, backend)["TB_PCS"]


def tb_d(trace: RunTrace, backend=None) -> MetricSeries:
    """Mean Gini impurity of the token distributions."""
    return _token_series(trace, backend)["TB_D"]


def tb_e(trace: RunTrace, backend=None) -> MetricSeries:
    """Mean Shannon entropy (nats) of the token distributions."""
    return _token_series(trace, backend)["TB_E"]


def token_metric_series(trace: RunTrace, backend=None) -> dict[str, MetricSeries]:
    """All four token metrics in one pass over the trace."""
    return _token_series(trace, backend)


def ev(trace: RunTrace, backend=None) -> MetricSeries:
    """Spread of repeated-inference actions: mean per-dimension population std."""
    if not trace.has_ev_actions() or trace.header.ev_samples < 2:
        raise SeriesUndefinedError(
            "repeated-inference samples absent or fewer than 2 per step"
        )
    kernels = get_backend() if backend is None else backend
    data = np.empty(len(trace))
    for i, step in enumerate(trace.steps):
        data[i] = kernels.ev_std(step.ev_actions)
    return MetricSeries("EV", 0, data)
