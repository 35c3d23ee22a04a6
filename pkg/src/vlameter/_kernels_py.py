"""Pure numpy implementations of the hot per-step kernels.

The compiled extension (``vlameter._kernels``) exposes the same functions
with the same semantics; either can serve as the active backend. Keep the
two in lockstep.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def diff_abs_mean(a: np.ndarray, order: int) -> np.ndarray:
    """Mean absolute ``order``-th difference of a (T, D) sequence, per step.

    Returns a (T - order,) array; entry ``i`` is the value at step
    ``i + order``. Differences are iterated first differences, so
    order-2 on ``a`` equals order-1 on ``diff(a)`` bit for bit.
    """
    d = np.asarray(a, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError("expected a (T, D) array")
    if d.shape[0] <= order:
        raise ValueError(f"need more than {order} rows, got {d.shape[0]}")
    for _ in range(order):
        d = d[1:] - d[:-1]
    return np.abs(d).mean(axis=1)


def diff_norm(p: np.ndarray, order: int) -> np.ndarray:
    """Euclidean norm of the ``order``-th difference of a (T, 3) sequence."""
    d = np.asarray(p, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError("expected a (T, 3) array")
    if d.shape[0] <= order:
        raise ValueError(f"need more than {order} rows, got {d.shape[0]}")
    for _ in range(order):
        d = d[1:] - d[:-1]
    return np.sqrt((d * d).sum(axis=1))


def token_metrics(
    probs_list: list[np.ndarray],
    tails: np.ndarray,
    slots: np.ndarray,
    scratch: np.ndarray | None = None,
) -> tuple[float, float, float, float]:
    """Token-distribution uncertainty values for one step.

    ``probs_list[i]`` holds token i's explicit entry probabilities;
    ``tails[i]`` is its residual mass, spread uniformly over ``slots[i]``
    unlisted vocabulary ids. ``scratch`` is accepted for signature parity
    with the compiled kernel and ignored here.

    Returns ``(tp, pcs, gini, entropy)`` where each is already the per-step
    uncertainty value (max-probability complement, top-two gap complement,
    mean Gini impurity, mean Shannon entropy in nats).
    """
    tn = len(probs_list)
    if tn == 0:
        raise ValueError("no token distributions")
    sum_max = sum_gap = sum_gini = sum_ent = 0.0
    for i in range(tn):
        v = np.asarray(probs_list[i], dtype=np.float64)
        tail = float(tails[i])
        k = int(slots[i])
        tail_share = tail / k if (tail > 0.0 and k > 0) else 0.0

        if v.size == 0:
            mx = tail_share
            second = tail_share if k >= 2 else 0.0
        else:
            mx = float(v.max())
            second = float(np.partition(v, v.size - 2)[v.size - 2]) if v.size >= 2 else 0.0
            if tail_share > second:
                second = tail_share
        gap = mx - second
        if gap < 0.0:
            gap = 0.0

        sq = float(v @ v) + tail * tail_share
        pos = v[v > 0.0]
        ent = -float(pos @ np.log(pos)) if pos.size else 0.0
        if tail > 0.0:
            ent -= tail * np.log(tail_share)

        sum_max += mx
        sum_gap += gap
        sum_gini += 1.0 - sq
        sum_ent += ent
    return (
        1.0 - sum_max / tn,
        1.0 - sum_gap / tn,
        sum_gini / tn,
        sum_ent / tn,
    )


def ev_std(samples: np.ndarray) -> float:
    """Mean per-dimension population standard deviation of an (N, D) matrix.

    Dimensions where all samples agree contribute exactly 0, so repeated
    identical inferences score 0 regardless of rounding.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < 2:
        raise ValueError("expected an (N, D) matrix with N >= 2")
    constant = (s == s[0]).all(axis=0)
    mean = s.mean(axis=0)
    var = ((s - mean) ** 2).mean(axis=0)
    std = np.where(constant, 0.0, np.sqrt(var))
    return float(std.mean())
