# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the kernels in ``_kernels_py``. Same contracts."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log, sqrt

cnp.import_array()

BACKEND_NAME = "cython"


def diff_abs_mean(a, int order):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.array(a, dtype=np.float64, order="C")
    if w.ndim != 2:
        raise ValueError("expected a (T, D) array")
    cdef Py_ssize_t T = w.shape[0]
    cdef Py_ssize_t D = w.shape[1]
    if T <= order:
        raise ValueError(f"need more than {order} rows, got {T}")
    cdef Py_ssize_t k, t, d
    cdef double[:, ::1] buf = w
    for k in range(order):
        for t in range(T - 1 - k):
            for d in range(D):
                buf[t, d] = buf[t + 1, d] - buf[t, d]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(T - order, dtype=np.float64)
    cdef double acc
    for t in range(T - order):
        acc = 0.0
        for d in range(D):
            acc += fabs(buf[t, d])
        out[t] = acc / D
    return out


def diff_norm(p, int order):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.array(p, dtype=np.float64, order="C")
    if w.ndim != 2:
        raise ValueError("expected a (T, 3) array")
    cdef Py_ssize_t T = w.shape[0]
    cdef Py_ssize_t D = w.shape[1]
    if T <= order:
        raise ValueError(f"need more than {order} rows, got {T}")
    cdef Py_ssize_t k, t, d
    cdef double[:, ::1] buf = w
    for k in range(order):
        for t in range(T - 1 - k):
            for d in range(D):
                buf[t, d] = buf[t + 1, d] - buf[t, d]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(T - order, dtype=np.float64)
    cdef double acc
    for t in range(T - order):
        acc = 0.0
        for d in range(D):
            acc += buf[t, d] * buf[t, d]
        out[t] = sqrt(acc)
    return out


def token_metrics(probs_list, tails, slots, scratch=None):
    cdef double[::1] tl = np.ascontiguousarray(tails, dtype=np.float64)
    cdef cnp.int64_t[::1] sl = np.ascontiguousarray(slots, dtype=np.int64)
    cdef Py_ssize_t tn = len(probs_list)
    if tn == 0:
        raise ValueError("no token distributions")
    arrays = [np.ascontiguousarray(p, dtype=np.float64) for p in probs_list]
    cdef Py_ssize_t max_len = 0
    for arr in arrays:
        if (<object> arr).shape[0] > max_len:
            max_len = (<object> arr).shape[0]
    # scratch for the vectorized log pass (callers reuse one buffer across
    # steps to avoid allocator churn); zeros give -inf but are handled
    if scratch is None or (<object> scratch).shape[0] < max_len:
        scratch = np.empty(max(max_len, 1))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s_arr = scratch
    cdef double sum_max = 0.0, sum_gap = 0.0, sum_gini = 0.0, sum_ent = 0.0
    cdef double mx, second, tail, tail_share, sq, ent, x, gap
    cdef Py_ssize_t i, j, n, k, nb, start
    cdef double[::1] v, logs
    with np.errstate(divide="ignore"):
        for i in range(tn):
            varr = arrays[i]
            n = (<object> varr).shape[0]
            tail = tl[i]
            k = sl[i]
            tail_share = tail / k if (tail > 0.0 and k > 0) else 0.0
            mx = 0.0
            second = 0.0
            sq = 0.0
            ent = 0.0
            if n == 0:
                mx = tail_share
                second = tail_share if k >= 2 else 0.0
            else:
                # entropy and sum of squares as BLAS dots over the slice
                # while it is cache-hot from the log pass
                chunk = s_arr[:n]
                np.log(varr, out=chunk)
                ent = -np.dot(varr, chunk)
                if ent != ent:  # nan: zero entries hit 0 * -inf, redo exactly
                    v = varr
                    logs = s_arr
                    ent = 0.0
                    for j in range(n):
                        x = v[j]
                        if x > 0.0:
                            ent -= x * logs[j]
                sq = np.dot(varr, varr)
                v = varr
                if n >= 4096:
                    # blocked top-two: SIMD per-block maxima, then an exact
                    # merge (second best lives in the winning block, in the
                    # remainder, or is another block's maximum)
                    nb = n // 1024
                    bmax = varr[: nb * 1024].reshape(nb, 1024).max(axis=1)
                    start = <Py_ssize_t> np.argmax(bmax) * 1024
                    for j in range(start, start + 1024):
                        x = v[j]
                        if x > second:
                            if x > mx:
                                second = mx
                                mx = x
                            else:
                                second = x
                    for j in range(nb * 1024, n):
                        x = v[j]
                        if x > second:
                            if x > mx:
                                second = mx
                                mx = x
                            else:
                                second = x
                    if nb > 1:
                        bmax[start // 1024] = -np.inf
                        x = bmax.max()
                        if x > second:
                            if x > mx:
                                second = mx
                                mx = x
                            else:
                                second = x
                else:
                    for j in range(n):  # top-two scan; common path: 1 compare
                        x = v[j]
                        if x > second:
                            if x > mx:
                                second = mx
                                mx = x
                            else:
                                second = x
                if tail_share > second:
                    second = tail_share
            sq += tail * tail_share
            if tail > 0.0:
                ent -= tail * log(tail_share)
            gap = mx - second
            if gap < 0.0:
                gap = 0.0
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


def ev_std(samples):
    cdef double[:, ::1] s = np.ascontiguousarray(samples, dtype=np.float64)
    cdef Py_ssize_t N = s.shape[0]
    cdef Py_ssize_t D = s.shape[1]
    if N < 2:
        raise ValueError("expected an (N, D) matrix with N >= 2")
    cdef double total = 0.0
    cdef double mean, var, dev
    cdef Py_ssize_t n, d
    cdef bint constant
    for d in range(D):
        constant = True
        for n in range(1, N):
            if s[n, d] != s[0, d]:
                constant = False
                break
        if constant:
            continue
        mean = 0.0
        for n in range(N):
            mean += s[n, d]
        mean /= N
        var = 0.0
        for n in range(N):
            dev = s[n, d] - mean
            var += dev * dev
        var /= N
        total += sqrt(var)
    return total / D
