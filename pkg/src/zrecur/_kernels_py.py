"""Numpy implementations of the inner loops.

Used when the compiled extension is unavailable or ``ZRECUR_PURE_PYTHON`` is
set. Every function returns bit-identical results to its counterpart in
``_kernels.pyx`` for the same inputs.
"""

from __future__ import annotations

import numpy as np

INT_LIMIT = float(2**62)
EXACT_LIMIT = float(2**52)


def tail_survival(n):
    x = 1.0 / n
    return (1.0 - x / 8.0 + x * x / 128.0 + 5.0 * x * x * x / 1024.0
            - 21.0 * x * x * x * x / 32768.0) / np.sqrt(np.pi * n)


def _invert_tail(u: float, nt: int) -> float:
    x = max(1.0 / (np.pi * u * u), nt + 1.0)
    for _ in range(4):
        g = np.log(tail_survival(x)) - np.log(u)
        x = max(x * (1.0 + 2.0 * g), nt + 1.0)
    x = float(np.ceil(x))
    if x >= EXACT_LIMIT:
        # adjacent integers no longer resolvable by the survival function
        return x
    while tail_survival(x) > u:
        x += 1.0
    while x - 1.0 > nt and tail_survival(x - 1.0) <= u:
        x -= 1.0
    return x


def _half_returns(u: np.ndarray, surv: np.ndarray) -> np.ndarray:
    nt = surv.shape[0] - 1
    # surv[1:] is decreasing; the count of entries > u is n - 1
    rev = surv[:0:-1]
    half = (nt - np.searchsorted(rev, u, side="right")).astype(np.float64) + 1.0
    tail = u < surv[nt]
    for i in np.flatnonzero(tail):
        half[i] = _invert_tail(float(u[i]), nt)
    return half


def first_return_times(u: np.ndarray, surv: np.ndarray) -> np.ndarray:
    n = 2.0 * _half_returns(np.asarray(u, dtype=np.float64), surv)
    out = np.where(n > INT_LIMIT, -1.0, n)
    return out.astype(np.int64)


def first_return_sum(u: np.ndarray, surv: np.ndarray, cap: int) -> int:
    n = 2.0 * _half_returns(np.asarray(u, dtype=np.float64), surv)
    if np.any(n > cap):
        return -1
    r = n.astype(np.int64)
    if r.size == 0:
        return 0
    # cap <= 2**62 and every term <= cap, so the cap is crossed before any wrap
    csum = np.cumsum(r)
    if np.any(csum > cap) or np.any(csum < 0):
        return -1
    return int(csum[-1])


def _compose_prefix(maps: np.ndarray) -> np.ndarray:
    """Inclusive prefix compositions F_j = f_j o ... o f_0 of state maps."""
    F = maps.copy()
    d = 1
    L = F.shape[0]
    while d < L:
        F[d:] = np.take_along_axis(F[d:], F[:-d], axis=1)
        d <<= 1
    return F


def zext_scan(ref, ring, state, u, cum, phi, letter, hirata):
    W = ring.shape[0]
    k = (W - 1) // 2
    A = cum.shape[1]
    n, S, pos = int(state[0]), int(state[1]), int(state[2])
    L = u.shape[0]
    window = np.roll(ring, -pos)
    if L == 0:
        return 0
    # next-symbol map for every uniform and every current state
    maps = np.minimum((u[:, None, None] >= cum[None, :, :]).sum(axis=2), A - 1)
    F = _compose_prefix(maps)
    new = F[:, window[-1]]
    seq = np.concatenate([window, new])
    incr = phi[seq[k:k + L], seq[k + 1:k + 1 + L]]
    sums = S + np.cumsum(incr)
    cand = np.arange(L) if hirata else np.flatnonzero(sums == 0)
    found = 0
    stop = L
    if cand.size:
        views = np.lib.stride_tricks.sliding_window_view(seq, W)
        hits = np.flatnonzero((letter[views[cand + 1]] == ref).all(axis=1))
        if hits.size:
            j = int(cand[hits[0]])
            stop = j + 1
            found = n + stop
    window = seq[stop:stop + W]
    ring[:] = window
    state[0] = n + stop
    state[1] = int(sums[stop - 1])
    state[2] = 0
    return found


def dp_step(v, pi, phi, allowed, accumulate, lo, hi):
    A, R = v.shape
    out = np.zeros((A, R))
    comp = np.zeros((A, R))
    for b in range(A):
        if not allowed[b]:
            continue
        for a in range(A):
            w = pi[a, b]
            if w == 0.0:
                continue
            d = int(phi[a, b]) if accumulate else 0
            s0 = max(lo, -d)
            s1 = min(hi, R - 1 - d)
            if s1 < s0:
                continue
            src = v[a, s0:s1 + 1]
            t0, t1 = s0 + d, s1 + d + 1
            y = w * src - comp[b, t0:t1]
            tt = out[b, t0:t1] + y
            comp[b, t0:t1] = (tt - out[b, t0:t1]) - y
            out[b, t0:t1] = tt
    return out
