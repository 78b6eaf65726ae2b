# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics mirror ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, ceil, M_PI

cnp.import_array()

cdef double INT_LIMIT = 4611686018427387904.0  # 2**62
cdef double EXACT_LIMIT = 4503599627370496.0  # 2**52


cdef inline double tail_survival(double n) nogil:
    # P(R1 > 2n) = C(2n, n) / 4**n, asymptotic series; exact to ~1e-26 for n >= 2**15
    cdef double x = 1.0 / n
    return (1.0 - x / 8.0 + x * x / 128.0 + 5.0 * x * x * x / 1024.0
            - 21.0 * x * x * x * x / 32768.0) / sqrt(M_PI * n)


cdef inline double invert_half_return(double u, const double[::1] surv) nogil:
    """Smallest n >= 1 with P(R1 > 2n) <= u, as a double."""
    cdef Py_ssize_t nt = surv.shape[0] - 1
    cdef Py_ssize_t lo, hi, mid
    cdef double x, g
    cdef int it
    if surv[nt] <= u:
        lo = 1
        hi = nt
        while lo < hi:
            mid = (lo + hi) >> 1
            if surv[mid] <= u:
                hi = mid
            else:
                lo = mid + 1
        return <double>lo
    # tail: Newton on log s(x) = log u, then settle on the integer boundary
    x = 1.0 / (M_PI * u * u)
    if x < nt + 1.0:
        x = nt + 1.0
    for it in range(4):
        g = log(tail_survival(x)) - log(u)
        x = x * (1.0 + 2.0 * g)
        if x < nt + 1.0:
            x = nt + 1.0
    x = ceil(x)
    if x >= EXACT_LIMIT:
        # adjacent integers no longer resolvable by the survival function
        return x
    while tail_survival(x) > u:
        x += 1.0
    while x - 1.0 > nt and tail_survival(x - 1.0) <= u:
        x -= 1.0
    return x


def first_return_times(const double[::1] u, const double[::1] surv):
    cdef Py_ssize_t i, m = u.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    cdef double n
    with nogil:
        for i in range(m):
            n = 2.0 * invert_half_return(u[i], surv)
            if n > INT_LIMIT:
                out[i] = -1
            else:
                out[i] = <long long>n
    return out


def first_return_sum(const double[::1] u, const double[::1] surv, long long cap):
    cdef Py_ssize_t i, m = u.shape[0]
    cdef long long total = 0
    cdef double n
    with nogil:
        for i in range(m):
            n = 2.0 * invert_half_return(u[i], surv)
            if n > <double>(cap - total):
                total = -1
                break
            total += <long long>n
    return total


def zext_scan(const long long[::1] ref, long long[::1] ring, long long[::1] state,
              const double[::1] u, const double[:, ::1] cum,
              const long long[:, ::1] phi, const long long[::1] letter, bint hirata):
    """Advance the streaming return-time scan by ``len(u)`` steps.

    ``ring[(pos + i) % W]`` holds the block state at n-k+i and ``letter``
    maps a block state to its first symbol; ``state`` is ``[n, S_n, pos]``.
    Returns the first return time found in this chunk, or 0.
    """
    cdef Py_ssize_t W = ring.shape[0]
    cdef Py_ssize_t k = (W - 1) // 2
    cdef Py_ssize_t A = cum.shape[1]
    cdef long long n = state[0]
    cdef long long S = state[1]
    cdef Py_ssize_t pos = state[2]
    cdef Py_ssize_t j, i, s, last, c0, c1, q
    cdef double v
    cdef bint ok
    cdef long long found = 0
    # c0, c1 index x_n and x_{n+1}; last indexes x_{n+k}
    c0 = pos + k
    if c0 >= W:
        c0 -= W
    c1 = c0 + 1
    if c1 >= W:
        c1 -= W
    last = pos - 1 if pos > 0 else W - 1
    with nogil:
        for j in range(u.shape[0]):
            S += phi[ring[c0], ring[c1]]
            v = u[j]
            s = 0
            while s < A - 1 and cum[ring[last], s] <= v:
                s += 1
            ring[pos] = s
            last = pos
            pos += 1
            if pos == W:
                pos = 0
            c0 = c1
            c1 += 1
            if c1 == W:
                c1 = 0
            n += 1
            if hirata or S == 0:
                ok = True
                q = pos
                for i in range(W):
                    if letter[ring[q]] != ref[i]:
                        ok = False
                        break
                    q += 1
                    if q == W:
                        q = 0
                if ok:
                    found = n
                    break
    state[0] = n
    state[1] = S
    state[2] = pos
    return found


def dp_step(const double[:, ::1] v, const double[:, ::1] pi, const long long[:, ::1] phi,
            const unsigned char[::1] allowed, bint accumulate, Py_ssize_t lo, Py_ssize_t hi):
    """One transition of the (state, partial sum) DP with compensated sums.

    Source columns ``lo..hi`` (inclusive) may be nonzero; shifted targets that
    fall outside the array are dropped by the caller's range bookkeeping.
    """
    cdef Py_ssize_t A = v.shape[0]
    cdef Py_ssize_t R = v.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((A, R), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] comp_arr = np.zeros((A, R), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] comp = comp_arr
    cdef Py_ssize_t a, b, s, t, d, s0, s1
    cdef double w, y, tt
    with nogil:
        for b in range(A):
            if not allowed[b]:
                continue
            for a in range(A):
                w = pi[a, b]
                if w == 0.0:
                    continue
                d = phi[a, b] if accumulate else 0
                s0 = lo
                s1 = hi
                if s0 + d < 0:
                    s0 = -d
                if s1 + d > R - 1:
                    s1 = R - 1 - d
                for s in range(s0, s1 + 1):
                    t = s + d
                    y = w * v[a, s] - comp[b, t]
                    tt = out[b, t] + y
                    comp[b, t] = (tt - out[b, t]) - y
                    out[b, t] = tt
    return out_arr
