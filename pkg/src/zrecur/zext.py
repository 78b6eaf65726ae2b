"""Monte Carlo for the Z-extension ``T(x, l) = (shift x, l + phi(x))``.

A stationary two-sided trajectory is realised lazily: ``x_0 ~ p``, forward
steps use ``pi`` and backward steps the reversed kernel. The forward uniform
with index ``j`` produces ``x_j`` and the backward uniform ``j`` produces
``x_{-j-1}``, so a trajectory is a pure function of its two streams and can
be replayed by the streaming scan without storing it.

Return times compare letters (the first symbol of each block state) on the
window ``|i| <= k``, i.e. ``d(shift^n x, x) < e^{-k}``.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gibbs import GibbsMarkov, StepFunction, word_measure
from .streams import stream

FIRST_CHUNK = 4096
MAX_CHUNK = 1 << 20


def cumulative_rows(P: np.ndarray) -> np.ndarray:
    """Row CDFs for inverse sampling; exactly 1.0 from the last allowed entry on."""
    P = np.atleast_2d(P)
    cum = np.cumsum(P, axis=1)
    for a in range(P.shape[0]):
        last = np.flatnonzero(P[a] > 0)[-1]
        cum[a, last:] = 1.0
    return np.ascontiguousarray(cum)


def _draw(cum_row: np.ndarray, v: float) -> int:
    return min(int(np.searchsorted(cum_row, v, side="right")), cum_row.shape[0] - 1)


class TwoSidedTrajectory:
    """Lazily extended stationary realisation of the Gibbs-Markov chain.

    ``forward[j]`` is ``x_j`` (block states) and ``backward[j]`` is ``x_{-j-1}``.
    """

    def __init__(self, g: GibbsMarkov, step: StepFunction, seed: int, key: tuple = ()):
        self.g, self.step = g, step
        self.seed, self.key = seed, tuple(key)
        self._fwd_rng = stream(seed, *self.key, 0)
        self._bwd_rng = stream(seed, *self.key, 1)
        self._cum = cumulative_rows(g.transitions)
        self._cum_rev = cumulative_rows(g.reversed_transitions)
        self.forward = np.array([_draw(np.cumsum(g.stationary), self._fwd_rng.random())], dtype=np.int64)
        self.backward = np.empty(0, dtype=np.int64)

    def forward_generator(self) -> np.random.Generator:
        """A fresh copy of the forward stream, positioned at uniform 0."""
        return stream(self.seed, *self.key, 0)

    def extend_forward(self, n: int) -> None:
        """Make ``x_0 .. x_n`` available."""
        have = self.forward.shape[0]
        if n < have:
            return
        u = self._fwd_rng.random(n + 1 - have)
        out = np.empty(n + 1, dtype=np.int64)
        out[:have] = self.forward
        for i, v in enumerate(u):
            out[have + i] = _draw(self._cum[out[have + i - 1]], v)
        self.forward = out

    def extend_backward(self, m: int) -> None:
        """Make ``x_{-1} .. x_{-m}`` available."""
        have = self.backward.shape[0]
        if m <= have:
            return
        u = self._bwd_rng.random(m - have)
        out = np.empty(m, dtype=np.int64)
        out[:have] = self.backward
        prev = self.backward[-1] if have else self.forward[0]
        for i, v in enumerate(u):
            prev = out[have + i] = _draw(self._cum_rev[prev], v)
        self.backward = out

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Block states ``x_lo .. x_hi``."""
        if lo < 0:
            self.extend_backward(-lo)
        self.extend_forward(max(hi, 0))
        full = np.concatenate([self.backward[::-1], self.forward])
        off = self.backward.shape[0]
        return full[off + lo: off + hi + 1]

    def letters(self, lo: int, hi: int) -> np.ndarray:
        return letter_map(self.g)[self.window(lo, hi)]

    def birkhoff(self, n: int) -> np.ndarray:
        """``S_0 .. S_n``."""
        self.extend_forward(n)
        x = self.forward[: n + 1]
        return np.concatenate([[0], np.cumsum(self.step.table[x[:-1], x[1:]])])


def letter_map(g: GibbsMarkov) -> np.ndarray:
    return np.array([s[0] for s in g.states], dtype=np.int64)


def letter_measure(g: GibbsMarkov, letters) -> float:
    """``nu`` of a letter cylinder, through the block-state encoding."""
    letters = [int(a) for a in letters]
    width = g.depth - 1
    if len(letters) >= width:
        return word_measure(g, g.encode(letters))
    return float(sum(word_measure(g, (i,)) for i, s in enumerate(g.states) if s[:len(letters)] == tuple(letters)))


@dataclass(frozen=True)
class ReturnSample:
    k: int
    tau: int
    cylinder_prob: float
    censored: bool
    steps_used: int


def _scan(t: TwoSidedTrajectory, k: int, step_cap: int, hirata: bool) -> ReturnSample:
    if k < 1:
        raise ValueError("k must be >= 1")
    if step_cap <= 0:
        raise ValueError("step_cap must be positive")
    ring = np.ascontiguousarray(t.window(-k, k), dtype=np.int64)
    letter = letter_map(t.g)
    ref = np.ascontiguousarray(letter[ring])
    prob = letter_measure(t.g, ref)
    state = np.zeros(3, dtype=np.int64)
    gen = t.forward_generator()
    gen.random(k + 1)  # uniforms behind x_0 .. x_k
    phi = np.ascontiguousarray(t.step.table, dtype=np.int64)
    chunk = FIRST_CHUNK
    while state[0] < step_cap:
        m = int(min(chunk, step_cap - state[0]))
        found = kernels.zext_scan(ref, ring, state, gen.random(m), t._cum, phi, letter, hirata)
        if found:
            return ReturnSample(k, int(found), prob, False, int(found))
        chunk = min(chunk * 2, MAX_CHUNK)
    return ReturnSample(k, int(step_cap), prob, True, int(state[0]))


def tau_epsilon(t: TwoSidedTrajectory, k: int, step_cap: int) -> ReturnSample:
    """First ``n >= 1`` with ``S_n = 0`` and ``x_{n+i} = x_i`` for ``|i| <= k``.

    Censored at ``step_cap`` (then ``tau == step_cap`` and ``censored``).
    """
    return _scan(t, k, step_cap, hirata=False)


def hirata_return(t: TwoSidedTrajectory, k: int, step_cap: int) -> ReturnSample:
    """First return of the base point to its own ``(2k+1)``-window, ignoring the fibre."""
    return _scan(t, k, step_cap, hirata=True)


def brute_force_tau(t: TwoSidedTrajectory, k: int, horizon: int, hirata: bool = False) -> int | None:
    """n-by-n reference scan on a materialised trajectory; None if beyond ``horizon``."""
    letters = t.letters(-k, horizon + k)
    S = t.birkhoff(horizon)
    ref = letters[: 2 * k + 1]
    for n in range(1, horizon + 1):
        if (hirata or S[n] == 0) and np.array_equal(letters[n: n + 2 * k + 1], ref):
            return n
    return None


@dataclass
class TauTable:
    k: int
    index: np.ndarray
    tau: np.ndarray
    cylinder_prob: np.ndarray
    censored: np.ndarray
    step_cap: np.ndarray

    @property
    def censored_fraction(self) -> float:
        return float(self.censored.mean()) if self.censored.size else 0.0


def _sample_job(args):
    g, step, seed, tag, k, indices, step_cap, scaled_cap, hirata = args
    out = []
    for i in indices:
        t = TwoSidedTrajectory(g, step, seed, (tag, k, i))
        cap = step_cap
        if scaled_cap is not None:
            # nu * sqrt(tau) >= scaled_cap is all that matters beyond this point
            prob = letter_measure(g, t.letters(-k, k))
            cap = int(min(step_cap, math.ceil((scaled_cap / prob) ** 2)))
        s = _scan(t, k, cap, hirata)
        out.append((i, s.tau, s.cylinder_prob, s.censored, cap))
    return out


def default_workers() -> int:
    return max(1, int(os.environ.get("ZRECUR_WORKERS", "1")))


def run_tau_experiment(g: GibbsMarkov, step: StepFunction, k_list, n_samples: int, step_cap,
                       seed: int, workers: int | None = None, hirata: bool = False,
                       scaled_cap: float | None = None, stream_tag: int = 0,
                       check_arithmetic: bool = True) -> dict[int, TauTable]:
    """Independent return-time samples for each ``k``.

    Sample ``i`` at radius ``k`` uses streams ``(seed, stream_tag, k, i, 0|1)``,
    so the output does not depend on ``workers``. ``step_cap`` is an integer
    or a mapping ``k -> cap``. With ``scaled_cap`` each sample is only followed
    until ``nu(C_k) sqrt(tau)`` is known to exceed it.
    """
    if check_arithmetic and not hirata:
        from .spectral import nonarithmeticity_scan
        if not nonarithmeticity_scan(g, step, 256).nonarithmetic:
            warnings.warn("step function failed the nonarithmeticity scan", RuntimeWarning, stacklevel=2)
    workers = workers or default_workers()
    tables = {}
    for k in k_list:
        cap = int(step_cap[k] if isinstance(step_cap, dict) else step_cap)
        chunks = [list(range(j, n_samples, workers)) for j in range(workers)]
        jobs = [(g, step, seed, stream_tag, k, c, cap, scaled_cap, hirata) for c in chunks if c]
        if workers == 1:
            rows = _sample_job(jobs[0]) if jobs else []
        else:
            with ProcessPoolExecutor(workers) as pool:
                rows = [r for part in pool.map(_sample_job, jobs) for r in part]
        rows.sort(key=lambda r: r[0])
        arr = list(zip(*rows)) if rows else [[]] * 5
        tables[k] = TauTable(k, np.array(arr[0], dtype=np.int64), np.array(arr[1], dtype=np.int64),
                             np.array(arr[2], dtype=float), np.array(arr[3], dtype=bool),
                             np.array(arr[4], dtype=np.int64))
    return tables


def write_tau_csv(path, tables: dict[int, TauTable], comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_index", "k", "tau", "censored", "cyl_prob"])
        for k, tab in tables.items():
            for i, tau, c, p in zip(tab.index, tab.tau, tab.censored, tab.cylinder_prob):
                w.writerow([int(i), k, int(tau), int(c), repr(float(p))])
