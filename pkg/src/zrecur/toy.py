"""Toy recurrence model: a simple symmetric walk carrying i.i.d. uniform marks.

The walk ``S_n`` on Z returns to 0 at the times ``R_1 < R_2 < ...``; at each
return a fresh uniform point ``Y`` of (0,1)^d is drawn, and ``tau_eps`` is the
first return whose mark falls in the ball ``B(Y_0, eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np

from . import kernels
from .streams import stream

TABLE_HALF_LENGTH = 2**15  # the CDF table covers R1 <= 2**16
INT_CAP = 2**62
MAX_REJECTIONS = 10_000


@lru_cache(maxsize=None)
def survival_table(half_length: int = TABLE_HALF_LENGTH) -> np.ndarray:
    """``surv[n] = P(R1 > 2n) = C(2n, n) / 4**n`` for ``n = 0..half_length``."""
    n = np.arange(1, half_length + 1, dtype=np.float64)
    surv = np.empty(half_length + 1)
    surv[0] = 1.0
    surv[1:] = np.cumprod((2.0 * n - 1.0) / (2.0 * n))
    surv.flags.writeable = False
    return surv


def first_return_pmf(n: int) -> Fraction:
    """Exact ``P(R1 = 2n) = C(2n, n) / ((2n - 1) 4**n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Fraction(math.comb(2 * n, n), (2 * n - 1) * 4**n)


def _uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    # (0, 1]: U = 0 would mean an infinite return time
    return 1.0 - rng.random(size)


def sample_first_return(rng: np.random.Generator, size: int | None = None):
    """Exact draw(s) of the first return time to 0 of the simple symmetric walk.

    Inverse-CDF sampling on the table of ``P(R1 > 2n)`` with an asymptotic
    inversion beyond it. Draws larger than ``2**62`` raise ``OverflowError``.
    """
    m = 1 if size is None else size
    r = kernels.first_return_times(_uniforms(rng, m), survival_table())
    if np.any(r < 0):
        raise OverflowError("first return time exceeds 2**62")
    return int(r[0]) if size is None else r


def sample_r_n(n: int, rng: np.random.Generator) -> int:
    """``R_n``, the n-th return time, as a sum of ``n`` independent first returns."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = kernels.first_return_sum(_uniforms(rng, n), survival_table(), INT_CAP)
    if total < 0:
        raise OverflowError(f"R_{n} exceeds 2**62; accumulator would wrap")
    return total


def sample_r_n_batch(n: int, n_samples: int, seed: int) -> np.ndarray:
    """``n_samples`` draws of ``R_n``, sample ``i`` on stream ``(seed, i)``."""
    return np.array([sample_r_n(n, stream(seed, i)) for i in range(n_samples)], dtype=np.int64)


def simulate_walk_until_return(rng: np.random.Generator, step_cap: int) -> int | None:
    """Step-by-step walk until it first revisits 0; ``None`` when censored.

    Only used to cross-check :func:`sample_first_return`.
    """
    if step_cap <= 0:
        raise ValueError("step_cap must be positive")
    pos, t, chunk = 0, 0, 64
    while t < step_cap:
        m = min(chunk, step_cap - t)
        path = pos + np.cumsum(rng.integers(0, 2, size=m) * 2 - 1)
        zeros = np.flatnonzero(path == 0)
        if zeros.size:
            return t + int(zeros[0]) + 1
        pos = int(path[-1])
        t += m
        chunk = min(chunk * 2, 1 << 20)
    return None


def unit_ball_volume(dim: int, norm: str = "euclidean") -> float:
    if norm == "max":
        return 2.0**dim
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


@dataclass(frozen=True)
class ToyConfig:
    dim: int
    eps: float
    mode: Literal["idealized", "faithful"] = "idealized"
    norm: Literal["euclidean", "max"] = "euclidean"
    ball_constant: float = field(init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        if self.mode not in ("idealized", "faithful"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.norm not in ("euclidean", "max"):
            raise ValueError(f"unknown norm {self.norm!r}")
        object.__setattr__(self, "ball_constant", unit_ball_volume(self.dim, self.norm))
        if self.hit_probability >= 1:
            raise ValueError("eps too large: c * eps**d must be < 1")

    @property
    def hit_probability(self) -> float:
        """``lambda_eps = c eps^d``, the chance a fresh mark lands in the ball."""
        return self.ball_constant * self.eps**self.dim


@dataclass(frozen=True)
class TauSample:
    tau: int
    t_count: int
    r_total: int
    censored: bool


def _draw_center(config: ToyConfig, rng: np.random.Generator) -> np.ndarray:
    lo, hi = config.eps, 1.0 - config.eps
    for _ in range(MAX_REJECTIONS):
        y0 = rng.random(config.dim)
        if np.all((y0 >= lo) & (y0 <= hi)):
            return y0
    raise RuntimeError("could not place B(Y0, eps) inside (0,1)^d")


def _faithful_hit_count(config: ToyConfig, rng: np.random.Generator) -> int:
    y0 = _draw_center(config, rng)
    chunk = max(64, int(4.0 / config.hit_probability))
    seen = 0
    while True:
        y = rng.random((chunk, config.dim))
        if config.norm == "max":
            inside = np.max(np.abs(y - y0), axis=1) < config.eps
        else:
            inside = np.sum((y - y0) ** 2, axis=1) < config.eps**2
        hits = np.flatnonzero(inside)
        if hits.size:
            return seen + int(hits[0]) + 1
        seen += chunk


def sample_tau(config: ToyConfig, rng: np.random.Generator, step_cap: int) -> TauSample:
    """Draw ``tau_eps = R_{T_eps}`` for the toy model.

    Idealized mode draws ``T_eps ~ Geometric(c eps^d)`` directly; faithful mode
    draws ``Y_0`` with its ball inside the cube and tests a fresh uniform mark
    at every return. ``tau`` beyond ``step_cap`` is reported censored at the cap.
    """
    if step_cap <= 0:
        raise ValueError("step_cap must be positive")
    step_cap = min(int(step_cap), INT_CAP)
    if config.mode == "idealized":
        t = int(rng.geometric(config.hit_probability))
    else:
        t = _faithful_hit_count(config, rng)
    # each excursion lasts >= 2 steps
    if 2 * t > step_cap:
        return TauSample(step_cap, t, step_cap, True)
    total = kernels.first_return_sum(_uniforms(rng, t), survival_table(), step_cap)
    if total < 0:
        return TauSample(step_cap, t, step_cap, True)
    return TauSample(total, t, total, False)


def tau_batch(config: ToyConfig, n_samples: int, seed: int, step_cap: int,
              stream_tag: int = 0) -> list[TauSample]:
    """Independent ``tau`` draws; sample ``i`` uses stream ``(seed, stream_tag, i)``."""
    return [sample_tau(config, stream(seed, stream_tag, i), step_cap) for i in range(n_samples)]
