"""Reference limit laws, censored empirical CDFs, KS distances and identity checks.

Closed forms used below, with ``Phi`` the standard normal CDF:

* ``s E / |N|``:  ``F(t) = 1 - 2 exp(x^2 / 2) (1 - Phi(x))`` with ``x = t / s``,
  which equals ``1 - erfcx(x / sqrt 2)``; erfcx keeps it stable for large t.
* ``N^{-2}`` (Levy with index 1/2):  ``F(t) = 2 (1 - Phi(1 / sqrt t)) = erfc(1 / sqrt(2 t))``.
* ``Exp(1)``:  ``1 - exp(-t)``.
* ``N(0, v)``:  ``Phi(t / sqrt v)``.

``Phi`` comes from ``scipy.special.ndtr``, which is accurate to double
precision in both tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats

from .streams import stream


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExpOverAbsNormal:
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        x = np.maximum(t, 0.0) / (self.scale * math.sqrt(2.0))
        return np.where(t > 0, 1.0 - special.erfcx(x), 0.0)

    def sample(self, rng, size):
        return self.scale * rng.standard_exponential(size) / np.abs(rng.standard_normal(size))


@dataclass(frozen=True)
class InverseNormalSquared:
    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t > 0, special.erfc(1.0 / np.sqrt(2.0 * np.maximum(t, 1e-300))), 0.0)

    def sample(self, rng, size):
        return 1.0 / rng.standard_normal(size) ** 2


@dataclass(frozen=True)
class ExponentialMeanOne:
    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-np.maximum(t, 0.0)), 0.0)

    def sample(self, rng, size):
        return rng.standard_exponential(size)


@dataclass(frozen=True)
class Gaussian:
    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    def cdf(self, t):
        return special.ndtr(np.asarray(t, dtype=float) / math.sqrt(self.variance))

    def sample(self, rng, size):
        return math.sqrt(self.variance) * rng.standard_normal(size)


ReferenceLaw = ExpOverAbsNormal | InverseNormalSquared | ExponentialMeanOne | Gaussian


def cdf(law: ReferenceLaw, t):
    out = law.cdf(t)
    return float(out) if np.ndim(out) == 0 else out


def median_exp_over_abs_normal() -> float:
    """Median of ``E / |N|``, about 1.0876."""
    return float(optimize.brentq(lambda t: ExpOverAbsNormal(1.0).cdf(t) - 0.5, 1e-3, 1e3, xtol=1e-15))


# empirical distributions and KS

@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample; values at or above ``censor_threshold`` are only known to be there."""

    samples: np.ndarray
    censor_threshold: float | None = None

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_censored(cls, values, censored, threshold: float | None = None):
        """Censored entries are placed at ``+inf``; the threshold defaults to the smallest of them."""
        values = np.asarray(values, dtype=float).copy()
        censored = np.asarray(censored, dtype=bool)
        if threshold is None and censored.any():
            threshold = float(values[censored].min())
        values[censored] = np.inf
        return cls(values, threshold)

    @property
    def n(self) -> int:
        return int(self.samples.shape[0])

    @property
    def censored_fraction(self) -> float:
        if self.censor_threshold is None:
            return 0.0
        return float(np.mean(self.samples >= self.censor_threshold))

    def quantile(self, q: float) -> float:
        """Lower empirical quantile; raises if it falls into the censored mass."""
        i = max(0, math.ceil(q * self.n) - 1)
        v = float(self.samples[i])
        if self.censor_threshold is not None and v >= self.censor_threshold:
            raise ValueError(f"quantile {q} is censored")
        return v

    def median(self) -> float:
        return float(np.median(self.samples)) if self.censor_threshold is None else self.quantile(0.5)


@dataclass(frozen=True)
class KSReport:
    statistic: float
    n: int
    threshold: float | None
    n_used: int
    verdict: bool | None = None

    def as_record(self) -> dict:
        return {"statistic": self.statistic, "n": self.n, "threshold": self.threshold,
                "n_used": self.n_used, "verdict": self.verdict}


def ks_distance(emp: EmpiricalDistribution, law: ReferenceLaw, tolerance: float | None = None) -> KSReport:
    """Sup distance between the empirical CDF and ``law``.

    With a censor threshold the supremum runs over ``t < threshold`` only; the
    empirical CDF keeps the full sample size as denominator (no
    renormalisation), so censored mass simply never enters.
    """
    n = emp.n
    if n == 0:
        raise ValueError("empty sample")
    x = emp.samples
    thr = emp.censor_threshold
    if thr is not None:
        x = x[x < thr]
    m = x.shape[0]
    F = np.asarray(law.cdf(x), dtype=float)
    i = np.arange(1, m + 1)
    d = 0.0
    if m:
        d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    if thr is not None and np.isfinite(thr):
        d = max(d, abs(float(law.cdf(thr)) - m / n))
    verdict = None if tolerance is None else d <= tolerance
    return KSReport(d, n, thr, m, verdict)


def fit_scale_median(emp: EmpiricalDistribution) -> float:
    """One-parameter fit of ``s`` in ``s E / |N|`` by matching medians."""
    return emp.median() / median_exp_over_abs_normal()


@dataclass(frozen=True)
class Regression:
    slope: float
    intercept: float
    r2: float


def exponent_regression(x, y) -> Regression:
    """Least squares of ``y`` on ``x`` (typically log median tau against -log eps)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 3:
        raise ValueError("need at least 3 points")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissae")
    res = stats.linregress(x, y)
    return Regression(float(res.slope), float(res.intercept), float(res.rvalue**2))


@dataclass(frozen=True)
class FluctuationReport:
    ks: float
    variance_ratio: float
    mean_over_se: float
    n: int
    robust_variance_ratio: float
    censored: float


Z90 = float(special.ndtri(0.9))


def fluctuation_test(tau, k: int, d: float, sigma2_h: float, censored=None) -> FluctuationReport:
    """Compare ``(log sqrt tau - k d) / sqrt k`` with ``N(0, 2 sigma_h^2)``.

    Censored samples sit at ``+inf``. Moments are then undefined (reported as
    nan); the robust variance estimate ``((q50 - q10) / z_0.9)^2`` only looks
    at the lower half and survives censoring below 50%, which is what makes a
    trend across k observable.
    """
    if not sigma2_h > 1e-12:
        raise ValueError("sigma_h^2 = 0: the measure is of maximal entropy, where the "
                         "fluctuation limit does not apply")
    z = (0.5 * np.log(np.asarray(tau, dtype=float)) - k * d) / math.sqrt(k)
    cens = np.zeros(z.shape, dtype=bool) if censored is None else np.asarray(censored, dtype=bool)
    z[cens] = np.inf
    n = z.shape[0]
    frac = float(cens.mean()) if n else 0.0
    law = Gaussian(2 * sigma2_h)
    emp = EmpiricalDistribution(z, float(np.min(z[cens])) if cens.any() else None)
    ks = ks_distance(emp, law).statistic
    if cens.any():
        var_ratio = mean_se = float("nan")
    else:
        var = float(np.var(z, ddof=1))
        var_ratio = var / (2 * sigma2_h)
        mean_se = float(np.mean(z) / math.sqrt(var / n)) if var > 0 else float("nan")
    robust = float("nan")
    if frac < 0.5:
        q10, q50 = np.quantile(z, [0.1, 0.5])
        robust = ((q50 - q10) / Z90) ** 2 / (2 * sigma2_h)
    return FluctuationReport(ks, var_ratio, mean_se, n, robust, frac)


# identity checks

def laplace_check_inverse_normal_sq(t_list) -> float:
    """``max |E exp(-t / N^2) - exp(-sqrt(2 t))|`` by adaptive quadrature over N."""
    worst = 0.0
    for t in t_list:
        if t < 0:
            raise ValueError("t must be >= 0")
        if t == 0:
            val, err = 1.0, 0.0
        else:
            # 2 int_0^inf exp(-t / z^2) phi(z) dz, split where the integrand peaks
            f = lambda z: math.exp(-t / (z * z) - z * z / 2) if z > 0 else 0.0
            peak = (2 * t) ** 0.25
            a, ea = integrate.quad(f, 0, peak, epsabs=1e-14, epsrel=1e-13, limit=200)
            b, eb = integrate.quad(f, peak, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
            val, err = 2 * (a + b) / math.sqrt(2 * math.pi), ea + eb
        if err > 1e-10:
            raise QuadratureError(f"quadrature error {err:.3g} at t={t}")
        worst = max(worst, abs(val - math.exp(-math.sqrt(2 * t))))
    return worst


@dataclass(frozen=True)
class LaplaceRow:
    s: float
    estimate: float
    target: float
    se: float

    @property
    def z(self) -> float:
        return (self.estimate - self.target) / self.se if self.se > 0 else 0.0


def laplace_check_w(c_beta: float, s_list, n_draws: int = 10**7, seed: int = 0,
                    factor: float = 1.0) -> list[LaplaceRow]:
    """Monte Carlo ``E exp(-s W)`` for ``W = c^2 E^2 / N^2`` against ``1 / (1 + factor c sqrt s)``.

    ``factor = 1`` is the transform as usually stated. Conditioning on ``E``
    gives ``E exp(-s W) = E exp(-c E sqrt(2 s))``, so the exact transform of
    this ``W`` has ``factor = sqrt 2``. The same draws serve every ``s``.
    """
    if c_beta <= 0:
        raise ValueError("c_beta must be positive")
    s_arr = np.asarray(list(s_list), dtype=float)
    rng = stream(seed, 0x1a91ace)
    acc = np.zeros_like(s_arr)
    acc2 = np.zeros_like(s_arr)
    chunk = 1_000_000
    left = n_draws
    while left > 0:
        m = min(chunk, left)
        w = (c_beta * rng.standard_exponential(m) / rng.standard_normal(m)) ** 2
        e = np.exp(-np.outer(s_arr, w))
        acc += e.sum(axis=1)
        acc2 += (e * e).sum(axis=1)
        left -= m
    mean = acc / n_draws
    var = acc2 / n_draws - mean**2
    se = np.sqrt(np.maximum(var, 0) / n_draws)
    return [LaplaceRow(float(s), float(mu), 1.0 / (1.0 + factor * c_beta * math.sqrt(s)), float(e))
            for s, mu, e in zip(s_arr, mean, se)]


def literal_scale(beta: float) -> float:
    """``(beta Gamma(1/2))^{-1}``, the scale as usually quoted."""
    return 1.0 / (beta * math.sqrt(math.pi))


def solving_scale(beta: float) -> float:
    """``(beta sqrt(2 pi))^{-1}``: the scale at which ``s E / |N|`` solves the renewal equation."""
    return 1.0 / (beta * math.sqrt(2 * math.pi))


def integral_equation_residual(law: ExpOverAbsNormal, beta: float, t_list) -> float:
    """``max_t |1 - P(X > t) - beta t int_0^1 P(X > t sqrt(1-u)) / sqrt(u) du|``.

    With ``u = v^2`` the integral is ``2 int_0^1 P(X > t sqrt(1 - v^2)) dv``,
    which is smooth.
    """
    worst = 0.0
    for t in t_list:
        surv = lambda v: 1.0 - float(law.cdf(t * math.sqrt(max(0.0, 1.0 - v * v))))
        val, err = integrate.quad(surv, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
        if err > 1e-10:
            raise QuadratureError(f"quadrature error {err:.3g} at t={t}")
        res = 1.0 - (1.0 - float(law.cdf(t))) - beta * t * 2.0 * val
        worst = max(worst, abs(res))
    return worst
