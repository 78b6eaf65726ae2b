"""Experiment drivers shared by the command line and the acceptance suite.

Each study returns its raw samples and a list of verdict records
``{name, statistic, threshold, verdict, ...}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import laws, spectral, toy, zext
from .gibbs import CylinderWord
from .presets import Model


@dataclass
class Study:
    verdicts: list[dict]
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["verdict"] for v in self.verdicts)


def verdict(name: str, statistic, threshold, ok: bool, **extra) -> dict:
    return {"name": name, "statistic": statistic, "threshold": threshold, "verdict": bool(ok), **extra}


# toy model

def toy_rn_study(n: int = 1000, n_samples: int = 100_000, seed: int = 0, tol: float = 0.015) -> Study:
    """``R_n / n^2`` against the Levy(1/2) law."""
    r = toy.sample_r_n_batch(n, n_samples, seed)
    x = r.astype(float) / float(n) ** 2
    ks = laws.ks_distance(laws.EmpiricalDistribution(x), laws.InverseNormalSquared(), tol)
    return Study([verdict("rn_levy_ks", ks.statistic, tol, ks.verdict, n=n, n_samples=n_samples)],
                 {"r_n": r})


def toy_tau_study(dim: int = 1, eps: float = 2.0**-12, n_samples: int = 20_000, seed: int = 0,
                  mode: str = "idealized", norm: str = "euclidean", step_cap: int = toy.INT_CAP,
                  tol: float = 0.03) -> Study:
    """``c eps^d sqrt(tau)`` against ``E / |N|``, KS on the uncensored range."""
    cfg = toy.ToyConfig(dim, eps, mode, norm)
    samples = toy.tau_batch(cfg, n_samples, seed, step_cap)
    lam = cfg.hit_probability
    tau = np.array([s.tau for s in samples], dtype=np.int64)
    cens = np.array([s.censored for s in samples])
    scaled = lam * np.sqrt(tau.astype(float))
    emp = laws.EmpiricalDistribution.from_censored(scaled, cens, lam * math.sqrt(step_cap))
    ks = laws.ks_distance(emp, laws.ExpOverAbsNormal(1.0), tol)
    return Study([verdict("toy_tau_ks", ks.statistic, tol, ks.verdict, censored=float(cens.mean()),
                          n_used=ks.n_used)],
                 {"samples": samples, "scaled": scaled, "config": cfg})


def toy_exponent_study(eps_list=None, dim: int = 1, n_samples: int = 2000, seed: int = 0,
                       window: tuple[float, float] = (0.85, 1.15)) -> Study:
    """Median exponent regression; the slope should approach ``2 dim``."""
    if eps_list is None:
        eps_list = [2.0**-j for j in range(6, 15)]
    x, y, cens = [], [], []
    for j, eps in enumerate(eps_list):
        cfg = toy.ToyConfig(dim, eps)
        s = toy.tau_batch(cfg, n_samples, seed, toy.INT_CAP, stream_tag=j)
        tau = np.array([v.tau for v in s], dtype=float)
        x.append(-math.log(eps))
        y.append(math.log(np.median(tau)))
        cens.append(float(np.mean([v.censored for v in s])))
    reg = laws.exponent_regression(x, y)
    lo, hi = 2 * dim * window[0], 2 * dim * window[1]
    return Study([verdict("toy_exponent_slope", reg.slope, [lo, hi], lo <= reg.slope <= hi, r2=reg.r2,
                          target=2 * dim)],
                 {"x": x, "y": y, "censored": cens})


# spectral

def spectral_study(model: Model, grid_size: int = 1024) -> Study:
    g, step = model.gibbs, model.step
    s2 = spectral.sigma2_from_curve(g, step)
    curve = spectral.nonarithmeticity_scan(g, step, grid_size)
    v = [verdict("sigma2_consistent", s2.spectral, s2.green_kubo, True, first_derivative=abs(s2.first_derivative)),
         verdict("nonarithmetic", curve.max_radius, 1 - spectral.DELTA_SCAN, curve.nonarithmetic,
                 offending_u=curve.offending_u, period=curve.period)]
    return Study(v, {"curve": curve, "sigma2": s2})


def llt_study(model: Model, n_list, word_a=None, word_b=None, tol: float = 0.05) -> Study:
    """Exact cylinder ratio ``P * sigma sqrt(2 pi n) / (nu(A) nu(B))`` for each ``n``."""
    g, step = model.gibbs, model.step
    if word_a is None:
        word_a = (int(np.argmax(g.stationary)),)
    if word_b is None:
        word_b = word_a
    A = CylinderWord(word_a)
    sigma2 = spectral.asymptotic_variance(g, step.table)
    rows = []
    for n in n_list:
        rows.append((int(n), spectral.exact_return_probability(g, step, A, word_b, int(n)),
                     spectral.local_ratio(g, step, A, word_b, int(n), sigma2)))
    last = rows[-1][2]
    return Study([verdict("llt_ratio", last, [1 - tol, 1 + tol], abs(last - 1) <= tol, n=rows[-1][0])],
                 {"rows": rows, "sigma2": sigma2})


# Z-extension

def zext_exponent_study(model: Model, k_list, n_samples: int, step_cap: int, seed: int = 0,
                        workers: int | None = None, rel_tol: float = 0.25) -> Study:
    """Slope of log median tau against k, compared with ``2 d = 4 h``."""
    tables = zext.run_tau_experiment(model.gibbs, model.step, k_list, n_samples, step_cap, seed, workers)
    x, y, cens = [], [], []
    for k, tab in tables.items():
        x.append(float(k))
        y.append(math.log(np.median(tab.tau)))
        cens.append(tab.censored_fraction)
    reg = laws.exponent_regression(x, y)
    target = 2 * model.gibbs.dimension
    ok = abs(reg.slope / target - 1) <= rel_tol and max(cens) < 0.5
    return Study([verdict("zext_exponent_slope", reg.slope, [target * (1 - rel_tol), target * (1 + rel_tol)], ok,
                          target=target, r2=reg.r2, censored=cens)],
                 {"tables": tables, "x": x, "y": y})


def zext_shape_study(model: Model, k: int, n_samples: int, step_cap: int, seed: int = 0,
                     t_max: float = 3.0, workers: int | None = None, tol: float = 0.08) -> Study:
    """``nu(C_k) sqrt(tau)`` against ``s E / |N|`` after a median fit of ``s``.

    Each sample is followed until ``nu sqrt(tau) >= t_max`` is certain; samples
    whose global ``step_cap`` cannot certify that are dropped and counted.
    """
    tables = zext.run_tau_experiment(model.gibbs, model.step, [k], n_samples, step_cap, seed, workers,
                                     scaled_cap=t_max)
    tab = tables[k]
    resolvable = tab.cylinder_prob * np.sqrt(tab.step_cap.astype(float)) >= t_max * (1 - 1e-12)
    v = tab.cylinder_prob * np.sqrt(tab.tau.astype(float))
    emp = laws.EmpiricalDistribution.from_censored(v[resolvable], tab.censored[resolvable], t_max)
    scale = laws.fit_scale_median(emp)
    ks = laws.ks_distance(emp, laws.ExpOverAbsNormal(scale), tol)
    sigma = math.sqrt(spectral.asymptotic_variance(model.gibbs, model.step.table))
    atom = float(np.mean(tab.tau[resolvable] == 1))
    return Study([verdict("zext_shape_ks", ks.statistic, tol, ks.verdict, fitted_scale=scale,
                          scale_sigma_over_sqrt_pi=sigma / math.sqrt(math.pi), scale_sigma=sigma,
                          dropped=int((~resolvable).sum()), censored=emp.censored_fraction,
                          atom_at_one=atom)],
                 {"tables": tables, "values": v, "resolvable": resolvable})


def hirata_study(model: Model, k: int, n_samples: int, step_cap: int, seed: int = 0,
                 workers: int | None = None, tol: float = 0.05) -> Study:
    """``nu(C_k) R_k`` against Exp(1), plus the Kac mean."""
    tables = zext.run_tau_experiment(model.gibbs, model.step, [k], n_samples, step_cap, seed, workers,
                                     hirata=True)
    tab = tables[k]
    v = tab.cylinder_prob * tab.tau
    thr = float(np.min(v[tab.censored])) if tab.censored.any() else None
    emp = laws.EmpiricalDistribution.from_censored(v, tab.censored, thr)
    ks = laws.ks_distance(emp, laws.ExponentialMeanOne(), tol)
    mean, se = float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.shape[0]))
    return Study([verdict("hirata_ks", ks.statistic, tol, ks.verdict, censored=float(tab.censored.mean())),
                  verdict("kac_mean", mean, [1 - 3 * se, 1 + 3 * se], abs(mean - 1) <= 3 * se, se=se)],
                 {"tables": tables, "values": v})


def fluctuation_study(model: Model, k: int, n_samples: int, step_cap: int, seed: int = 0,
                      workers: int | None = None, ratio_window=(0.5, 1.5)) -> Study:
    """Variance and centring of ``(log sqrt tau - k d) / sqrt k`` against ``2 sigma_h^2``.

    Censored samples make the statistic meaningless, so any censoring fails
    the check outright and is reported.
    """
    s2h = spectral.information_variance(model.gibbs)
    tables = zext.run_tau_experiment(model.gibbs, model.step, [k], n_samples, step_cap, seed, workers)
    tab = tables[k]
    rep = laws.fluctuation_test(tab.tau, k, model.gibbs.dimension, s2h, tab.censored)
    cens = tab.censored_fraction
    ok_var = cens == 0 and ratio_window[0] <= rep.variance_ratio <= ratio_window[1]
    ok_mean = cens == 0 and abs(rep.mean_over_se) <= 3
    return Study([verdict("fluctuation_variance_ratio", rep.variance_ratio, list(ratio_window), ok_var,
                          censored=cens, k=k, robust_ratio=rep.robust_variance_ratio),
                  verdict("fluctuation_centering", rep.mean_over_se, [-3, 3], ok_mean, censored=cens, k=k)],
                 {"tables": tables, "report": rep, "sigma2_h": s2h})


# identities

def identities_study(seed: int = 0, n_draws: int = 10**7, beta: float = 1.0) -> Study:
    """Renewal equation, Laplace transform of W and of ``N^{-2}``, as usually stated.

    The corrected-scale variants are reported alongside but do not decide.
    """
    ts = [0.25, 0.5, 1.0, 2.0, 4.0]
    c_lit, c_ok = laws.literal_scale(beta), laws.solving_scale(beta)
    r_lit = laws.integral_equation_residual(laws.ExpOverAbsNormal(c_lit), beta, ts)
    r_ok = laws.integral_equation_residual(laws.ExpOverAbsNormal(c_ok), beta, ts)
    rows = laws.laplace_check_w(1.0, [0.25, 1.0, 4.0], n_draws, seed)
    rows_ok = laws.laplace_check_w(1.0, [0.25, 1.0, 4.0], n_draws, seed, factor=math.sqrt(2))
    zmax = max(abs(r.z) for r in rows)
    zmax_ok = max(abs(r.z) for r in rows_ok)
    lev = laws.laplace_check_inverse_normal_sq([0.5, 1.0, 2.0, 4.0])
    return Study([
        verdict("integral_equation_residual", r_lit, 1e-6, r_lit < 1e-6, scale=c_lit,
                residual_at_solving_scale=r_ok, solving_scale=c_ok),
        verdict("laplace_w_max_z", zmax, 3.0, zmax <= 3.0, max_z_with_sqrt2=zmax_ok),
        verdict("laplace_inverse_normal_sq", lev, 1e-8, lev < 1e-8),
    ], {"laplace_rows": rows, "laplace_rows_sqrt2": rows_ok})
