"""Acceptance criteria, each run at its stated size and tolerance.

Every test appends a one-line PASS/FAIL record that is printed in the
terminal summary, then asserts the criterion literally.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from zrecur import analysis, laws, spectral, toy
from zrecur.gibbs import CylinderWord
from zrecur.presets import resolve

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


def record(num, title, ok, detail, elapsed):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}; {elapsed:.1f}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def first_return_counts(n_max):
    """Exact first-return probabilities from all 4**n_max walks of length 2 n_max."""
    L = 2 * n_max
    codes = np.arange(2**L, dtype=np.int64)
    pos = np.zeros(codes.size, dtype=np.int8)
    first = np.zeros(codes.size, dtype=np.int8)
    for j in range(L):
        pos += (((codes >> j) & 1) * 2 - 1).astype(np.int8)
        first[(pos == 0) & (first == 0)] = j + 1
    return {n: np.count_nonzero(first == 2 * n) / 2**L for n in range(1, n_max + 1)}


def test_criterion_01_first_return_law():
    t0 = time.perf_counter()
    brute = first_return_counts(10)
    surv = toy.survival_table()
    table = {n: surv[n - 1] - surv[n] for n in range(1, 11)}
    worst = max(abs(table[n] - brute[n]) / brute[n] for n in range(1, 11))
    exact_ok = all(float(toy.first_return_pmf(n)) == brute[n] for n in range(1, 11))
    firsts = [float(toy.first_return_pmf(n)) for n in range(1, 5)] == [1 / 2, 1 / 8, 1 / 16, 5 / 128]
    dt = time.perf_counter() - t0
    ok = worst < 1e-12 and exact_ok and firsts and dt < 1.0
    record(1, "exact R1 law vs enumeration", ok, f"max rel err {worst:.2e}", dt)
    assert ok


def test_criterion_02_levy_limit():
    t0 = time.perf_counter()
    st = analysis.toy_rn_study(1000, 100_000, seed=2, tol=0.015)
    dt = time.perf_counter() - t0
    ok = st.passed and dt < 30
    record(2, "R_n / n^2 vs Levy(1/2)", ok, f"KS {st.verdicts[0]['statistic']:.4f} <= 0.015", dt)
    assert ok


def test_criterion_03_toy_return_law():
    t0 = time.perf_counter()
    st = analysis.toy_tau_study(1, 2.0**-12, 20_000, seed=3, mode="idealized", tol=0.03)
    dt = time.perf_counter() - t0
    ok = st.passed and dt < 60
    record(3, "toy (2 eps) sqrt(tau) vs E/|N|", ok, f"KS {st.verdicts[0]['statistic']:.4f} <= 0.03", dt)
    assert ok


def test_criterion_04_toy_exponent():
    t0 = time.perf_counter()
    st = analysis.toy_exponent_study([2.0**-j for j in range(6, 15)], 1, 2000, seed=4)
    dt = time.perf_counter() - t0
    ok = st.passed and dt < 120
    record(4, "toy recurrence exponent", ok, f"slope {st.verdicts[0]['statistic']:.3f} in [1.7, 2.3]", dt)
    assert ok


def test_criterion_05_spectral_identities(lazy):
    t0 = time.perf_counter()
    q = 0.05
    g, step = lazy.gibbs, lazy.step
    worst = 0.0
    for u in np.linspace(-math.pi, math.pi, 1001):
        lam = spectral.leading_eigenvalue(spectral.TwistedOperator(g, step, float(u)))
        assert not lam.flagged
        worst = max(worst, abs(lam.value - ((1 - 2 * q) + 2 * q * math.cos(u))))
    s2 = spectral.sigma2_from_curve(g, step)
    rel = abs(s2.spectral - 2 * q) / (2 * q)
    gk_rel = abs(s2.spectral - s2.green_kubo) / s2.green_kubo
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and rel < 1e-6 and gk_rel < 1e-6 and dt < 1.0
    record(5, "lambda_u formula and -lambda''(0)", ok,
           f"pointwise {worst:.1e}, sigma2 rel {rel:.1e}, vs Green-Kubo {gk_rel:.1e}", dt)
    assert ok


def test_criterion_06_nonarithmeticity(lazy, uniform2):
    t0 = time.perf_counter()
    a = spectral.nonarithmeticity_scan(lazy.gibbs, lazy.step, 1024)
    b = spectral.nonarithmeticity_scan(uniform2.gibbs, uniform2.step, 1024)
    dt = time.perf_counter() - t0
    neg = (not b.nonarithmetic and b.offending_u is not None and abs(b.offending_u - math.pi) < 1e-9
           and abs(b.max_radius - 1) < 1e-12)
    ok = a.nonarithmetic and a.max_radius <= 1 - 1e-6 and neg and dt < 5
    record(6, "nonarithmeticity scan", ok,
           f"lazy max radius {a.max_radius:.6f}; +-1 fails at u={b.offending_u:.6f} radius {b.max_radius:.12f}", dt)
    assert ok


def test_criterion_07_local_limit(uniform2, lazy):
    t0 = time.perf_counter()
    dist = spectral.sum_distribution(uniform2.gibbs, uniform2.step, 100)
    ssrw = float(dist[100]) * math.sqrt(50 * math.pi)
    ratio = spectral.local_ratio(lazy.gibbs, lazy.step, CylinderWord((2,)), (2,), 2000)
    dt = time.perf_counter() - t0
    ssrw_ok = abs(ssrw - 0.99749) <= 1e-5
    ok = ssrw_ok and abs(ratio - 1) <= 0.05 and dt < 30
    record(7, "exact local limit", ok,
           f"SSRW {ssrw:.7f} vs 0.99749 +- 1e-5 ({'ok' if ssrw_ok else 'off by ' + format(ssrw - 0.99749, '.2e')}); "
           f"lazy cylinder ratio {ratio:.5f}", dt)
    assert ok


def test_criterion_08_hirata(uniform2):
    t0 = time.perf_counter()
    st = analysis.hirata_study(uniform2, 5, 10_000, 10**7, seed=8, tol=0.05)
    dt = time.perf_counter() - t0
    ks = st.verdicts[0]["statistic"]
    ok = st.verdicts[0]["verdict"] and dt < 60
    record(8, "Hirata exponential law", ok, f"KS {ks:.4f} <= 0.05, Kac mean {st.verdicts[1]['statistic']:.4f}", dt)
    assert ok


def test_criterion_09_zext_exponent(lazy):
    t0 = time.perf_counter()
    st = analysis.zext_exponent_study(lazy, [3, 4, 5, 6, 7, 8], 1000, 10**6, seed=9)
    dt = time.perf_counter() - t0
    v = st.verdicts[0]
    ok = v["verdict"] and dt < 600
    record(9, "Z-extension recurrence exponent", ok,
           f"slope {v['statistic']:.3f} vs 4h = {v['target']:.3f} +- 25%, censored up to {max(v['censored']):.2f}", dt)
    assert ok


def test_criterion_10_zext_shape(lazy):
    t0 = time.perf_counter()
    st = analysis.zext_shape_study(lazy, 6, 1000, 10**8, seed=10, t_max=3.0, tol=0.08)
    dt = time.perf_counter() - t0
    v = st.verdicts[0]
    ok = v["verdict"] and dt < 600
    record(10, "Z-extension return-time shape", ok,
           f"KS {v['statistic']:.3f} <= 0.08; fitted scale {v['fitted_scale']:.4f} vs sigma/sqrt(pi) "
           f"{v['scale_sigma_over_sqrt_pi']:.4f}; mass at tau=1 {v['atom_at_one']:.3f}", dt)
    assert ok


def test_criterion_11_identities():
    t0 = time.perf_counter()
    st = analysis.identities_study(seed=11, n_draws=10**7, beta=1.0)
    dt = time.perf_counter() - t0
    ie, lw, lv = st.verdicts
    ok = st.passed and dt < 60
    record(11, "renewal equation and Laplace identities", ok,
           f"(a) residual {ie['statistic']:.3f} [{ie['residual_at_solving_scale']:.1e} at scale 1/(beta sqrt(2 pi))]; "
           f"(b) max |z| {lw['statistic']:.0f} [{lw['max_z_with_sqrt2']:.2f} with sqrt 2]; "
           f"(c) deviation {lv['statistic']:.1e}", dt)
    assert ok


def test_criterion_12_fluctuations(bern03):
    t0 = time.perf_counter()
    trend = []
    for k in (2, 3, 4):
        s = analysis.fluctuation_study(bern03, k, 200, 10**7, seed=12)
        trend.append(f"k={k}: {s.verdicts[0]['robust_ratio']:.2f}")
    st = analysis.fluctuation_study(bern03, 10, 100, 10**7, seed=12)
    dt = time.perf_counter() - t0
    v, c = st.verdicts
    ok = st.passed
    record(12, "fluctuations of log tau (trend test)", ok,
           f"k=10 censored {v['censored']:.2f}, variance ratio {v['statistic']:.2f}, mean/SE {c['statistic']:.1f}; "
           f"lower-half variance ratio by k {', '.join(trend)}", dt)
    assert ok
