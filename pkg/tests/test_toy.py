import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zrecur import toy
from zrecur.streams import stream


def enumerate_first_returns(n_max):
    """Counts of walks of length 2 n_max by first return time, from all 4**n_max paths."""
    L = 2 * n_max
    codes = np.arange(2**L, dtype=np.int64)
    steps = ((codes[:, None] >> np.arange(L)) & 1) * 2 - 1
    pos = np.cumsum(steps, axis=1)
    hit = pos == 0
    first = np.where(hit.any(axis=1), hit.argmax(axis=1) + 1, 0)
    return {m: Fraction(int(np.sum(first == m)), 2**L) for m in range(2, L + 1, 2)}


def test_pmf_first_values():
    assert [toy.first_return_pmf(n) for n in range(1, 5)] == [Fraction(1, 2), Fraction(1, 8),
                                                             Fraction(1, 16), Fraction(5, 128)]


def test_pmf_matches_enumeration():
    counts = enumerate_first_returns(8)
    for n in range(1, 9):
        assert counts[2 * n] == toy.first_return_pmf(n)


def test_pmf_matches_generating_function():
    # coefficients of 1 - sqrt(1 - s^2) = sum_n C(2n, n) s^{2n} / ((2n - 1) 4^n)
    coef = [Fraction(1)]
    for j in range(1, 30):
        coef.append(coef[-1] * Fraction(2 * j - 3, 2 * j) if j > 1 else Fraction(-1, 2))
    for n in range(1, 30):
        assert -coef[n] == toy.first_return_pmf(n)


def test_pmf_rejects_zero():
    with pytest.raises(ValueError):
        toy.first_return_pmf(0)


def test_survival_table_exact_prefix():
    surv = toy.survival_table()
    for n in range(0, 40):
        assert surv[n] == pytest.approx(math.comb(2 * n, n) / 4**n, rel=1e-13)
    assert not surv.flags.writeable


def test_sampler_frequencies():
    r = toy.sample_first_return(stream(1), 200_000)
    for n in range(1, 6):
        p = float(toy.first_return_pmf(n))
        se = math.sqrt(p * (1 - p) / r.size)
        assert abs(np.mean(r == 2 * n) - p) < 4 * se


def test_sampler_matches_step_walk():
    rng = stream(2)
    direct = toy.sample_first_return(rng, 20_000)
    walked = [toy.simulate_walk_until_return(stream(3, i), 10**5) for i in range(3000)]
    cap = 200
    a = np.mean(direct <= cap)
    b = np.mean([w is not None and w <= cap for w in walked])
    assert abs(a - b) < 0.03
    assert abs(a - (1 - toy.survival_table()[cap // 2])) < 0.01


def test_walk_censoring():
    assert toy.simulate_walk_until_return(stream(0), 1) in (None,)
    with pytest.raises(ValueError):
        toy.simulate_walk_until_return(stream(0), 0)


def test_r_n_is_sum_of_first_returns():
    a = toy.sample_r_n(50, stream(9, 1))
    b = int(toy.sample_first_return(stream(9, 1), 50).sum())
    assert a == b
    assert a >= 100 and a % 2 == 0


def test_r_n_batch_deterministic():
    assert np.array_equal(toy.sample_r_n_batch(20, 30, 5), toy.sample_r_n_batch(20, 30, 5))
    assert not np.array_equal(toy.sample_r_n_batch(20, 30, 5), toy.sample_r_n_batch(20, 30, 6))


def test_toy_config_validation():
    with pytest.raises(ValueError):
        toy.ToyConfig(0, 0.1)
    with pytest.raises(ValueError):
        toy.ToyConfig(1, 0.6)
    with pytest.raises(ValueError):
        toy.ToyConfig(1, 0.1, mode="other")
    assert toy.ToyConfig(1, 0.25).hit_probability == pytest.approx(0.5)
    assert toy.ToyConfig(2, 0.1).hit_probability == pytest.approx(math.pi * 0.01)
    assert toy.ToyConfig(2, 0.1, norm="max").hit_probability == pytest.approx(0.04)


def test_faithful_matches_idealized_hit_count():
    cfg_f = toy.ToyConfig(2, 0.05, mode="faithful")
    counts = [toy.sample_tau(cfg_f, stream(4, i), 2**62).t_count for i in range(3000)]
    lam = cfg_f.hit_probability
    se = math.sqrt((1 - lam) / lam**2 / len(counts))
    assert abs(np.mean(counts) - 1 / lam) < 4 * se


def test_tau_censoring():
    cfg = toy.ToyConfig(1, 2.0**-10)
    s = toy.sample_tau(cfg, stream(1), 10)
    assert s.censored and s.tau == 10


@given(st.integers(0, 2**32), st.integers(1, 40))
def test_tau_is_even_and_at_least_twice_t(seed, n):
    cfg = toy.ToyConfig(1, 0.2)
    s = toy.sample_tau(cfg, stream(seed, n), 2**62)
    assert not s.censored
    assert s.tau % 2 == 0 and s.tau >= 2 * s.t_count


@given(st.integers(0, 2**32))
def test_r_n_monotone_in_n(seed):
    u = toy._uniforms(stream(seed), 30)
    r = toy.kernels.first_return_times(u, toy.survival_table())
    assert np.all(np.diff(np.cumsum(r)) > 0)


@pytest.mark.parametrize("dim,norm", list(product([1, 2, 3], ["euclidean", "max"])))
def test_unit_ball_volume(dim, norm):
    rng = np.random.default_rng(dim)
    x = rng.uniform(-1, 1, (200_000, dim))
    inside = np.max(np.abs(x), axis=1) <= 1 if norm == "max" else np.sum(x * x, axis=1) <= 1
    assert toy.unit_ball_volume(dim, norm) == pytest.approx(2**dim * inside.mean(), rel=0.01)
