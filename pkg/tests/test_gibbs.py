import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zrecur.gibbs import (CylinderWord, ModelError, Potential, SubshiftSpec, bernoulli, build_gibbs,
                          cylinder_measure, higher_block, log_word_measure, make_step_function,
                          primitivity_exponent, recode_to_depth2, word_measure)

GOLDEN = np.array([[1, 1], [1, 0]])


def zero_potential(spec, depth=1):
    return Potential(depth, {w: 0.0 for w in spec.words(depth)})


def test_full_two_shift_entropy():
    spec = SubshiftSpec(np.ones((2, 2), dtype=int))
    g = build_gibbs(spec, zero_potential(spec))
    assert g.entropy == pytest.approx(math.log(2), abs=1e-13)
    assert g.dimension == pytest.approx(2 * math.log(2))
    assert np.allclose(g.stationary, 0.5) and np.allclose(g.transitions, 0.5)


def test_golden_mean_parry_measure():
    spec = SubshiftSpec(GOLDEN)
    g = build_gibbs(spec, zero_potential(spec))
    phi = (1 + math.sqrt(5)) / 2
    assert g.perron_value == pytest.approx(phi, abs=1e-12)
    assert g.entropy == pytest.approx(math.log(phi), abs=1e-12)
    # Parry: p(a) = phi^2 / (1 + phi^2)
    assert g.stationary[0] == pytest.approx(phi**2 / (1 + phi**2), abs=1e-12)
    assert g.transitions[1, 1] == 0


def test_bernoulli_entropy():
    spec, pot = bernoulli([0.05, 0.05, 0.9])
    g = build_gibbs(spec, pot)
    h = -sum(p * math.log(p) for p in (0.05, 0.05, 0.9))
    assert g.entropy == pytest.approx(h, abs=1e-12)
    assert g.entropy == pytest.approx(0.3944, abs=1e-4)
    assert np.allclose(g.stationary, [0.05, 0.05, 0.9])


def test_potential_shift_invariance():
    # adding a constant or a coboundary does not change the measure
    spec = SubshiftSpec(GOLDEN)
    rng = np.random.default_rng(0)
    base = {w: float(rng.normal()) for w in spec.words(2)}
    u = rng.normal(size=2)
    moved = {w: v + 3.0 + u[w[1]] - u[w[0]] for w, v in base.items()}
    g1 = build_gibbs(spec, Potential(2, base))
    g2 = build_gibbs(spec, Potential(2, moved))
    assert np.allclose(g1.transitions, g2.transitions, atol=1e-12)
    assert np.allclose(g1.stationary, g2.stationary, atol=1e-12)


def test_recoding_golden_mean_depth3():
    spec = SubshiftSpec(GOLDEN)
    block, states = higher_block(spec, 3)
    assert states == [(0, 0), (0, 1), (1, 0)]
    assert block.symbols == ("aa", "ab", "ba")
    assert block.transition.tolist() == [[1, 1, 0], [0, 0, 1], [1, 1, 0]]
    table = Potential(3, {w: float(i) for i, w in enumerate(spec.words(3))})
    _, pairs, _ = recode_to_depth2(spec, table)
    assert pairs[0, 1] == table.values[(0, 0, 1)]
    assert pairs[2, 0] == table.values[(1, 0, 0)]


def test_recoded_measure_agrees_with_depth2():
    spec, pot = bernoulli([0.2, 0.3, 0.5])
    g2 = build_gibbs(spec, pot)
    g4 = build_gibbs(spec, pot, depth=4)
    for w in product(range(3), repeat=5):
        assert word_measure(g4, g4.encode(w)) == pytest.approx(word_measure(g2, w), rel=1e-12)


def test_primitivity():
    assert primitivity_exponent(GOLDEN) == 2
    assert primitivity_exponent(np.array([[0, 1], [1, 0]])) is None
    with pytest.raises(ModelError, match="not primitive"):
        SubshiftSpec(np.array([[0, 1], [1, 0]]))
    with pytest.raises(ModelError):
        SubshiftSpec(np.array([[1, 0], [0, 1]]))
    with pytest.raises(ModelError):
        SubshiftSpec(np.array([[2, 1], [1, 1]]))


def test_table_validation():
    spec = SubshiftSpec(GOLDEN)
    with pytest.raises(ModelError, match="missing"):
        build_gibbs(spec, Potential(2, {(0, 0): 0.0, (0, 1): 0.0}))
    with pytest.raises(ModelError, match="not allowed"):
        build_gibbs(spec, Potential(2, {w: 0.0 for w in product(range(2), repeat=2)}))


def test_step_validation():
    spec, pot = bernoulli([0.5, 0.5])
    g = build_gibbs(spec, pot)
    with pytest.raises(ModelError, match="not centered"):
        make_step_function(g, 1, {(0,): 1, (1,): 0})
    with pytest.raises(ModelError, match="exceeds"):
        make_step_function(g, 3, {w: 0 for w in product(range(2), repeat=3)})
    with pytest.raises(ModelError, match="integers"):
        make_step_function(g, 1, {(0,): 0.5, (1,): -0.5})
    s = make_step_function(g, 1, {(0,): 2, (1,): -2})
    assert s.max_abs == 2


def test_parse_word():
    spec = SubshiftSpec(np.ones((2, 2), dtype=int), ("x", "yy"))
    assert spec.parse_word("x yy x") == (0, 1, 0)
    with pytest.raises(ModelError):
        spec.parse_word("x z")
    assert SubshiftSpec(GOLDEN).parse_word("aba") == (0, 1, 0)


def test_cylinder_measure():
    spec = SubshiftSpec(GOLDEN)
    g = build_gibbs(spec, zero_potential(spec))
    with pytest.raises(ValueError):
        CylinderWord((0, 1))
    with pytest.raises(ValueError):
        cylinder_measure(g, CylinderWord((1, 1, 0)))
    w = CylinderWord((0, 1, 0))
    assert w.radius == 2
    assert cylinder_measure(g, w) == pytest.approx(math.exp(log_word_measure(g, w.symbols)))


@st.composite
def models(draw):
    A = draw(st.integers(2, 4))
    M = np.array(draw(st.lists(st.lists(st.integers(0, 1), min_size=A, max_size=A), min_size=A, max_size=A)))
    M[0, 0] = 1  # aperiodic
    if primitivity_exponent(M) is None or not (M.any(axis=0).all() and M.any(axis=1).all()):
        M = np.ones((A, A), dtype=int)
    spec = SubshiftSpec(M)
    depth = draw(st.integers(1, 3))
    vals = {w: draw(st.floats(-2, 2)) for w in spec.words(depth)}
    return build_gibbs(spec, Potential(depth, vals))


@given(models())
def test_markov_invariants(g):
    pi, p = g.transitions, g.stationary
    assert np.allclose(pi.sum(axis=1), 1, atol=1e-12)
    assert np.all(pi[g.block.transition == 0] == 0)
    assert np.allclose(p @ pi, p, atol=1e-12)
    assert p.sum() == pytest.approx(1.0) and np.all(p > 0)
    assert np.allclose(g.reversed_transitions.sum(axis=1), 1, atol=1e-12)
    assert 0 <= g.entropy <= math.log(g.spec.alphabet_size) + 1e-12


@given(models(), st.integers(1, 4))
def test_cylinder_consistency(g, m):
    # Kolmogorov consistency: summing over a last symbol gives the shorter word
    words = g.block.words(m)
    total = sum(word_measure(g, w) for w in words)
    assert total == pytest.approx(1.0, abs=1e-12)
    for w in words[:5]:
        ext = sum(word_measure(g, w + (b,)) for b in range(g.n_states))
        assert ext == pytest.approx(word_measure(g, w), rel=1e-12)
