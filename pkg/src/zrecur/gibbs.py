"""Subshifts of finite type and their Gibbs-Markov measures.

Potentials and step functions are locally constant: a value per allowed word
of some fixed depth. Everything is recoded to a depth-2 description on block
states (allowed words of length ``depth - 1``), where the Gibbs measure is a
stationary Markov chain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

POWER_TOL = 1e-14
POWER_BUDGET = 1_000_000
MEAN_TOL = 1e-12

Word = tuple[int, ...]


class ModelError(ValueError):
    """Raised for an inconsistent model: non-primitive matrix, bad tables, non-centered step."""


def primitivity_exponent(transition: np.ndarray) -> int | None:
    """Smallest n with ``transition**n > 0`` entrywise, or None if not primitive."""
    M = (np.asarray(transition) > 0).astype(np.int64)
    A = M.shape[0]
    P = M.copy()
    # Wielandt bound
    for n in range(1, (A - 1) ** 2 + 2):
        if P.all():
            return n
        P = ((P @ M) > 0).astype(np.int64)
    return None


@dataclass(frozen=True)
class SubshiftSpec:
    transition: np.ndarray
    symbols: tuple[str, ...] = ()
    primitivity: int = field(init=False)

    def __post_init__(self):
        M = np.asarray(self.transition)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
            raise ModelError("transition must be a non-empty square matrix")
        if not np.isin(M, (0, 1)).all():
            raise ModelError("transition entries must be 0 or 1")
        M = M.astype(np.int64)
        M.flags.writeable = False
        object.__setattr__(self, "transition", M)
        if not self.symbols:
            object.__setattr__(self, "symbols", tuple(_default_names(M.shape[0])))
        if len(self.symbols) != M.shape[0] or len(set(self.symbols)) != len(self.symbols):
            raise ModelError("symbols must be distinct, one per row of transition")
        if not (M.any(axis=0).all() and M.any(axis=1).all()):
            raise ModelError("every row and column of transition needs a 1")
        n0 = primitivity_exponent(M)
        if n0 is None:
            raise ModelError("transition matrix is not primitive (reducible or periodic)")
        object.__setattr__(self, "primitivity", n0)

    @property
    def alphabet_size(self) -> int:
        return self.transition.shape[0]

    def allowed(self, word: Sequence[int]) -> bool:
        return all(self.transition[a, b] for a, b in zip(word, word[1:]))

    def words(self, length: int) -> list[Word]:
        """Allowed words of ``length``, in lexicographic order."""
        out: list[Word] = [(a,) for a in range(self.alphabet_size)]
        for _ in range(length - 1):
            out = [w + (b,) for w in out for b in range(self.alphabet_size) if self.transition[w[-1], b]]
        return out

    def parse_word(self, text: str) -> Word:
        """``"a b c"`` (or ``"abc"`` for one-character symbols) to indices."""
        parts = text.split() if " " in text.strip() else list(text.strip())
        index = {s: i for i, s in enumerate(self.symbols)}
        try:
            return tuple(index[p] for p in parts)
        except KeyError as exc:
            raise ModelError(f"unknown symbol {exc.args[0]!r} in word {text!r}") from None


def _default_names(n: int) -> list[str]:
    letters = "abcdefghijklmnopqrstuvwxyz"
    return list(letters[:n]) if n <= 26 else [f"s{i}" for i in range(n)]


@dataclass(frozen=True)
class Potential:
    """Real values on every allowed word of length ``depth``."""

    depth: int
    values: Mapping[Word, float]


def _check_table(spec: SubshiftSpec, depth: int, values: Mapping[Word, float], what: str):
    if depth < 1:
        raise ModelError(f"{what} depth must be >= 1")
    expected = set(spec.words(depth))
    got = set(values)
    if got != expected:
        missing = sorted(expected - got)[:3]
        extra = sorted(got - expected)[:3]
        raise ModelError(f"{what} table must cover exactly the allowed {depth}-words "
                         f"(missing {missing}, not allowed {extra})")


def higher_block(spec: SubshiftSpec, depth: int) -> tuple[SubshiftSpec, list[Word]]:
    """Recode ``spec`` on the alphabet of allowed ``(depth - 1)``-words.

    Two block states are joined when they overlap in ``depth - 2`` symbols;
    depth 2 is the identity.
    """
    if depth < 2:
        raise ValueError("block depth must be >= 2")
    if depth == 2:
        return spec, [(a,) for a in range(spec.alphabet_size)]
    states = spec.words(depth - 1)
    M = np.array([[int(u[1:] == v[:-1] and spec.transition[u[-1], v[-1]]) for v in states]
                  for u in states], dtype=np.int64)
    names = tuple("".join(spec.symbols[i] for i in w) if all(len(spec.symbols[i]) == 1 for i in w)
                  else "|".join(spec.symbols[i] for i in w) for w in states)
    return SubshiftSpec(M, names), states


def lift_pairs(values: Mapping[Word, float], depth: int, states: list[Word], block_spec: SubshiftSpec,
               dtype=float) -> np.ndarray:
    """Pair table on block states: ``table[u, v] = values[(u + v[-1])[:depth]]``."""
    A = len(states)
    table = np.zeros((A, A), dtype=dtype)
    for i, u in enumerate(states):
        for j, v in enumerate(states):
            if block_spec.transition[i, j]:
                table[i, j] = values[(u + v[-1:])[:depth]]
    return table


def recode_to_depth2(spec: SubshiftSpec, table, depth: int | None = None):
    """Recode a depth-m table (Potential or StepFunction values) to depth 2.

    Returns ``(block spec, depth-2 table on block states, states)``. A depth-2
    input comes back unchanged (as a pair array).
    """
    m = table.depth
    _check_table(spec, m, table.values, "table")
    D = max(2, m if depth is None else depth)
    if D < m:
        raise ValueError("target block depth below the table depth")
    block, states = higher_block(spec, D)
    dtype = np.int64 if isinstance(table, StepFunction) else float
    return block, lift_pairs(table.values, m, states, block, dtype=dtype), states


def perron_vector(L: np.ndarray, tol: float = POWER_TOL, budget: int = POWER_BUDGET):
    """Perron root and positive right eigenvector of a primitive nonnegative matrix."""
    A = L.shape[0]
    v = np.full(A, 1.0 / A)
    lam = 0.0
    for _ in range(budget):
        w = L @ v
        lam_new = w.sum() / v.sum()
        w /= w.sum()
        if np.max(np.abs(w - v)) <= tol * np.max(w) and abs(lam_new - lam) <= tol * lam_new:
            return lam_new, w
        v, lam = w, lam_new
    raise ModelError(f"power iteration did not converge in {budget} iterations")


@dataclass(frozen=True, eq=False)
class GibbsMarkov:
    spec: SubshiftSpec
    block: SubshiftSpec
    states: tuple[Word, ...]
    depth: int
    stationary: np.ndarray
    transitions: np.ndarray
    perron_value: float
    right_vector: np.ndarray
    potential_pairs: np.ndarray
    entropy: float

    @property
    def dimension(self) -> float:
        """``d = 2 h_nu``."""
        return 2.0 * self.entropy

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def normalized_potential(self) -> np.ndarray:
        """``log pi(a, b)``; ``-inf`` on forbidden pairs."""
        with np.errstate(divide="ignore"):
            return np.log(self.transitions)

    @property
    def reversed_transitions(self) -> np.ndarray:
        """Time-reversed kernel ``p(a) pi(a, b) / p(b)`` indexed ``[b, a]``."""
        p = self.stationary
        return (p[:, None] * self.transitions / p[None, :]).T

    def encode(self, word: Sequence[int]) -> Word:
        """Letters to block states (overlapping windows of length ``depth - 1``)."""
        width = self.depth - 1
        index = {s: i for i, s in enumerate(self.states)}
        if len(word) < width:
            raise ValueError(f"word shorter than the block width {width}")
        try:
            return tuple(index[tuple(word[i:i + width])] for i in range(len(word) - width + 1))
        except KeyError:
            raise ValueError(f"word {tuple(word)} is not allowed") from None


def build_gibbs(spec: SubshiftSpec, pot: Potential, depth: int | None = None) -> GibbsMarkov:
    """Gibbs-Markov measure of a locally constant potential.

    With ``L(a, b) = M(a, b) exp(h(a, b))``, Perron root ``lam`` and right/left
    vectors ``r, l``: ``pi(a, b) = L(a, b) r(b) / (lam r(a))`` and
    ``p(a) = l(a) r(a) / <l, r>``. ``depth`` forces a larger block depth, as
    needed when a step function is deeper than the potential.
    """
    _check_table(spec, pot.depth, pot.values, "potential")
    D = max(2, pot.depth, depth or 2)
    block, states = higher_block(spec, D)
    h = lift_pairs(pot.values, pot.depth, states, block)
    L = block.transition * np.exp(np.where(block.transition > 0, h, 0.0))
    lam, r = perron_vector(L)
    lam_l, l = perron_vector(L.T)
    if abs(lam - lam_l) > 1e-10 * lam:
        raise ModelError("left and right Perron roots disagree")
    pi = L * r[None, :] / (lam * r[:, None])
    pi /= pi.sum(axis=1, keepdims=True)
    p = l * r
    p /= p.sum()
    # polish stationarity against the normalized kernel
    for _ in range(3):
        p = p @ pi
        p /= p.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(pi > 0, pi * np.log(pi), 0.0)
    entropy = float(-(p * plogp.sum(axis=1)).sum())
    for arr in (p, pi, r, h):
        arr.flags.writeable = False
    return GibbsMarkov(spec=spec, block=block, states=tuple(states), depth=D, stationary=p,
                       transitions=pi, perron_value=float(lam), right_vector=r,
                       potential_pairs=h, entropy=entropy)


@dataclass(frozen=True)
class CylinderWord:
    """Centered word ``w_{-(r-1)} .. w_{r-1}`` of block states (length ``2r - 1``)."""

    symbols: Word

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if len(self.symbols) % 2 == 0:
            raise ValueError("a centered cylinder word has odd length 2r - 1")

    @property
    def radius(self) -> int:
        return (len(self.symbols) + 1) // 2


def word_measure(g: GibbsMarkov, word: Sequence[int]) -> float:
    """``nu([w_0 .. w_{m-1}]) = p(w_0) prod pi(w_i, w_{i+1})``; 0 if forbidden."""
    if len(word) == 0:
        return 1.0
    pi = g.transitions
    prob = g.stationary[word[0]]
    for a, b in zip(word, word[1:]):
        prob *= pi[a, b]
    return float(prob)


def log_word_measure(g: GibbsMarkov, word: Sequence[int]) -> float:
    w = np.asarray(word)
    return float(np.log(g.stationary[w[0]]) + g.normalized_potential[w[:-1], w[1:]].sum())


def cylinder_measure(g: GibbsMarkov, w: CylinderWord) -> float:
    """Measure of the cylinder ``w``; shift invariance makes the anchor irrelevant."""
    if not g.block.allowed(w.symbols):
        raise ValueError(f"cylinder word {w.symbols} is not allowed")
    return word_measure(g, w.symbols)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Integer observable, constant on cylinders of length ``depth``."""

    depth: int
    values: Mapping[Word, int]
    table: np.ndarray
    mean_residual: float

    @property
    def max_abs(self) -> int:
        return int(np.abs(self.table).max())


def step_pairs(g: GibbsMarkov, depth: int, values: Mapping[Word, int]) -> np.ndarray:
    if depth > g.depth:
        raise ModelError(f"step depth {depth} exceeds the measure's block depth {g.depth}; "
                         "rebuild the measure with build_gibbs(..., depth=...)")
    _check_table(g.spec, depth, values, "step")
    bad = [w for w, v in values.items() if int(v) != v]
    if bad:
        raise ModelError(f"step values must be integers (offending words {bad[:3]})")
    return lift_pairs({w: int(v) for w, v in values.items()}, depth, list(g.states), g.block,
                      dtype=np.int64)


def make_step_function(g: GibbsMarkov, depth: int, values: Mapping[Word, int]) -> StepFunction:
    """Validate an integer step function; its nu-mean must vanish to 1e-12.

    A non-centered integer observable cannot be recentered, so it is rejected
    with the residual in the message.
    """
    table = step_pairs(g, depth, values)
    mean = float((g.stationary[:, None] * g.transitions * table).sum())
    if abs(mean) > MEAN_TOL:
        raise ModelError(f"step function is not centered: integral = {mean:.6g}")
    table.flags.writeable = False
    return StepFunction(depth=depth, values=dict(values), table=table, mean_residual=mean)


def step_mean(g: GibbsMarkov, depth: int, values: Mapping[Word, int]) -> float:
    table = step_pairs(g, depth, values)
    return float((g.stationary[:, None] * g.transitions * table).sum())


def bernoulli(probs: Sequence[float], symbols: Sequence[str] = ()) -> tuple[SubshiftSpec, Potential]:
    """Full shift with an i.i.d. measure, as a depth-1 potential ``log p``."""
    A = len(probs)
    spec = SubshiftSpec(np.ones((A, A), dtype=np.int64), tuple(symbols))
    return spec, Potential(1, {(a,): float(np.log(p)) for a, p in enumerate(probs)})


def all_words(alphabet_size: int, length: int):
    return itertools.product(range(alphabet_size), repeat=length)
