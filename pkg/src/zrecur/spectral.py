"""Twisted transfer matrices, their leading eigenvalue, and exact local limits.

For a depth-2 step function on block states the twisted operator is the
matrix ``P_u(a, b) = pi(a, b) exp(i u phi(a, b))``, so that
``E[exp(i u S_n)] = p P_u^n 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .gibbs import CylinderWord, GibbsMarkov, StepFunction, word_measure

TIE_TOL = 1e-10
DELTA_SCAN = 1e-6
FD_STEPS = (1e-3, 1e-4)
GK_BUDGET = 1_000_000
DP_CELL_BUDGET = 5 * 10**9


class SpectralError(RuntimeError):
    pass


class DPBudgetError(SpectralError):
    pass


def twisted_matrix(g: GibbsMarkov, step: StepFunction, u: float) -> np.ndarray:
    return g.transitions * np.exp(1j * u * step.table)


@dataclass(frozen=True)
class TwistedOperator:
    base: GibbsMarkov
    step: StepFunction
    u: float
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not -math.pi <= self.u <= math.pi:
            raise ValueError("u must lie in [-pi, pi]")
        object.__setattr__(self, "matrix", twisted_matrix(self.base, self.step, self.u))


@dataclass(frozen=True)
class LeadingEigenvalue:
    value: complex | None  # None when the dominant modulus is not simple
    radius: float

    @property
    def flagged(self) -> bool:
        return self.value is None


def leading_eigenvalue(op: TwistedOperator) -> LeadingEigenvalue:
    """Eigenvalue of maximal modulus of the twisted matrix.

    When the two largest moduli agree to 1e-10 only the spectral radius is
    meaningful and ``value`` is None.
    """
    ev = np.linalg.eigvals(op.matrix)
    order = np.argsort(-np.abs(ev))
    radius = float(abs(ev[order[0]]))
    if len(ev) > 1 and abs(abs(ev[order[0]]) - abs(ev[order[1]])) <= TIE_TOL:
        return LeadingEigenvalue(None, radius)
    return LeadingEigenvalue(complex(ev[order[0]]), radius)


def spectral_radius(g: GibbsMarkov, step: StepFunction, u: float) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(twisted_matrix(g, step, u)))))


def _lam(g: GibbsMarkov, step: StepFunction, u: float) -> complex:
    ev = np.linalg.eigvals(twisted_matrix(g, step, u))
    # near u = 0 the leading eigenvalue is the continuation of 1
    return complex(ev[np.argmin(np.abs(ev - 1.0))]) if abs(u) < 0.1 else complex(ev[np.argmax(np.abs(ev))])


def lambda_derivatives(g: GibbsMarkov, step: StepFunction, h: float) -> tuple[complex, complex]:
    """Fourth-order central differences of ``lambda_u`` at 0: (first, second)."""
    f = {j: _lam(g, step, j * h) for j in (-2, -1, 0, 1, 2)}
    d1 = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
    d2 = (-f[-2] + 16 * f[-1] - 30 * f[0] + 16 * f[1] - f[2]) / (12 * h * h)
    return d1, d2


def asymptotic_variance(g: GibbsMarkov, pair_table: np.ndarray, tol: float = 1e-17) -> float:
    """Green-Kubo ``Var(f) + 2 sum_k Cov(f, f o shift^k)`` for a function of (x0, x1).

    The covariance series is summed term by term until two consecutive terms
    fall below ``tol`` relative to the variance.
    """
    p, pi = g.stationary, g.transitions
    F = np.where(pi > 0, pair_table, 0.0).astype(float)
    joint = p[:, None] * pi
    F = F - (joint * F).sum()
    var = float((joint * F * F).sum())
    w = (joint * F).sum(axis=0)  # weight on x_1
    vec = (pi * F).sum(axis=1)   # E[f(x_k, x_k+1) | x_k]
    total, small = 0.0, 0
    scale = max(var, 1e-300)
    for _ in range(GK_BUDGET):
        term = float(w @ vec)
        total += term
        if abs(term) <= tol * scale:
            small += 1
            if small >= 2:
                return var + 2.0 * total
        else:
            small = 0
        vec = pi @ vec
    raise SpectralError("Green-Kubo series did not converge")


@dataclass(frozen=True)
class Sigma2:
    spectral: float
    green_kubo: float
    first_derivative: complex
    richardson_gap: float


def sigma2_from_curve(g: GibbsMarkov, step: StepFunction, rel_tol: float = 1e-6) -> Sigma2:
    """``sigma_phi^2 = -Re lambda''(0)``, checked against Green-Kubo.

    Raises SpectralError when the two routes disagree beyond ``rel_tol``.
    """
    h1, h2 = FD_STEPS
    d1, d2 = lambda_derivatives(g, step, h1)
    _, d2_fine = lambda_derivatives(g, step, h2)
    spectral = -d2.real
    gap = abs(d2.real - d2_fine.real)
    # the fine step is roundoff-limited at about 64 eps / h^2
    if gap > rel_tol * abs(spectral) + 64 * np.finfo(float).eps / h2**2:
        raise SpectralError(f"finite differences inconsistent across steps (gap {gap:.3g})")
    gk = asymptotic_variance(g, step.table)
    if abs(spectral - gk) > rel_tol * max(abs(gk), 1e-300):
        raise SpectralError(f"-lambda''(0) = {spectral:.12g} disagrees with Green-Kubo {gk:.12g}; "
                            "is the step function centered?")
    return Sigma2(spectral=spectral, green_kubo=gk, first_derivative=d1, richardson_gap=gap)


def contraction_constant(g: GibbsMarkov, step: StepFunction, beta: float = 0.5, points: int = 200) -> float:
    """Largest ``c1`` with ``|lambda_u| <= exp(-c1 u^2)`` on a grid of (0, beta]."""
    us = np.linspace(beta / points, beta, points)
    r = np.array([spectral_radius(g, step, u) for u in us])
    return float(np.min(-np.log(r) / us**2))


@dataclass
class SpectralCurve:
    grid: np.ndarray
    leading: np.ndarray
    radius: np.ndarray
    sigma2_phi: float
    nonarithmetic: bool
    max_radius: float
    offending_u: float | None

    @property
    def period(self) -> int:
        """Lattice period implied by the offending frequency (1 when nonarithmetic)."""
        if self.nonarithmetic or self.offending_u is None:
            return 1
        return max(1, int(round(2 * math.pi / self.offending_u)))


def nonarithmeticity_scan(g: GibbsMarkov, step: StepFunction, grid_size: int = 1024,
                          delta: float = DELTA_SCAN) -> SpectralCurve:
    """Spectral radius of ``P_u`` on a uniform grid of (0, pi] plus a refinement.

    The radius tends to 1 as u -> 0 along the perturbed Perron branch, so the
    leading run of grid points where the radius falls monotonically is the
    central lobe, certified by ``sigma^2 > 0`` rather than by the bound.
    The verdict uses the largest radius outside that lobe, refined by a
    bounded golden-section search around it.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be >= 64")
    grid = np.pi * np.arange(1, grid_size + 1) / grid_size
    leading = np.empty(grid_size, dtype=complex)
    radius = np.empty(grid_size)
    for j, u in enumerate(grid):
        res = leading_eigenvalue(TwistedOperator(g, step, float(u)))
        radius[j] = res.radius
        leading[j] = np.nan if res.value is None else res.value
    sigma2 = asymptotic_variance(g, step.table)
    # the central lobe: the initial run where the radius keeps falling from 1
    lobe = 1
    while lobe < grid_size and radius[lobe] < radius[lobe - 1]:
        lobe += 1
    if sigma2 <= 0:
        return SpectralCurve(grid, leading, radius, sigma2, False, float(radius.max()), 0.0)
    if lobe >= grid_size:
        return SpectralCurve(grid, leading, radius, sigma2, True, float(radius[-1]), None)
    rest = radius[lobe:]
    j = lobe + int(np.argmax(rest))
    lo = grid[j - 1] if j > 0 else grid[0] / 2
    hi = grid[j + 1] if j + 1 < grid_size else np.pi
    res = minimize_scalar(lambda u: -spectral_radius(g, step, u), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    u_star, r_star = float(grid[j]), float(radius[j])
    if -res.fun > r_star:
        u_star, r_star = float(res.x), float(-res.fun)
    ok = r_star <= 1 - delta
    if not ok:
        # the lattice frequency is the smallest u = 2 pi / d on the unit circle
        for d in range(2 * grid_size, 1, -1):
            if spectral_radius(g, step, 2 * math.pi / d) > 1 - delta:
                u_star = 2 * math.pi / d
                break
    return SpectralCurve(grid, leading, radius, sigma2, ok, r_star, None if ok else u_star)


def write_curve_csv(path, curve: SpectralCurve, comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "re_lambda", "im_lambda", "radius"])
        for u, lam, r in zip(curve.grid, curve.leading, curve.radius):
            w.writerow([repr(float(u)), repr(float(lam.real)), repr(float(lam.imag)), repr(float(r))])


# exact dynamic programming over (state, partial sum)

def _check_budget(cells: int, limit: int):
    if cells > limit:
        raise DPBudgetError(f"DP would touch {cells:.3g} cells (limit {limit:.3g}); "
                            "reduce n or the range of the step function")


def _run_dp(g: GibbsMarkov, step: StepFunction, n: int, start: int, end: int, constraints: dict,
            limit: int) -> tuple[np.ndarray, int]:
    """Propagate from position ``start`` to ``end``; returns (v at end, center index).

    ``v[a, c + s]`` is the measure of paths with x_end = a and S_n = s, where
    the sum collects ``phi(x_j, x_{j+1})`` for ``0 <= j < n``.
    """
    A = g.n_states
    m = step.max_abs
    c = n * m
    R = 2 * c + 1
    _check_budget(A * R * (end - start + 1), limit)
    pi = np.ascontiguousarray(g.transitions)
    phi = np.ascontiguousarray(step.table, dtype=np.int64)
    ones = np.ones(A, dtype=np.uint8)

    def mask(pos):
        return constraints.get(pos, ones)

    v = np.zeros((A, R))
    v[:, c] = g.stationary * mask(start)
    for pos in range(start, end):
        acc = 0 <= pos < n
        done = min(max(pos, 0), n)          # sums accumulated before this step
        lo, hi = c - done * m, c + done * m
        v = kernels.dp_step(v, pi, phi, mask(pos + 1), acc, lo, hi)
        rem = n - min(max(pos + 1, 0), n)   # sums still to come
        reach = min(min(max(pos + 1, 0), n), rem) * m
        if reach < c:
            v[:, :c - reach] = 0.0
            v[:, c + reach + 1:] = 0.0
    return v, c


def sum_distribution(g: GibbsMarkov, step: StepFunction, n: int, limit: int = DP_CELL_BUDGET) -> np.ndarray:
    """Exact law of ``S_n`` under ``nu``: array indexed by ``s + n * max|phi|``.

    Unlike the return DP no pruning towards 0 is applied, so every value of
    the sum is kept.
    """
    A = g.n_states
    m = step.max_abs
    c = n * m
    R = 2 * c + 1
    _check_budget(A * R * (n + 1), limit)
    pi = np.ascontiguousarray(g.transitions)
    phi = np.ascontiguousarray(step.table, dtype=np.int64)
    ones = np.ones(A, dtype=np.uint8)
    v = np.zeros((A, R))
    v[:, c] = g.stationary
    for pos in range(n):
        v = kernels.dp_step(v, pi, phi, ones, True, c - pos * m, c + pos * m)
    return v.sum(axis=0)


def exact_return_probability(g: GibbsMarkov, step: StepFunction, word_a: CylinderWord, word_b,
                             n: int, offset: int | None = None, limit: int = DP_CELL_BUDGET) -> float:
    """``nu(A and {S_n = 0} and x_{n-offset ...} = B)`` by exact DP.

    ``word_a`` is centered at 0; the one-sided ``word_b`` starts at position
    ``n - offset`` (default: centered at ``n``). Compensated summation is used
    within each step; the final reduction uses ``math.fsum``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    word_b = tuple(int(b) for b in word_b)
    if not word_b:
        raise ValueError("word_b must be non-empty")
    if offset is None:
        offset = (len(word_b) - 1) // 2
    A = g.n_states
    ra = word_a.radius - 1
    b0 = n - offset
    constraints: dict[int, np.ndarray] = {}

    def pin(pos, sym):
        m = np.zeros(A, dtype=np.uint8)
        m[sym] = 1
        constraints[pos] = constraints[pos] & m if pos in constraints else m

    for i, s in enumerate(word_a.symbols):
        pin(i - ra, s)
    for i, s in enumerate(word_b):
        pin(b0 + i, s)
    start = min(-ra, b0, 0)
    end = max(ra, b0 + len(word_b) - 1, n)
    v, c = _run_dp(g, step, n, start, end, constraints, limit)
    return math.fsum(v[:, c])


def local_ratio(g: GibbsMarkov, step: StepFunction, word_a: CylinderWord, word_b, n: int,
                sigma2: float | None = None, offset: int | None = None) -> float:
    """``P * sigma sqrt(2 pi n) / (nu(A) nu(B))``, which tends to 1."""
    if sigma2 is None:
        sigma2 = asymptotic_variance(g, step.table)
    prob = exact_return_probability(g, step, word_a, word_b, n, offset)
    return prob * math.sqrt(sigma2 * 2 * math.pi * n) / (word_measure(g, word_a.symbols) * word_measure(g, word_b))


@dataclass(frozen=True)
class LatticeRow:
    n: int
    probability: float
    ratio: float


def llt_lattice_check(g: GibbsMarkov, step: StepFunction, n_list, period: int | None = None,
                      limit: int = DP_CELL_BUDGET) -> tuple[list[LatticeRow], int]:
    """Exact ``P(S_n = 0)`` and ``P * sigma sqrt(2 pi n) / period``.

    For an arithmetic step with lattice period ``d`` the walk can only sit at
    0 when ``d | n``; other ``n`` are dropped. Returns the rows and the period.
    """
    if period is None:
        period = nonarithmeticity_scan(g, step, 256).period
    sigma2 = asymptotic_variance(g, step.table)
    rows = []
    for n in n_list:
        if n % period:
            continue
        dist = sum_distribution(g, step, int(n), limit)
        prob = float(dist[int(n) * step.max_abs])
        rows.append(LatticeRow(int(n), prob, prob * math.sqrt(sigma2 * 2 * math.pi * n) / period))
    return rows, period


def information_variance(g: GibbsMarkov) -> float:
    """``sigma_h^2``: asymptotic variance of ``-log pi(x_0, x_1)``, zero exactly for the maximal-entropy measure."""
    with np.errstate(divide="ignore"):
        info = np.where(g.transitions > 0, -np.log(np.where(g.transitions > 0, g.transitions, 1.0)), 0.0)
    v = asymptotic_variance(g, info)
    return max(v, 0.0) if v > 1e-14 else 0.0
