"""Compare the compiled and numpy kernel backends on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 3] [--size 1000000]
"""

import argparse
import time

import numpy as np

from zrecur.kernels import backends
from zrecur.presets import resolve
from zrecur.toy import survival_table
from zrecur.zext import cumulative_rows, letter_map


def cases(size):
    rng = np.random.default_rng(0)
    surv = survival_table()
    u = 1.0 - rng.random(size)
    m = resolve("lazy-walk")
    g = m.gibbs
    cum = cumulative_rows(g.transitions)
    phi = np.ascontiguousarray(m.step.table, dtype=np.int64)
    letters = letter_map(g)
    k = 5
    ring0 = rng.integers(0, 3, 2 * k + 1).astype(np.int64)
    ref = np.full(2 * k + 1, -1, dtype=np.int64)  # never matches: full-length scan
    scan_u = rng.random(size)
    n = 2000
    R = 2 * n + 1
    v0 = np.zeros((g.n_states, R))
    v0[:, n] = g.stationary
    v0 = np.ascontiguousarray(v0)
    allowed = np.ones(g.n_states, dtype=np.uint8)

    def scan(mod):
        ring, state = ring0.copy(), np.zeros(3, dtype=np.int64)
        return mod.zext_scan(ref, ring, state, scan_u, cum, phi, letters, False)

    def dp(mod):
        v = v0
        for j in range(200):
            v = mod.dp_step(v, g.transitions, phi, allowed, True, n - j, n + j)
        return v

    return {
        f"first_return_times ({size})": lambda mod: mod.first_return_times(u, surv),
        f"first_return_sum ({size})": lambda mod: mod.first_return_sum(u, surv, 2**62),
        f"zext_scan ({size} steps)": scan,
        "dp_step (200 steps, 3 x 4001)": dp,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=1_000_000)
    args = ap.parse_args()
    mods = backends()
    print(f"{'kernel':<34}" + "".join(f"{name:>12}" for name in mods) + f"{'speedup':>10}")
    for label, fn in cases(args.size).items():
        times, results = {}, {}
        for name, mod in mods.items():
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                results[name] = fn(mod)
                best = min(best, time.perf_counter() - t0)
            times[name] = best
        vals = list(results.values())
        same = all(np.array_equal(np.asarray(vals[0]), np.asarray(v)) for v in vals[1:])
        speed = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<34}" + "".join(f"{times[n]:>11.4f}s" for n in mods)
              + f"{speed:>9.1f}x" + ("" if same else "  MISMATCH"))


if __name__ == "__main__":
    main()
