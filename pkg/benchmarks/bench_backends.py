#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_backends.py [--ticks N]

Times the three hot paths (scalar gain sweep, one closed-loop stepping
run, certificate grid fill) on every available backend and prints a
comparison table.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pedelec import _purekern

PARAMS = dict(eta=0.2, gamma=0.02, pt_min=80.0, pt_max=250.0)
KAPPA, EPS = 0.5, 25.0


def backends():
    out = [("python", _purekern)]
    try:
        from pedelec import _fastkern

        out.append(("cython", _fastkern))
    except ImportError:
        pass
    return out


def bench_scalar(kern, n: int) -> float:
    rng = np.random.default_rng(0)
    m = rng.uniform(0.2, 1.0, n)
    p = rng.uniform(0.0, 600.0, n)
    t0 = time.perf_counter()
    acc = 0.0
    for mi, pi in zip(m, p):
        acc += kern.f_gain(pi, mi, **PARAMS)
    dt = time.perf_counter() - t0
    assert acc > 0.0
    return dt


def bench_stepping(kern, ticks: int) -> float:
    rng = np.random.default_rng(1)
    p_h = rng.uniform(20.0, 300.0, ticks)
    m_s = rng.uniform(0.2, 0.95, ticks)
    t0 = time.perf_counter()
    out = kern.bifurcation_series(
        30.0, p_h, m_s, 1.0, 10, True, KAPPA, EPS, **PARAMS
    )
    dt = time.perf_counter() - t0
    assert np.all(np.isfinite(out))
    return dt


def bench_grid(kern, n: int) -> float:
    m_grid = np.linspace(0.2, 1.0, n)
    p_grid = np.linspace(0.0, 850.0, n)
    t0 = time.perf_counter()
    f, dfdm, dfdp = kern.schedule_grid(m_grid, p_grid, **PARAMS)
    dt = time.perf_counter() - t0
    assert f.shape == (n, n)
    return dt


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scalar-n", type=int, default=200_000)
    parser.add_argument("--ticks", type=int, default=100_000)
    parser.add_argument("--grid-n", type=int, default=1024)
    args = parser.parse_args()

    rows = []
    for name, kern in backends():
        rows.append(
            (
                name,
                bench_scalar(kern, args.scalar_n),
                bench_stepping(kern, args.ticks),
                bench_grid(kern, args.grid_n),
            )
        )

    print(f"{'backend':<10} {'scalar f_gain':>14} {'rk4 stepping':>14} {'grid fill':>12}")
    print(f"{'':<10} {f'({args.scalar_n} calls)':>14} {f'({args.ticks} ticks)':>14} "
          f"{f'({args.grid_n}^2)':>12}")
    base = rows[0]
    for name, s, st, g in rows:
        print(f"{name:<10} {s:>12.3f} s {st:>12.3f} s {g:>10.3f} s")
    if len(rows) == 2:
        _, s0, st0, g0 = rows[0]
        _, s1, st1, g1 = rows[1]
        print(f"{'speedup':<10} {s0 / s1:>12.1f} x {st0 / st1:>12.1f} x {g0 / g1:>10.1f} x")


if __name__ == "__main__":
    main()
