"""Benchmark the compiled row kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the per-replicate reduction (mean / sd / capability) on the shapes
the package actually runs hot: simulation cells, bootstrap resample
blocks, and the wide rows of the dispersion-constant check, plus one
end-to-end simulation cell.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from capgate._kernels import _fallback

try:
    from capgate._kernels import _native
except ImportError:
    _native = None

SHAPES = [
    ("simulation cell (B=20000, n=32)", (20_000, 32)),
    ("bootstrap block (B=1000, n=32) x100", (1_000, 32)),
    ("boundary cell (B=20000, n=500)", (20_000, 500)),
    ("dispersion check (B=2000, n=5000)", (2_000, 5000)),
]


def time_call(fn, x, inner=1, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(x, -4.0, 4.0)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    print(f"{'workload':42s} {'python':>10s} {'native':>10s} {'speedup':>8s}")
    for label, shape in SHAPES:
        inner = 100 if "x100" in label else 1
        x = rng.normal(0.0, 1.0, size=shape)
        t_py = time_call(_fallback.row_capability, x, inner, repeat)
        if _native is None:
            print(f"{label:42s} {t_py * 1e3:9.2f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        t_nat = time_call(_native.row_capability, x, inner, repeat)
        print(
            f"{label:42s} {t_py * 1e3:9.2f}ms {t_nat * 1e3:9.2f}ms "
            f"{t_py / t_nat:7.2f}x"
        )


def bench_cell(repeat):
    # end-to-end simulation cell: sampling + reduction + rule evaluation
    import capgate._kernels as kernels
    from capgate.rules import Deterministic
    from capgate.simulate import SimGrid, run_cell

    grid = SimGrid(
        cpk_true_values=(1.33,), n_values=(32,), replications_b=20_000, base_seed=0
    )
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        run_cell(1.33, 32, Deterministic(), grid)
        best = min(best, time.perf_counter() - t0)
    print(f"\nend-to-end cell (B=20000, n=32) via {kernels.BACKEND} backend: "
          f"{best * 1e3:.1f}ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _native is None:
        print("note: compiled extension not available; showing fallback only")
    bench_kernels(args.repeat)
    bench_cell(args.repeat)


if __name__ == "__main__":
    main()
