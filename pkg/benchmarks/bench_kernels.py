#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The pairwise intersection popcount dominates every similarity scan, so this
times exactly the two code paths behind ANORANK_BACKEND on matrices shaped
like the loop's hot call (candidate pool x labeled seeds).

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 20000 --cols 1024 --seeds 500
"""

import argparse
import time

import numpy as np

from anorank import kernels


def bench(fn, *args, repeats=5):
    fn(*args)  # warmup (JIT compile + cache touch)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=10_000, help="candidate rows")
    parser.add_argument("--cols", type=int, default=512, help="bit columns")
    parser.add_argument("--seeds", type=int, default=200, help="seed rows per scan")
    parser.add_argument("--density", type=float, default=0.15)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    dense = (rng.random((args.rows, args.cols)) < args.density).astype(np.uint8)
    bits = kernels.pack_rows(dense)
    seeds = bits[: args.seeds]

    if not kernels._NUMBA_OK:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"matrix: {args.rows} x {args.cols} bits "
          f"({bits.shape[1]} words/row), {args.seeds} seeds, best of {args.repeats}")
    print(f"{'kernel':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")

    pairs = args.rows * args.seeds
    t_nb = bench(kernels._numba_intersection_counts, bits, seeds, repeats=args.repeats)
    t_np = bench(kernels._numpy_intersection_counts, bits, seeds, repeats=args.repeats)
    assert np.array_equal(
        kernels._numba_intersection_counts(bits, seeds),
        kernels._numpy_intersection_counts(bits, seeds),
    )
    print(f"{'intersection_counts':<28}{t_nb:>11.4f}s{t_np:>11.4f}s{t_np / t_nb:>9.1f}x"
          f"   ({pairs / t_nb / 1e6:.0f} Mpairs/s numba)")

    t_nb = bench(kernels._numba_popcount_rows, bits, repeats=args.repeats)
    t_np = bench(kernels._numpy_popcount_rows, bits, repeats=args.repeats)
    assert np.array_equal(
        kernels._numba_popcount_rows(bits), kernels._numpy_popcount_rows(bits)
    )
    print(f"{'popcount_rows':<28}{t_nb:>11.4f}s{t_np:>11.4f}s{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
