"""Compare the numba and numpy pairwise-cosine backends.

Times pair_dots over unit-normalized random matrices at several sizes,
checks that both backends agree bitwise after the permutation-stable
sort, and prints a small table with the speedup. The first numba call
includes JIT compilation, so every backend gets an untimed warmup.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--dim D]
"""

import argparse
import time

import numpy as np

from genmine.kernels import BACKENDS, HAS_NUMBA, mean_pairwise_cosine, pair_dots

SIZES = (64, 256, 1024, 4096)


def unit_rows(n: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def time_backend(backend: str, rows: np.ndarray, repeats: int) -> float:
    pair_dots(rows[:8], backend=backend)  # warmup / JIT
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        pair_dots(rows, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--dim", type=int, default=384)
    args = parser.parse_args()

    backends = [b for b in BACKENDS if b != "numba" or HAS_NUMBA]
    if "numba" not in backends:
        print("numba unavailable; timing the numpy backend only")

    header = f"{'rows':>6} {'dim':>5}"
    for backend in backends:
        header += f" {backend + ' (ms)':>12}"
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)

    for n in SIZES:
        rows = unit_rows(n, args.dim, seed=n)
        values = {}
        timings = {}
        for backend in backends:
            timings[backend] = time_backend(backend, rows, args.repeats)
            values[backend] = mean_pairwise_cosine(rows, backend=backend)
        # dot products accumulate in different orders per backend, so
        # cross-backend agreement is to rounding, not bitwise
        if len(backends) == 2 and abs(values["numba"] - values["numpy"]) > 1e-12:
            raise SystemExit(f"backend mismatch at n={n}: {values}")
        line = f"{n:>6} {args.dim:>5}"
        for backend in backends:
            line += f" {timings[backend] * 1e3:>12.3f}"
        if len(backends) == 2:
            line += f" {timings['numpy'] / timings['numba']:>7.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
