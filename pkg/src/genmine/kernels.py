"""Hot numeric kernels: pairwise cosine accumulation for the diversity metric.

Two interchangeable backends compute the same multiset of pairwise dot
products over unit-normalized rows:

  * "numba": @njit parallel loops (the default when numba imports cleanly);
  * "numpy": a vectorized einsum fallback with no JIT dependency.

Select with the GENMINE_KERNELS environment variable (auto | numba | numpy)
or per call via the backend argument.  Both backends sort the pair values
before summing, so the result is bit-identical under any permutation of the
input rows; see benchmarks/bench_kernels.py for a speed comparison.

Rows must be unit-normalized by the caller (zero vectors have no cosine and
are dropped upstream).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

BACKENDS = ("numba", "numpy")


def _resolve_backend(requested: str | None = None) -> str:
    choice = requested or os.environ.get("GENMINE_KERNELS", "auto").lower()
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice not in BACKENDS:
        raise ValueError(f"unknown kernel backend {choice!r}; expected auto, numba or numpy")
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return choice


def active_backend() -> str:
    return _resolve_backend()


if HAS_NUMBA:

    @njit(parallel=True, cache=True)
    def _pair_dots_numba(rows):  # pragma: no cover - exercised via wrapper
        n, d = rows.shape
        total = n * (n - 1) // 2
        out = np.empty(total, dtype=np.float64)
        for i in prange(n):
            base = i * n - (i * (i + 1)) // 2 - (i + 1)
            for j in range(i + 1, n):
                acc = 0.0
                for t in range(d):
                    acc += rows[i, t] * rows[j, t]
                out[base + j] = acc
        return out


def _pair_dots_numpy(rows: np.ndarray) -> np.ndarray:
    # optimize=False keeps einsum on its sequential C path: each (i, j) entry
    # accumulates over the feature axis in a fixed order, independent of row
    # position, which the sort-before-sum determinism contract relies on.
    gram = np.einsum("id,jd->ij", rows, rows, optimize=False)
    iu = np.triu_indices(rows.shape[0], k=1)
    return gram[iu]


def pair_dots(unit_rows: np.ndarray, backend: str | None = None) -> np.ndarray:
    """All C(n, 2) pairwise dot products of the rows, unordered pairs i<j."""
    rows = np.ascontiguousarray(unit_rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D matrix of row vectors")
    if rows.shape[0] < 2:
        raise ValueError("need at least 2 vectors for pairwise similarity")
    if _resolve_backend(backend) == "numba":
        return _pair_dots_numba(rows)
    return _pair_dots_numpy(rows)


def mean_pairwise_cosine(unit_rows: np.ndarray, backend: str | None = None) -> float:
    """Mean dot product over all unordered row pairs (rows pre-normalized).

    Pair values are sorted before summation, making the result exactly
    invariant under row permutation.
    """
    dots = pair_dots(unit_rows, backend=backend)
    dots.sort()
    return float(dots.sum() / dots.shape[0])
