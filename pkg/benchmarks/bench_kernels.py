"""Compare the numba-compiled distance kernels with the pure-numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The numba path is the default; the table below reports both implementations
on the same inputs (after a warm-up call so JIT compilation is excluded)
together with the maximum absolute difference between their outputs.
Set ``IMITAL_NO_NUMBA=1`` to check what the package would use as fallback.
"""

import timeit

import numpy as np

from imital import _kernels

SHAPES = [
    # (candidate rows, reference rows, features) — typical encoding loads
    (40, 10, 10),
    (200, 100, 20),
    (1000, 1000, 20),
    (1000, 1000, 100),
]


def best_of(fn, repeats=5):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def main():
    if not _kernels.USE_NUMBA:
        print("IMITAL_NO_NUMBA=1: only the numpy fallback is available.")
    print(f"numba path active: {_kernels.USE_NUMBA}")
    print()
    header = f"{'shape':<22} {'metric':<10} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9} {'max |diff|':>12}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(0)
    for m, n, f in SHAPES:
        X = rng.random((m, f))
        Y = rng.random((n, f))
        for metric, np_impl in (
            ("euclidean", _kernels._mean_dist_euclidean_np),
            ("cosine", _kernels._mean_dist_cosine_np),
        ):
            t_np = best_of(lambda: np_impl(X, Y))
            row = f"{f'{m}x{n} ({f} feat)':<22} {metric:<10} {1e3 * t_np:>12.3f}"
            if _kernels.USE_NUMBA:
                nb_impl = (
                    _kernels._mean_dist_euclidean_nb
                    if metric == "euclidean"
                    else _kernels._mean_dist_cosine_nb
                )
                nb_impl(X, Y)  # warm-up: exclude JIT compilation
                t_nb = best_of(lambda: nb_impl(X, Y))
                diff = np.max(np.abs(np_impl(X, Y) - nb_impl(X, Y)))
                row += f" {1e3 * t_nb:>12.3f} {t_np / t_nb:>8.2f}x {diff:>12.2e}"
            print(row)


if __name__ == "__main__":
    main()
