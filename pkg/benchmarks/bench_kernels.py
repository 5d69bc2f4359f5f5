"""Compare the numba and numpy kernel backends on random token pairs.

Run: python3 benchmarks/bench_kernels.py [--pairs N] [--max-len N]
The active package backend stays whatever NOISEMILL_KERNEL_BACKEND says;
this script times both implementations directly.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from noisemill.kernels import (
    _lcs_length_loops,
    _lcs_length_numpy,
    _levenshtein_loops,
    _levenshtein_numpy,
)

try:
    from numba import njit

    HAVE_NUMBA = True
    _lcs_numba = njit(cache=True, nogil=True)(_lcs_length_loops)
    _lev_numba = njit(cache=True, nogil=True)(_levenshtein_loops)
except ImportError:
    HAVE_NUMBA = False


def make_pairs(n_pairs: int, max_len: int, seed: int = 0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    pairs = []
    for _ in range(n_pairs):
        la, lb = rng.integers(1, max_len + 1, size=2)
        pairs.append((
            rng.integers(0, 50, size=int(la)).astype(np.int64),
            rng.integers(0, 50, size=int(lb)).astype(np.int64),
        ))
    return pairs


def bench(fn, pairs) -> tuple[float, int]:
    start = time.perf_counter()
    acc = 0
    for a, b in pairs:
        acc += int(fn(a, b))
    return time.perf_counter() - start, acc


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=5000)
    parser.add_argument("--max-len", type=int, default=64)
    args = parser.parse_args()

    pairs = make_pairs(args.pairs, args.max_len)
    rows = [("lcs/numpy", _lcs_length_numpy), ("lev/numpy", _levenshtein_numpy)]
    if HAVE_NUMBA:
        # warm the JIT outside the timed region
        _lcs_numba(*pairs[0])
        _lev_numba(*pairs[0])
        rows += [("lcs/numba", _lcs_numba), ("lev/numba", _lev_numba)]
    else:
        print("numba unavailable; timing numpy fallback only")

    results = {}
    for name, fn in rows:
        elapsed, acc = bench(fn, pairs)
        results[name] = (elapsed, acc)
        print(f"{name:<12} {elapsed * 1e3:9.1f} ms  checksum={acc}")

    for kernel in ("lcs", "lev"):
        np_key, nb_key = f"{kernel}/numpy", f"{kernel}/numba"
        if nb_key in results:
            assert results[np_key][1] == results[nb_key][1], "backend results differ"
            speedup = results[np_key][0] / results[nb_key][0]
            print(f"{kernel}: numba is {speedup:.1f}x vs numpy")


if __name__ == "__main__":
    main()
