"""Integer-sequence kernels behind Rouge-L and fuzzy matching.

Two implementations of each kernel: a numba @njit nested loop and a
vectorized pure-numpy row recurrence. The active backend is picked at
import time from the NOISEMILL_KERNEL_BACKEND environment variable
("numba" or "numpy"); default is numba when importable, numpy otherwise.
`benchmarks/bench_kernels.py` compares the two.

Both kernels take 1-d int64 arrays (interned token ids or character
codes) and return a plain int.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_VAR = "NOISEMILL_KERNEL_BACKEND"


def _lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    # Row recurrence. Candidates per cell: diag+1 at matches, up otherwise.
    # The "max with left neighbour" step propagates nothing but the value
    # itself, so a running maximum over the row is exact.
    if a.size == 0 or b.size == 0:
        return 0
    prev = np.zeros(b.size + 1, dtype=np.int64)
    cand = np.empty(b.size + 1, dtype=np.int64)
    for i in range(a.size):
        cand[0] = 0
        np.add(prev[:-1], 1, out=cand[1:], where=(b == a[i]))
        np.copyto(cand[1:], prev[1:], where=(b != a[i]))
        np.maximum.accumulate(cand, out=prev)
    return int(prev[-1])


def _levenshtein_numpy(a: np.ndarray, b: np.ndarray) -> int:
    # Wagner-Fischer with the insertion scan folded into a cummin:
    # c'[j] = min_k<=j (c[k] + j - k) = j + cummin(c - j)[j].
    if a.size == 0:
        return int(b.size)
    if b.size == 0:
        return int(a.size)
    offsets = np.arange(b.size + 1, dtype=np.int64)
    row = offsets.copy()
    new = np.empty(b.size + 1, dtype=np.int64)
    for i in range(a.size):
        new[0] = i + 1
        np.minimum(row[:-1] + (b != a[i]), row[1:] + 1, out=new[1:])
        new -= offsets
        np.minimum.accumulate(new, out=new)
        new += offsets
        row, new = new, row
    return int(row[-1])


def _lcs_length_loops(a, b):  # pragma: no cover - exercised via dispatch
    n = a.shape[0]
    m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int64)
    curr = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        for j in range(m):
            if a[i] == b[j]:
                curr[j + 1] = prev[j] + 1
            elif prev[j + 1] >= curr[j]:
                curr[j + 1] = prev[j + 1]
            else:
                curr[j + 1] = curr[j]
        prev, curr = curr, prev
    return prev[m]


def _levenshtein_loops(a, b):  # pragma: no cover - exercised via dispatch
    n = a.shape[0]
    m = b.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.arange(m + 1, dtype=np.int64)
    curr = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        curr[0] = i + 1
        for j in range(m):
            cost = 0 if a[i] == b[j] else 1
            best = prev[j] + cost
            if prev[j + 1] + 1 < best:
                best = prev[j + 1] + 1
            if curr[j] + 1 < best:
                best = curr[j] + 1
            curr[j + 1] = best
        prev, curr = curr, prev
    return prev[m]


def _resolve_backend() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise ValueError(
            f"{_ENV_VAR} must be 'numba' or 'numpy', got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


ACTIVE_BACKEND = _resolve_backend()

if ACTIVE_BACKEND == "numba":
    from numba import njit

    _lcs_length_numba = njit(cache=True, nogil=True)(_lcs_length_loops)
    _levenshtein_numba = njit(cache=True, nogil=True)(_levenshtein_loops)
    _lcs_impl = _lcs_length_numba
    _lev_impl = _levenshtein_numba
else:
    _lcs_impl = _lcs_length_numpy
    _lev_impl = _levenshtein_numpy


def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
    """Length of the longest common subsequence of two id sequences."""
    return int(_lcs_impl(np.ascontiguousarray(a, dtype=np.int64),
                         np.ascontiguousarray(b, dtype=np.int64)))


def levenshtein(a: np.ndarray, b: np.ndarray) -> int:
    """Unit-cost edit distance between two id sequences."""
    return int(_lev_impl(np.ascontiguousarray(a, dtype=np.int64),
                         np.ascontiguousarray(b, dtype=np.int64)))
