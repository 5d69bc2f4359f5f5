"""Kernel equivalence against simple pure-Python oracles.

The oracles below are deliberately independent of noisemill.kernels:
textbook dynamic programs over Python lists.
"""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisemill import kernels
from noisemill.kernels import (
    _lcs_length_numpy,
    _levenshtein_numpy,
    lcs_length,
    levenshtein,
)


def lcs_oracle(a, b) -> int:
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    return dp[m][n]


def levenshtein_oracle(a, b) -> int:
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dp[i][0] = i
    for j in range(n + 1):
        dp[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dp[i][j] = min(dp[i - 1][j] + 1, dp[i][j - 1] + 1, dp[i - 1][j - 1] + cost)
    return dp[m][n]


seqs = st.lists(st.integers(min_value=0, max_value=9), min_size=0, max_size=40)


@given(seqs, seqs)
@settings(max_examples=200, deadline=None)
def test_lcs_matches_oracle(a, b):
    arr_a, arr_b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    expected = lcs_oracle(a, b)
    assert lcs_length(arr_a, arr_b) == expected
    assert _lcs_length_numpy(arr_a, arr_b) == expected


@given(seqs, seqs)
@settings(max_examples=200, deadline=None)
def test_levenshtein_matches_oracle(a, b):
    arr_a, arr_b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    expected = levenshtein_oracle(a, b)
    assert levenshtein(arr_a, arr_b) == expected
    assert _levenshtein_numpy(arr_a, arr_b) == expected


@pytest.mark.parametrize("a,b,lcs,lev", [
    ([], [], 0, 0),
    ([1, 2, 3], [], 0, 3),
    ([], [7], 0, 1),
    ([1, 2, 3], [1, 2, 3], 3, 0),
    ([1, 2, 3, 4], [2, 4], 2, 2),
])
def test_kernel_edges(a, b, lcs, lev):
    arr_a, arr_b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    assert lcs_length(arr_a, arr_b) == lcs
    assert levenshtein(arr_a, arr_b) == lev


def test_backend_default_is_numba():
    assert kernels.ACTIVE_BACKEND == "numba"


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_env_flag_selects_backend(backend):
    code = (
        "from noisemill import kernels; "
        "print(kernels.ACTIVE_BACKEND)"
    )
    env = dict(os.environ, NOISEMILL_KERNEL_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == backend


def test_env_flag_rejects_unknown():
    env = dict(os.environ, NOISEMILL_KERNEL_BACKEND="cuda")
    out = subprocess.run(
        [sys.executable, "-c", "import noisemill.kernels"],
        env=env, capture_output=True, text=True,
    )
    assert out.returncode != 0
    assert "NOISEMILL_KERNEL_BACKEND" in out.stderr
