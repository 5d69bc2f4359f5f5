"""Counter-based deterministic random streams.

Every noising decision is drawn from a generator keyed by (global seed,
record index, stream label), so corpus generation is order-independent:
record i gets the same bytes whether it is processed first, last, or on
another worker. Python's built-in hash() is salted per process, so keys
are derived with blake2b instead.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(*parts: int | str) -> int:
    """Mix parts into a stable 128-bit integer key."""
    h = hashlib.blake2b(digest_size=16)
    for part in parts:
        if isinstance(part, int):
            # decimal text: total for any width, stable across platforms
            h.update(b"i")
            h.update(str(part).encode("ascii"))
        else:
            h.update(b"s")
            h.update(str(part).encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def spawn(*parts: int | str) -> np.random.Generator:
    """A Philox generator deterministically derived from the key parts."""
    return np.random.Generator(np.random.Philox(key=derive_key(*parts)))
