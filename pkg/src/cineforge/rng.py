"""Counter-based seeded randomness.

Every random draw in the pipeline is addressed by a key tuple (global seed,
feature, segment, directive, ...) so results never depend on call order or
thread scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _digest(parts: tuple) -> bytes:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return h.digest()


def stream_seed(*parts) -> int:
    """64-bit seed derived from an arbitrary key tuple."""
    return int.from_bytes(_digest(parts), "little") & _MASK64


def unit(*parts) -> float:
    """Uniform float in [0, 1) addressed by ``parts`` (stateless)."""
    return (int.from_bytes(_digest(parts), "little") >> 11) * 2.0**-53


def uniform(lo: float, hi: float, *parts) -> float:
    return lo + (hi - lo) * unit(*parts)


def generator(seed: int) -> np.random.Generator:
    """Philox-backed generator for a stream seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
