"""Seeded, portable random sampling.

Every random draw in this package goes through the Philox-4x64 counter-based
generator, keyed directly with the pair ``(seed, stream)``.  Distinct stream
ids give statistically independent sequences from the same user seed, so
per-class (or per-trial) work can run in any order, or in parallel, and still
produce bit-identical results.

Normal deviates use the inverse-CDF transform: each 64-bit Philox word is
reduced to a centered 52-bit uniform ``u = (k + 1/2) * 2**-52`` (strictly
inside (0, 1)) and mapped through ``scipy.special.ndtri``.  No libm
trigonometry is involved, so the bytes are reproducible across platforms.

Child seeds (e.g. one per benchmark trial) are derived with the SplitMix64
finalizer, chained over the integer path ``(seed, id0, id1, ...)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


def _splitmix64(value: int) -> int:
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & _MASK64
    return value ^ (value >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Derive a child seed from ``seed`` and a path of non-negative ids."""
    state = _splitmix64(seed & _MASK64)
    for part in path:
        state = _splitmix64(state ^ (int(part) & _MASK64))
    return state


def stream_id(domain: int, index: int = 0) -> int:
    """Pack a (domain, index) pair into one 64-bit stream id.

    ``domain`` separates unrelated uses of the same seed (16 bits);
    ``index`` enumerates parallel substreams within a domain (48 bits),
    e.g. one per class.
    """
    if not 0 <= index < (1 << 48):
        raise ValueError(f"stream index out of range: {index}")
    if not 0 <= domain < (1 << 16):
        raise ValueError(f"stream domain out of range: {domain}")
    return (domain << 48) | index


def raw_uint64(n: int, seed: int, stream: int = 0) -> np.ndarray:
    """``n`` raw 64-bit words from the (seed, stream) Philox sequence."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key).random_raw(n)


def uniform_open(shape, seed: int, stream: int = 0) -> np.ndarray:
    """Uniform draws strictly inside (0, 1), shaped ``shape``."""
    shape = tuple(np.atleast_1d(shape).astype(int)) if not np.isscalar(shape) else (int(shape),)
    n = int(np.prod(shape)) if shape else 1
    raw = raw_uint64(n, seed, stream)
    # top 52 bits, centered: u = (k + 1/2) / 2**52, exactly representable
    u = ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52
    return u.reshape(shape)


def standard_normal(shape, seed: int, stream: int = 0) -> np.ndarray:
    """Standard-normal draws via the inverse CDF of :func:`uniform_open`."""
    return ndtri(uniform_open(shape, seed, stream))
