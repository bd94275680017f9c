"""Seed derivation and generator construction.

Every random choice in the package flows from a single master seed. Child
streams are derived as ``blake2b(master, tag, *indices)`` truncated to 64
bits, so a stream depends only on its name and position and never on the
order in which other streams were consumed. This is what makes results
independent of worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, tag: str, *indices: int) -> int:
    """Return the 64-bit child seed for ``(master, tag, indices)``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    h.update(b"\x00")
    h.update(tag.encode())
    for i in indices:
        h.update(b"\x00")
        h.update(str(int(i)).encode())
    return int.from_bytes(h.digest(), "little")


def make_rng(master: int, tag: str | None = None, *indices: int) -> np.random.Generator:
    """PCG64 generator for the named child stream (or the master stream)."""
    seed = int(master) if tag is None else derive_seed(master, tag, *indices)
    return np.random.Generator(np.random.PCG64(seed))


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    if seed_or_rng is None:
        raise ValueError("a seed is required")
    return make_rng(int(seed_or_rng))
