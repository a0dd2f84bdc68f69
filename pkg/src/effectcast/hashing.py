"""Stable hashing helpers.

Python's builtin ``hash()`` is salted per process, so anything that must be
reproducible across runs (seed derivation, cache keys, the mock generator
key) goes through these functions instead.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1


def seed_bytes(seed: int) -> bytes:
    """8-byte little-endian encoding of a seed, reduced to 64 bits."""
    return (seed & MASK64).to_bytes(8, "little")


def stable_hash64(*parts: bytes) -> int:
    """64-bit hash of length-prefixed byte parts, stable across processes."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(len(part).to_bytes(8, "little"))
        h.update(part)
    return int.from_bytes(h.digest(), "little")


def derive_seed(seed: int, label: str) -> int:
    """Mix a string label into a seed; same (seed, label) -> same result."""
    return (seed ^ stable_hash64(label.encode("utf-8"))) & MASK64
