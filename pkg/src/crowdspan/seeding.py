"""Deterministic random streams.

Every randomized operation in this package draws from a Mersenne Twister
(``random.Random``) seeded through SHA-256 of a label tuple. Seeding through a
hash means independent subsystems (partitioning, assignment, subsampling,
simulation) get decorrelated streams from one root seed, and results are
bit-identical across runs and platforms for the same Python version.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    """Map a root seed plus context labels to a 64-bit integer seed."""
    material = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def derived_rng(*parts: object) -> random.Random:
    """A fresh Mersenne Twister for the given (seed, labels...) context."""
    return random.Random(derive_seed(*parts))
