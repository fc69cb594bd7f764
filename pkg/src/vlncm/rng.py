"""Deterministic RNG derivation.

All randomness in the project flows through seeded ``random.Random``
instances derived from a global seed plus string labels, so results are
reproducible regardless of scheduling or parallelism.
"""

from __future__ import annotations

import hashlib
import random


def derive_rng(seed: int, *labels: str) -> random.Random:
    """Return a ``random.Random`` keyed to ``(seed, *labels)``.

    Uses SHA-256 rather than Python's salted ``hash`` so the derivation is
    stable across processes and interpreter runs.
    """
    material = f"{seed}|" + "|".join(labels)
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))
