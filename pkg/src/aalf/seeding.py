"""Seed derivation so that results never depend on scheduling order."""

from __future__ import annotations

import hashlib

import numpy as np


def _token(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(master: int, *parts) -> int:
    """Deterministic 32-bit seed from a master seed and any number of labels."""
    seq = np.random.SeedSequence([_token(master), *(_token(p) for p in parts)])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def derive_rng(master: int, *parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *parts))
