"""Deterministic seed derivation.

A master seed fans out to per-task seeds by hashing the master together
with a label path, e.g. ``subseed(master, "inst", depth, i)``.  The scheme
is stable across platforms and Python versions (SHA-256 of the rendered
key tuple), so any subset of an experiment can be rerun independently.
"""

from __future__ import annotations

import hashlib


def subseed(master: int, *parts: object) -> int:
    """Derive a 63-bit child seed from a master seed and a label path."""
    key = ":".join([str(master)] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
