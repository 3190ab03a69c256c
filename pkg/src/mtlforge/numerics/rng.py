"""Seeded random source with labelled, mutually independent sub-streams.

The generator is numpy's PCG64.  A sub-stream is identified by the root seed
plus the path of labels used to reach it, hashed into a ``SeedSequence``
spawn key, so drawing from ``rng.split("mask")`` never perturbs what
``rng.split("shuffle")`` produces.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label: str | int) -> int:
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


class Rng:
    algorithm_name = "PCG64"

    def __init__(self, seed: int, path: tuple = ()):
        if not 0 <= int(seed) < 2 ** 64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)
        sequence = np.random.SeedSequence(self.seed, spawn_key=tuple(_label_key(p) for p in self.path))
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def split(self, label: str | int) -> "Rng":
        """Independent stream keyed by ``label``; does not consume from ``self``."""
        return Rng(self.seed, self.path + (label,))

    def random(self, size=None):
        return self.generator.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={self.path!r})"
