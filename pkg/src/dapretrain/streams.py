"""Seeded, splittable random streams.

Streams are Philox (counter-based) generators keyed by a root seed and a
path of non-negative integers, so ``stream(7, 3, 1)`` is the same sequence in
every process and never overlaps ``stream(7, 3, 2)``.
"""
import numpy as np


def stream(seed, *path):
    """Return a Generator for ``seed`` and the sub-stream ``path``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def child(rng, *path):
    """Derive an independent Generator from an existing one.

    Uses the parent's seed sequence, so the result depends only on how the
    parent was created and ``path``, not on how much of it was consumed.
    """
    ss = rng.bit_generator.seed_seq
    key = tuple(ss.spawn_key) + tuple(int(p) for p in path)
    sub = np.random.SeedSequence(ss.entropy, spawn_key=key)
    return np.random.Generator(np.random.Philox(sub))


def as_generator(rng):
    """Accept an int seed or an existing Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(rng)
