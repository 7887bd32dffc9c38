"""Deterministic per-component random streams derived from one run seed."""

import zlib

import numpy as np


def stream(seed, name):
    """Return a Generator for component ``name`` under run seed ``seed``.

    The stream key is a CRC32 of the name, so streams are stable across
    processes and independent of call order.
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(key,)))


def as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
