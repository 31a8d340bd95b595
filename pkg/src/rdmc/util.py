"""This module contains several handy functions primarily meant for internal use."""
import math
from time import perf_counter
from typing import Union

import numpy as np

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def round_half_up(value: float) -> int:
    """Round to the nearest integer, with halves going up (``2.5`` → ``3``)."""
    return int(math.floor(value + 0.5))


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round element-wise to the nearest integer, with halves going away from zero."""
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Return a numpy generator for ``seed`` (an existing generator is returned as-is)."""
    return np.random.default_rng(seed)


def spawn_seeds(seed: SeedLike, count: int) -> list:
    """Derive ``count`` independent child seeds from ``seed``."""
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2 ** 63))).spawn(count)
    elif isinstance(seed, np.random.SeedSequence):
        # spawn() on the caller's sequence would advance its child counter
        seed = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key,
                                      pool_size=seed.pool_size)
        return seed.spawn(count)

    return np.random.SeedSequence(seed).spawn(count)


class Stopwatch:
    """Context manager measuring wall time in milliseconds."""

    __slots__ = '_start', 'elapsed_ms'

    def __init__(self):
        self._start = 0.0
        self.elapsed_ms = 0.0

    def __enter__(self) -> 'Stopwatch':
        self._start = perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed_ms = (perf_counter() - self._start) * 1000
