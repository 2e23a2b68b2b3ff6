"""One master seed, many named substreams.

Every component that needs randomness (data generation, parameter init,
noise draws, shuffling, splits) derives its own stream from the master
seed plus a purpose name, so components stay decoupled: adding a draw in
one place never shifts the sequence seen by another.
"""

import zlib

import numpy as np

from .errors import ParameterError


def _entropy(seed, names):
    seed = int(seed)
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")
    return [seed] + [zlib.crc32(str(n).encode("utf8")) for n in names]


def substream(seed, *names):
    """Reproducible Generator for a named purpose under a master seed.

    The same (seed, names) always yields the same stream; distinct names
    yield statistically independent streams.
    """
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, names)))


def derive_seed(seed, *names):
    """Deterministic child integer seed for APIs that take a plain seed."""
    ss = np.random.SeedSequence(_entropy(seed, names))
    return int(ss.generate_state(1, np.uint64)[0])
