"""Deterministic seed derivation and generator construction.

Every randomized routine in the package takes an explicit integer seed and
builds its generator through make_rng, so any run is reproducible from the
recorded seeds alone.  Substreams (one per sketch in a batch, one per trial
in an experiment) are derived by folding indices into the base seed with a
SplitMix64-style mixer rather than by drawing from a shared generator, which
keeps substreams independent of evaluation order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 scrambling round, a cheap 64-bit avalanche hash."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *indices: int) -> int:
    """Fold integer indices into a base seed, one xor-and-mix per index.

    derive_seed(s) == s, and appending indices never collides with a
    different index path in practice (the mixer is bijective per round).
    """
    s = base_seed & _MASK64
    for ix in indices:
        s = splitmix64(s ^ splitmix64(ix & _MASK64))
    return s


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
