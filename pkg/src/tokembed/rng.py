"""Deterministic random-stream management.

Every stochastic choice in the package (parameter init, minibatch shuffling,
dropout masks, corpus subsampling) draws from a numpy Generator derived from
one user-supplied seed.  Streams are split with a fixed registry so adding
draws to one component never perturbs another, which is what makes whole
training runs reproducible bit-for-bit from a single seed.
"""

import numpy as np

# Component name -> spawn key.  Append only; renumbering breaks reproducibility.
_STREAMS = {
    "init": 0,
    "shuffle": 1,
    "dropout": 2,
    "subsample": 3,
    "data": 4,
}


def stream(seed: int, name: str) -> np.random.Generator:
    """Return the Generator for component ``name`` under ``seed``."""
    if name not in _STREAMS:
        raise ValueError(f"unknown rng stream {name!r}")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence((int(seed), _STREAMS[name]))
    return np.random.Generator(np.random.PCG64(ss))
