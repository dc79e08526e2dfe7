"""Seeded random streams.

Every stochastic routine in the package draws from a PCG64 generator whose
state is derived from a tuple of non-negative integer keys through numpy's
``SeedSequence`` hashing. Streams keyed on ``(seed, tree_index)`` or
``(seed, generation, candidate)`` are independent of evaluation order.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(*keys):
    """Return a ``numpy.random.Generator`` for the given integer keys."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) & _MASK64 for k in keys])))
