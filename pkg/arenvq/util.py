import functools
import numpy as np


def memoize(obj):
    # Cached values are shared, so callers must not mutate array results.
    cache = obj.cache = {}

    @functools.wraps(obj)
    def memoizer(*args):
        if args not in cache:
            cache[args] = obj(*args)
        return cache[args]
    return memoizer


def derive_seed(seed, *keys):
    """
    Derive an independent 64-bit seed from a base seed and integer keys.

    Used to give every (image, step, sweep value) its own reproducible stream.
    """
    sequence = np.random.SeedSequence([int(seed)] + [int(k) for k in keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
