"""Counter-based random streams built on the SplitMix64 finalizer.

Every uniform is a pure function of ``(stream_seed, counter)``, so draws can
be generated for one replicate at a time or for a whole vector of replicates
at once and the bits agree.  Replicate seeds are derived from a master seed
and the replicate index the same way, which makes parallel replication
independent of scheduling order.

Derivation rule (``SEED_RULE``)::

    replicate_seed(master, i) = mix64(master + (i + 1) * GOLDEN)      mod 2**64
    raw(seed, k)              = mix64(seed ^ mix64((k + 1) * GOLDEN))
    uniform(seed, k)          = (raw(seed, k) >> 11) * 2**-53

Step ``n -> n + 1`` of an urn path consumes counter ``2n`` for the rule draw
and ``2n + 1`` for the colour draw.
"""

import numpy as np

SEED_RULE = "splitmix64-counter-v1"

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix64(z):
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def counter_key(counter):
    return mix64(((counter + 1) * GOLDEN) & MASK64)


def replicate_seed(master_seed, index):
    return mix64((master_seed + (index + 1) * GOLDEN) & MASK64)


def replicate_seeds(master_seed, start, stop):
    """Seeds for replicate indices ``start .. stop - 1`` as a uint64 array."""
    idx = np.arange(start + 1, stop + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(master_seed & MASK64) + idx * np.uint64(GOLDEN)
    return mix64_array(z)


def uniform(seed, counter):
    return (mix64(seed ^ counter_key(counter)) >> 11) * _INV53


def uniform_array(seeds, counter):
    """Uniforms in [0, 1) for every seed in ``seeds`` at one counter."""
    raw = mix64_array(seeds ^ np.uint64(counter_key(counter)))
    return (raw >> np.uint64(11)).astype(np.float64) * _INV53


class CounterRNG:
    """Sequential view of one counter-based stream.

    >>> rng = CounterRNG(7)
    >>> rng.random() == uniform(7, 0)
    True
    """

    def __init__(self, seed, counter=0):
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.counter = counter

    def random(self):
        u = uniform(self.seed, self.counter)
        self.counter += 1
        return u
