"""
Simulating paths
================

One path with the scalar reference stepper, then many paths at once with
the vectorised batch. Both consume the same counter-based random stream,
so replicate i gives the same path either way.
"""

import numpy as np

from mixedurn import UrnParams, simulate, simulate_batch
from mixedurn.rng import replicate_seed, replicate_seeds

params = UrnParams(1, 3, 2, 0.25)

# a single path, watched on a log scale
steps = [0, 10, 100, 1000, 10_000, 100_000]
path = simulate(params, replicate_seed(42, 0), steps[-1], steps)
for cp in path.checkpoints:
    print(f"n={cp.n:>6}  T_n={cp.t:>7}  Z_n={cp.z:.4f}")
print("T_n/n ->", path.checkpoints[-1].t / steps[-1], "(lambda = 2.5)")

# 1000 replicates; the first one reproduces the scalar path
y1, t = simulate_batch(params, replicate_seeds(42, 0, 1000), 1000, [1000])
z = y1[:, 0] / t[:, 0]
print("\nbatch of 1000 at n=1000: mean Z =", z.mean().round(4), " sd =", z.std().round(4))
print("replicate 0 matches:", (y1[0, 0], t[0, 0]) == tuple(simulate(params, replicate_seed(42, 0), 1000, [1000]).checkpoints[0][1:]))
