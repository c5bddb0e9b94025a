"""
Iterated-logarithm envelope
===========================

With a strong Friedman drift, sqrt(n / (2 log log n)) (Z_n - 1/2) stays
inside a band set by sigma / sqrt(2 alpha + 1). This is only a sanity
check; the limsup itself needs far longer paths.
"""

import numpy as np

from mixedurn import UrnParams, derived_constants
from mixedurn.harness import lil_envelope

params = UrnParams(1, 10, 1, 0.5)
k = derived_constants(params)
grid = [int(n) for n in np.unique(np.logspace(1, 4, 13).round())]
v = lil_envelope(params, k, 50, 10_000, grid, master_seed=42)
print("largest scaled excursion:", round(v.observed, 3))
print("limsup scale            :", round(k.lil_scale, 3))
print("band (3x scale)         :", round(v.target, 3), "->", "inside" if v.passed else "outside")
