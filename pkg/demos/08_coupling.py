"""
Coupling with a linear process
==============================

Run the urn next to a linear autoregression driven by the same martingale
increments. Their L1 distance shrinks, which is the core of the CLT proof.
"""

from mixedurn import UrnParams, derived_constants
from mixedurn.harness import coupling_l1

params = UrnParams(1, 3, 2, 0.25)
k = derived_constants(params)
res = coupling_l1(params, k, 2000, [100, 1000, 10_000], master_seed=7)
for n, dl, dd in zip(res.checkpoints, res.mean_abs_delta, res.mean_abs_d):
    print(f"n={n:>6}  E|Delta|={dl:.4f}  E|D|={dd:.3f}")
print("|V| bound violations:", res.v_violations)
