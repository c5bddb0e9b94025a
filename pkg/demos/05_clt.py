"""
Central limit behaviour
=======================

Sample sqrt(n)(Z_n - 1/2) across replicates and compare with the
Gaussian limit. At moderate n the variance is still well below 0.8.
"""

from mixedurn import UrnParams, derived_constants
from mixedurn.harness import cf_gap, clt_samples, clt_test

params = UrnParams(1, 3, 2, 0.25)
k = derived_constants(params)

for n in (100, 1000, 5000):
    s = clt_samples(params, n, 5000, master_seed=42)
    res = clt_test(s, k)
    print(f"n={n:>5}  mean={res.mean.observed:+.4f}  var={res.variance.observed:.4f}  KS={res.ks.observed:.4f}")

gap = cf_gap(s, k, [0.5, 1.0, 2.0])
print("\nempirical CF - Gaussian at t=0.5,1,2 :", (gap.phi_hat - gap.gaussian).round(4))
print("target variance:", round(k.limit_variance, 6))
