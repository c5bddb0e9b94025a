"""
Large deviations
================

P(|Z_n - 1/2| > eps) decays exponentially in n. Only the sign of the
fitted rate is meaningful; the constant is not known in closed form.
"""

from mixedurn import UrnParams
from mixedurn.harness import ldp_decay

params = UrnParams(1, 3, 2, 0.25)
res = ldp_decay(params, 0.1, [100, 200, 400, 800], 20_000, master_seed=42)
for n, c, p in zip(res.n_grid, res.counts, res.probabilities):
    print(f"n={n:>4}  exceedances={c:>5}  P~{p:.4f}")
print("fitted log-slope:", f"{res.slope:.2e}")
for v in res.verdicts:
    print(v.criterion, "pass" if v.passed else "fail")
