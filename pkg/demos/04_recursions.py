"""
Deterministic recursions behind the CLT
=======================================

The second moment of sqrt(n)(Z_n - 1/2) follows a linear recursion whose
limit is the CLT variance. How fast it gets there depends on Gamma - 1/2.
"""

import numpy as np

from mixedurn.recursions import CfRecursionSpec, cf_recursion, second_moment_recursion

# Gamma - 1/2 = 0.1: the error shrinks only like n**-0.2
slow = second_moment_recursion(0.1, 0.16, 0.0, 10**6, checkpoints=[10**k for k in range(1, 7)])
for n, v, r in slow.rows():
    print(f"n={n:>8}  b_n={v:.4f}  |b_n - 0.8|={r:.4f}")

# a larger contraction converges quickly
fast = second_moment_recursion(1.0, 1.0, 0.0, 10**5)
print("\na=1: b_n at 1e5 =", round(fast.final, 6), "(limit 0.5)")

# the characteristic-function recursion has the same slow approach
t = np.linspace(-3, 3, 61)
for n in (10**3, 10**4, 10**5):
    res = cf_recursion(CfRecursionSpec(0.6, 0.16, tuple(t), n))
    print(f"N={n:>6}  sup |beta_N - exp(-0.4 t^2)| = {res.sup_gap:.4f}")
