"""
Derived constants of the mixed urn
==================================

Each draw uses the Friedman rule with probability p and the Polya rule
otherwise. Everything the limit theorems need is a rational function
of (a, b, c, p).
"""

from fractions import Fraction

from mixedurn import UrnParams, derived_constants

# exact arithmetic: give p as a Fraction
params = UrnParams(a=1, b=3, c=2, p=Fraction(1, 4))
k = derived_constants(params, exact=True)

print("lambda (mean step)     :", k.lam)
print("Gamma                  :", k.gamma)
print("sigma^2                :", k.sigma_sq)
print("CLT condition holds    :", k.clt_ok)
print("limit variance         :", k.limit_variance)

# the LIL needs a much stronger Friedman drift
lil = derived_constants(UrnParams(1, 10, 1, 0.5))
print("\nLIL params (1,10,1,1/2): lil_ok =", lil.lil_ok, " scale =", round(lil.lil_scale, 4))

# a Polya-dominated urn has no Gaussian limit
print("(5,1,2,1/2) clt_ok     :", derived_constants(UrnParams(5, 1, 2, 0.5)).clt_ok)
