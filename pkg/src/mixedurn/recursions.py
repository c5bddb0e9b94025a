"""Deterministic recursions behind the limit theorems.

* the linear recursion ``h_{n+1} = (1 - L_n/(n+1)) h_n + Q_n/(n+1)``,
  whose limit is ``Q0/L0`` when ``L_n -> L0 > 0`` and ``Q_n -> Q0 >= 0``;
* its squared special case for ``E X_n**2``, limit ``sigma_sq / (2a)``;
* the characteristic-function recursion
  ``beta_{n+1}(t) = beta_n(B_n t) (1 - t**2 sigma_sq / (2(n+1)))``;
* a numeric self-test of the Taylor remainder bound for ``exp(iy)``.
"""

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceDetected, GridError

OVERFLOW_GUARD = 1e12


def log_checkpoints(n_max, per_decade=4):
    """Roughly log-spaced step indices in ``[1, n_max]``, always ending at ``n_max``."""
    if n_max < 1:
        return np.array([], dtype=np.int64)
    count = max(2, int(per_decade * math.log10(max(n_max, 10))) + 1)
    pts = np.unique(np.round(np.logspace(0, math.log10(n_max), count)).astype(np.int64))
    if pts[-1] != n_max:
        pts = np.append(pts, n_max)
    return pts


@dataclass(frozen=True)
class LinearRecursionSpec:
    L: Callable[[int], float]
    Q: Callable[[int], float]
    L0: float
    Q0: float
    h1: float

    def __post_init__(self):
        if not self.L0 > 0:
            raise ValueError("L0 must be positive")
        if not self.Q0 >= 0:
            raise ValueError("Q0 must be non-negative")

    @property
    def limit(self):
        return self.Q0 / self.L0


@dataclass
class RecursionResult:
    n: np.ndarray
    values: np.ndarray
    limit: float

    @property
    def residuals(self):
        return np.abs(self.values - self.limit)

    @property
    def final(self):
        return float(self.values[-1])

    @property
    def final_residual(self):
        return float(self.residuals[-1])

    def rows(self):
        return [(int(n), float(v), float(r)) for n, v, r in zip(self.n, self.values, self.residuals)]

    def to_csv(self, path):
        write_triples(path, self.rows())


def write_triples(path, rows, header=("n", "value", "residual")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _iterate(coeffs, h1, n_max, limit, guard, checkpoints):
    want = set(int(k) for k in checkpoints)
    h = float(h1)
    ns, vals = [], []
    if 1 in want:
        ns.append(1)
        vals.append(h)
    for n in range(1, n_max):
        contraction, forcing = coeffs(n)
        h = contraction * h + forcing
        if not abs(h) <= guard:
            raise DivergenceDetected(f"|h_{n + 1}| exceeded {guard:g}")
        if n + 1 in want:
            ns.append(n + 1)
            vals.append(h)
    return RecursionResult(np.array(ns), np.array(vals), limit)


def solve_linear_recursion(spec, n_max, checkpoints=None, guard=OVERFLOW_GUARD):
    """Iterate the linear recursion from ``h_1`` to ``h_{n_max}`` exactly as written."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if checkpoints is None:
        checkpoints = log_checkpoints(n_max)

    def coeffs(n):
        return 1 - spec.L(n) / (n + 1), spec.Q(n) / (n + 1)

    return _iterate(coeffs, spec.h1, n_max, spec.limit, guard, checkpoints)


def second_moment_recursion(a, sigma_sq, b1, n_max, checkpoints=None):
    """``b_{n+1} = (1 - a/(n+1))**2 b_n + sigma_sq/(n+1)``, limit ``sigma_sq/(2a)``.

    The error decays like ``n**(-2a)``, so small ``a`` converges slowly.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if checkpoints is None:
        checkpoints = log_checkpoints(n_max)

    def coeffs(n):
        return (1 - a / (n + 1)) ** 2, sigma_sq / (n + 1)

    return _iterate(coeffs, b1, n_max, sigma_sq / (2 * a), math.inf, checkpoints)


@dataclass(frozen=True)
class CfRecursionSpec:
    gamma: float
    sigma_sq: float
    t_grid: tuple
    n_steps: int

    def __post_init__(self):
        if not 2 * self.gamma - 1 > 0:
            raise ValueError("need 2*gamma - 1 > 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")

    @property
    def limit_variance(self):
        return self.sigma_sq / (2 * self.gamma - 1)


@dataclass
class CfResult:
    t: np.ndarray
    beta: np.ndarray
    target: np.ndarray
    nonpositive_factor: bool

    @property
    def gap(self):
        return np.abs(self.beta - self.target)

    @property
    def sup_gap(self):
        return float(self.gap.max())


def scale_products(gamma, n_steps):
    """``S_k = prod_{j=k}^{N-1} B_j`` for ``k = 2 .. N`` with ``B_j = 1 - (gamma - 1/2)/(j+1)``."""
    j = np.arange(2, n_steps, dtype=np.float64)
    B = 1.0 - (gamma - 0.5) / (j + 1.0)
    # suffix products accumulated backwards; S_N is the empty product
    suffix = np.cumprod(B[::-1])[::-1]
    return np.append(suffix, 1.0)


def cf_recursion(spec, chunk=64):
    """Evaluate ``beta_N(t)`` on a grid by unrolling the argument scaling.

    ``beta_N(t) = prod_{k=2}^{N} (1 - (t S_k)**2 sigma_sq / (2k))`` since
    ``beta_1 = 1``.  Factors are not clamped; a non-positive one is reported
    through ``nonpositive_factor``.
    """
    t = np.atleast_1d(np.asarray(spec.t_grid, dtype=np.float64))
    if t.size == 0:
        raise GridError("t_grid is empty")
    N = spec.n_steps
    target = np.exp(-0.5 * t**2 * spec.limit_variance)
    if N == 1:
        return CfResult(t, np.ones_like(t), target, False)
    S2 = scale_products(spec.gamma, N) ** 2
    k = np.arange(2, N + 1, dtype=np.float64)
    w = S2 * spec.sigma_sq / (2.0 * k)
    log_abs = np.empty_like(t)
    negatives = np.zeros(t.shape, dtype=np.int64)
    flagged = False
    for lo in range(0, t.size, chunk):
        tt = t[lo : lo + chunk, None] ** 2
        factors = 1.0 - tt * w[None, :]
        flagged |= bool((factors <= 0).any())
        with np.errstate(divide="ignore"):
            log_abs[lo : lo + chunk] = np.log(np.abs(factors)).sum(axis=1)
        negatives[lo : lo + chunk] = (factors < 0).sum(axis=1)
    beta = np.where(negatives % 2 == 1, -1.0, 1.0) * np.exp(log_abs)
    return CfResult(t, beta, target, flagged)


def beta_direct(gamma, sigma_sq, n_steps, t):
    """Scalar ``beta_N(t)`` by the literal recursion, tracking the scaled argument.

    O(N**2); intended as an independent check of :func:`cf_recursion` at small N.
    """

    def beta(n, s):
        if n == 1:
            return 1.0
        m = n - 1
        B = 1.0 - (gamma - 0.5) / (m + 1)
        return beta(m, B * s) * (1.0 - s * s * sigma_sq / (2.0 * n))

    return beta(n_steps, float(t))


def taylor_remainder_violation(y_grid, n):
    """Largest excess of ``|e^{iy} - sum_{k<=n} (iy)^k/k!|`` over ``min(2|y|^n/n!, |y|^{n+1}/(n+1)!)``.

    Zero means the bound holds at every grid point.
    """
    if n not in range(5):
        raise ValueError("n must be in 0..4")
    y = np.asarray(y_grid, dtype=np.float64)
    partial = np.zeros(y.shape, dtype=np.complex128)
    term = np.ones(y.shape, dtype=np.complex128)
    for k in range(n + 1):
        partial += term
        term = term * 1j * y / (k + 1)
    lhs = np.abs(np.exp(1j * y) - partial)
    ay = np.abs(y)
    rhs = np.minimum(2 * ay**n / math.factorial(n), ay ** (n + 1) / math.factorial(n + 1))
    return float(np.max(lhs - rhs, initial=0.0)) if y.size else 0.0


cf_taylor_bound_check = taylor_remainder_violation
