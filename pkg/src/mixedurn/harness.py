"""Monte Carlo estimators for the limit theorems, each ending in a Verdict.

Replicates are generated in fixed-size chunks of consecutive indices and
reassembled in index order, so the worker count never changes a result.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .core import UrnBatch, require_positive_rules, simulate_batch
from .errors import (
    CltConditionViolated,
    InsufficientExceedances,
    LilConditionViolated,
)
from .recursions import CfRecursionSpec, cf_recursion
from .rng import SEED_RULE, replicate_seeds

CHUNK = 2048
BURN_IN = 50


@dataclass
class Verdict:
    criterion: str
    observed: float
    target: float
    tolerance: float
    passed: bool
    standard_error: Optional[float] = None
    sided: str = "two"
    low_power: bool = False
    note: str = ""

    @classmethod
    def two_sided(cls, criterion, observed, target, tolerance, **kw):
        passed = abs(observed - target) <= tolerance
        return cls(criterion, float(observed), float(target), float(tolerance), bool(passed), **kw)

    @classmethod
    def upper(cls, criterion, observed, bound, **kw):
        """Pass when ``observed <= bound``."""
        return cls(criterion, float(observed), float(bound), 0.0, bool(observed <= bound), sided="upper", **kw)

    @property
    def failed(self):
        return not self.passed and not self.low_power

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class SampleSet:
    params: object
    n: int
    values: np.ndarray
    master_seed: int
    seed_rule: str = SEED_RULE

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("a SampleSet needs at least two replicate values")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sample values must be finite")

    @property
    def replicates(self):
        return self.values.size


def default_workers():
    env = os.environ.get("MIXEDURN_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_replicates(func, args, replicates, workers=1, chunk=CHUNK):
    """Run ``func(*args, start, stop)`` over index chunks and concatenate along axis 0."""
    bounds = [(lo, min(lo + chunk, replicates)) for lo in range(0, replicates, chunk)]
    if workers <= 1 or len(bounds) == 1:
        parts = [func(*args, lo, hi) for lo, hi in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(func, *args, lo, hi) for lo, hi in bounds]
            parts = [f.result() for f in futures]
    return np.concatenate(parts, axis=0)


def _terminal_chunk(params, horizon, checkpoints, master_seed, lo, hi):
    y1, t = simulate_batch(params, replicate_seeds(master_seed, lo, hi), horizon, checkpoints)
    return np.stack([y1, t], axis=-1)


def terminal_compositions(params, horizon, replicates, master_seed, checkpoints=None, workers=1):
    """``(y1, t)`` arrays of shape ``(replicates, len(checkpoints))``."""
    if checkpoints is None:
        checkpoints = [horizon]
    out = map_replicates(
        _terminal_chunk, (params, horizon, list(checkpoints), master_seed), replicates, workers
    )
    return out[..., 0], out[..., 1]


def clt_samples(params, horizon, replicates, master_seed, workers=1):
    """``sqrt(n) (Z_n - 1/2)`` at ``n = horizon`` for each replicate."""
    y1, t = terminal_compositions(params, horizon, replicates, master_seed, workers=workers)
    values = math.sqrt(horizon) * (y1[:, 0] / t[:, 0] - 0.5)
    return SampleSet(params, horizon, values, master_seed)


def growth_rate(t_n, n, params, constants):
    """Compare ``(T_n - T_0)/n`` with the mean step size, 4-sigma i.i.d. band."""
    p = float(params.p)
    spread = abs(params.a + params.b - params.c)
    tol = 4 * math.sqrt(p * (1 - p)) * spread / math.sqrt(n)
    observed = (t_n - params.t0) / n
    return Verdict.two_sided(
        "growth_rate", observed, float(constants.lam), tol, standard_error=tol / 4
    )


def exact_normalized_second_moment(params, y1, t, n):
    """Exact ``E[((n+1) dM_{n+1} / T_{n+1})**2 | F_n]``, vectorised over states."""
    a, b, c = params.a, params.b, params.c
    p = float(params.p)
    y1 = np.asarray(y1, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    z = y1 / t
    f = b * p * (1 - 2 * z)
    m = (n + 1.0) ** 2
    fried = ((a - (a + b) * z - f) ** 2 * z + (b - (a + b) * z - f) ** 2 * (1 - z)) / (t + a + b) ** 2
    polya = ((c - c * z - f) ** 2 * z + (-c * z - f) ** 2 * (1 - z)) / (t + c) ** 2
    return m * (p * fried + (1 - p) * polya)


def plug_in_normalized_second_moment(params, y1, t, n):
    """``E[dM**2 | F_n] (n/T_n)**2``: the limit form, equal to sigma**2 at Z=1/2, T=lambda n."""
    a, b, c = params.a, params.b, params.c
    p = float(params.p)
    z = np.asarray(y1, dtype=np.float64) / np.asarray(t, dtype=np.float64)
    raw = (
        a**2 * p * z
        + b**2 * p * (1 - z)
        + c**2 * (1 - p) * z
        + z**2 * (a + b) ** 2 * p
        - 2 * (a + b) * p * z * (a * z + b * (1 - z))
        - c**2 * (1 - p) * z**2
    )
    second = raw - (b * p * (1 - 2 * z)) ** 2
    return second * (n / np.asarray(t, dtype=np.float64)) ** 2


@dataclass
class ConditionalVarianceTrack:
    n: np.ndarray
    exact: np.ndarray
    plug_in: np.ndarray
    target: float

    def verdict(self, tolerance):
        return Verdict.two_sided("conditional_variance", self.exact[-1], self.target, tolerance)


def conditional_variance_track(params, constants, trajectory):
    """Evaluate the normalised conditional second moment at every checkpoint of a path."""
    n = np.array([cp.n for cp in trajectory.checkpoints])
    y1 = np.array([cp.y1 for cp in trajectory.checkpoints])
    t = np.array([cp.t for cp in trajectory.checkpoints])
    return ConditionalVarianceTrack(
        n,
        exact_normalized_second_moment(params, y1, t, n),
        plug_in_normalized_second_moment(params, y1, t, n),
        float(constants.sigma_sq),
    )


def ks_distance(values, variance):
    """Sup distance between the empirical CDF and the centred Gaussian CDF."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    r = x.size
    cdf = ndtr(x / math.sqrt(variance))
    upper = np.arange(1, r + 1) / r - cdf
    lower = cdf - np.arange(0, r) / r
    return float(max(upper.max(), lower.max()))


@dataclass
class CltResult:
    mean: Verdict
    variance: Verdict
    ks: Verdict

    @property
    def verdicts(self):
        return [self.mean, self.variance, self.ks]


def clt_test(samples, constants, mean_tol=0.02, var_rel_tol=0.15, ks_tol=0.03, min_replicates=1000):
    if not constants.clt_ok:
        raise CltConditionViolated("3bp + cp > ap + c fails; no Gaussian limit")
    target_var = float(constants.limit_variance)
    x = samples.values
    r = x.size
    low = r < min_replicates
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    se_mean = math.sqrt(var / r)
    m4 = float(np.mean((x - mean) ** 4))
    se_var = math.sqrt(max(m4 - var**2, 0.0) / r)
    note = "low power: too few replicates" if low else ""
    return CltResult(
        Verdict.two_sided("clt_mean", mean, 0.0, mean_tol, standard_error=se_mean, low_power=low, note=note),
        Verdict.two_sided(
            "clt_variance", var, target_var, var_rel_tol * target_var,
            standard_error=se_var, low_power=low, note=note,
        ),
        Verdict.upper("clt_ks", ks_distance(x, target_var), ks_tol, low_power=low, note=note),
    )


def _exceed_chunk(params, grid, epsilon, master_seed, lo, hi):
    y1, t = simulate_batch(params, replicate_seeds(master_seed, lo, hi), grid[-1], grid)
    return np.abs(y1 / t - 0.5) > epsilon


def exceedance_counts(params, epsilon, n_grid, replicates, master_seed, workers=1):
    """Number of replicates with ``|Z_n - 1/2| > epsilon`` at each grid step (shared paths)."""
    grid = sorted(int(n) for n in n_grid)
    if epsilon >= 0.5:
        return np.zeros(len(grid), dtype=np.int64)
    hits = map_replicates(_exceed_chunk, (params, grid, epsilon, master_seed), replicates, workers)
    return hits.sum(axis=0)


@dataclass
class LdpResult:
    n_grid: np.ndarray
    counts: np.ndarray
    replicates: int
    usable: np.ndarray
    slope: float
    intercept: float
    verdicts: list = field(default_factory=list)

    @property
    def probabilities(self):
        return self.counts / self.replicates

    @property
    def standard_errors(self):
        p = self.probabilities
        return np.sqrt(p * (1 - p) / self.replicates)


def ldp_decay(params, epsilon, n_grid, replicates, master_seed, workers=1, min_exceedances=10):
    """Least-squares slope of ``log P(|Z_n - 1/2| > eps)`` against ``n``.

    Only the sign and rough log-linearity are checked; the decay constant
    itself is not known in closed form.
    """
    require_positive_rules(params)
    grid = np.array(sorted(int(n) for n in n_grid))
    counts = exceedance_counts(params, epsilon, grid, replicates, master_seed, workers)
    usable = counts >= min_exceedances
    if usable.sum() < 2:
        raise InsufficientExceedances(
            f"only {int(usable.sum())} grid point(s) with >= {min_exceedances} exceedances"
        )
    logp = np.log(counts[usable] / replicates)
    slope, intercept = np.polyfit(grid[usable], logp, 1)
    res = LdpResult(grid, counts, replicates, usable, float(slope), float(intercept))
    rate = -res.slope
    excess = float(np.max(logp - (math.log(2) - rate * grid[usable])))
    p, se = res.probabilities, res.standard_errors
    rises = [
        float(p[i + 1] - p[i] - 2 * math.hypot(se[i], se[i + 1])) for i in range(len(grid) - 1)
    ]
    res.verdicts = [
        Verdict("ldp_slope_negative", res.slope, 0.0, 0.0, res.slope < 0, sided="upper"),
        Verdict.upper("ldp_below_2exp", excess, 0.0, note="max of log p - (log 2 - a_hat n)"),
        Verdict.upper("ldp_non_increasing", max(rises), 0.0, note="largest rise beyond 2 SE"),
    ]
    return res


def _lil_chunk(params, horizon, grid, master_seed, lo, hi):
    y1, t = simulate_batch(params, replicate_seeds(master_seed, lo, hi), horizon, grid)
    n = np.asarray(grid, dtype=np.float64)
    scale = np.sqrt(n / (2 * np.log(np.log(n))))
    return (scale * (y1 / t - 0.5)).max(axis=1)


def lil_envelope(params, constants, paths, horizon, checkpoint_grid, master_seed, workers=1):
    """Weak sanity band: the largest scaled excursion lies in ``(0, 3 * lil_scale]``.

    This does not verify the limsup itself, which needs far longer paths.
    """
    if not constants.lil_ok:
        raise LilConditionViolated("-bp/lambda < -1/2 fails")
    grid = sorted(int(n) for n in checkpoint_grid)
    if grid[0] < 8:
        raise ValueError("LIL checkpoints must be >= 8 so that log log n > 0")
    if grid[-1] > horizon:
        raise ValueError("checkpoints exceed the horizon")
    per_path = map_replicates(_lil_chunk, (params, horizon, grid, master_seed), paths, workers, chunk=256)
    observed = float(per_path.max())
    bound = 3 * constants.lil_scale
    return Verdict(
        "lil_envelope", observed, bound, 0.0, bool(0 < observed <= bound), sided="upper",
        note="sanity band only, not a limsup estimate",
    )


@dataclass
class CfGapResult:
    t: np.ndarray
    phi_hat: np.ndarray
    beta: np.ndarray
    gaussian: np.ndarray

    @property
    def sup_gap_beta(self):
        return float(np.abs(self.phi_hat - self.beta).max())

    @property
    def sup_gap_gaussian(self):
        return float(np.abs(self.phi_hat - self.gaussian).max())


def empirical_cf(values, t):
    x = np.asarray(values, dtype=np.float64)
    arg = np.outer(np.asarray(t, dtype=np.float64), x)
    return np.cos(arg).mean(axis=1) + 1j * np.sin(arg).mean(axis=1)


def cf_gap(samples, constants, t_grid):
    t = np.asarray(t_grid, dtype=np.float64)
    rec = cf_recursion(
        CfRecursionSpec(float(constants.gamma), float(constants.sigma_sq), tuple(t), samples.n)
    )
    return CfGapResult(t, empirical_cf(samples.values, t), rec.beta, rec.target)


def _coupling_chunk(params, gamma, grid, master_seed, lo, hi):
    batch = UrnBatch(params, replicate_seeds(master_seed, lo, hi))
    a, b, c = params.a, params.b, params.c
    p = float(params.p)
    k_mean = b * p * (1 - p) * (c - a - b)
    rate = gamma - 0.5
    v_cap = (2 * a + 3 * b + 2 * c) / params.min_step
    size = hi - lo
    d = np.zeros(size)
    out = np.empty((size, len(grid), 2))
    violations = np.zeros((size, 1))
    for j, target in enumerate(grid):
        while batch.n < target:
            t_prev = batch.t.astype(np.float64)
            s = batch.advance()
            m = s.n + 1
            v = m * s.dm / batch.t
            ev = m * k_mean * (1 - 2 * s.z_prev) / ((t_prev + a + b) * (t_prev + c))
            d = (1 - rate / m) * d + (v - ev) / math.sqrt(m)
            violations[:, 0] += np.abs(v) > v_cap * (1 + 1e-12)
        x = math.sqrt(batch.n) * (batch.y1 / batch.t - 0.5)
        out[:, j, 0] = x - d
        out[:, j, 1] = d
    return np.concatenate([out.reshape(size, -1), violations], axis=1)


@dataclass
class CouplingResult:
    checkpoints: np.ndarray
    mean_abs_delta: np.ndarray
    se_abs_delta: np.ndarray
    mean_abs_d: np.ndarray
    se_abs_d: np.ndarray
    v_violations: int
    verdicts: list = field(default_factory=list)


def coupling_l1(params, constants, replicates, checkpoint_grid, master_seed, workers=1):
    """Run the urn and the linearised comparison process on shared draws.

    ``D`` starts at ``X_0``; with a balanced start both are zero.
    """
    if not constants.clt_ok:
        raise CltConditionViolated("coupling needs 2*Gamma - 1 > 0")
    if params.y1_0 != params.y2_0:
        raise ValueError("coupling assumes X_0 = 0, i.e. y1_0 == y2_0")
    grid = sorted(int(n) for n in checkpoint_grid)
    raw = map_replicates(
        _coupling_chunk, (params, float(constants.gamma), grid, master_seed), replicates, workers
    )
    k = len(grid)
    pairs = raw[:, : 2 * k].reshape(replicates, k, 2)
    delta, d = np.abs(pairs[..., 0]), np.abs(pairs[..., 1])
    sqrt_r = math.sqrt(replicates)
    res = CouplingResult(
        np.array(grid),
        delta.mean(axis=0),
        delta.std(axis=0, ddof=1) / sqrt_r,
        d.mean(axis=0),
        d.std(axis=0, ddof=1) / sqrt_r,
        int(raw[:, -1].sum()),
    )
    kept = res.mean_abs_delta[res.checkpoints >= BURN_IN]
    worst_rise = float(np.max(np.diff(kept), initial=-np.inf)) if kept.size > 1 else -np.inf
    d_bound = math.sqrt(4 * float(constants.cv_bound) / (2 * float(constants.gamma) - 1))
    res.verdicts = [
        Verdict("coupling_delta_non_increasing", worst_rise, 0.0, 0.0, worst_rise <= 0, sided="upper"),
        Verdict.upper("coupling_v_bound_violations", res.v_violations, 0),
        Verdict.upper(
            "coupling_d_bounded",
            res.mean_abs_d[-1],
            d_bound + 3 * res.se_abs_d[-1],
            standard_error=float(res.se_abs_d[-1]),
        ),
    ]
    return res
