"""Urn model: parameters, single-step dynamics, seeded simulation, constants.

Two colours.  At every draw a ball is picked uniformly; with probability ``p``
the Friedman rule adds ``a`` balls of the drawn colour and ``b`` of the other,
otherwise the Pólya rule adds ``c`` balls of the drawn colour.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import (
    DomainError,
    InvalidCheckpoints,
    OutOfRange,
    TheoremPreconditionViolated,
)
from .rng import CounterRNG, uniform_array

Real = Union[float, Fraction]

_INT64_MAX = np.iinfo(np.int64).max


class Rule(enum.Enum):
    FRIEDMAN = 1
    POLYA = 0


class Color(enum.Enum):
    TYPE1 = 1
    TYPE2 = 0


class DrawOutcome(NamedTuple):
    rule: Rule
    drawn_type: Color


@dataclass(frozen=True)
class UrnParams:
    a: int
    b: int
    c: int
    p: Real
    y1_0: int = 1
    y2_0: int = 1

    @property
    def t0(self):
        return self.y1_0 + self.y2_0

    @property
    def min_step(self):
        return min(self.a + self.b, self.c)

    @property
    def max_step(self):
        return max(self.a + self.b, self.c)


@dataclass(frozen=True)
class UrnState:
    n: int
    y1: int
    y2: int

    @property
    def t(self):
        return self.y1 + self.y2

    @property
    def z(self):
        return self.y1 / self.t

    @property
    def z_exact(self):
        return Fraction(self.y1, self.t)

    @classmethod
    def initial(cls, params):
        return cls(0, params.y1_0, params.y2_0)


class StepDelta(NamedTuple):
    dy1: int
    dt: int
    drift: float
    dm: float


@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form limit quantities.

    ``limit_variance`` is ``None`` unless ``clt_ok`` and ``lil_scale`` is
    ``None`` unless ``lil_ok``; neither is ever NaN.
    """

    lam: Real
    gamma: Real
    sigma_sq: Real
    alpha: Real
    cv_bound: Real
    dm_bound: int
    clt_ok: bool
    lil_ok: bool
    limit_variance: Optional[Real] = None
    lil_scale: Optional[float] = None

    def as_dict(self):
        def num(v):
            if v is None or isinstance(v, (bool, int)):
                return v
            return float(v)

        return {k: num(v) for k, v in self.__dict__.items()}


class Checkpoint(NamedTuple):
    n: int
    y1: int
    t: int

    @property
    def z(self):
        return self.y1 / self.t


@dataclass(frozen=True)
class Trajectory:
    params: UrnParams
    seed: int
    checkpoints: list = field(default_factory=list)


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def validate_params(raw):
    """Return ``raw`` unchanged if it describes a valid urn, else raise OutOfRange."""
    for name in ("a", "b", "c", "y1_0", "y2_0"):
        v = getattr(raw, name)
        if not _is_int(v):
            raise OutOfRange(name, f"{name} must be an integer, got {v!r}")
        if v < 0:
            raise OutOfRange(name, f"{name} must be non-negative, got {v}")
    if raw.c < 1:
        raise OutOfRange("c", f"c must be at least 1, got {raw.c}")
    try:
        p_ok = 0 < raw.p < 1
    except TypeError:
        p_ok = False
    if not p_ok or (isinstance(raw.p, float) and math.isnan(raw.p)):
        raise OutOfRange("p", f"p must lie strictly between 0 and 1, got {raw.p!r}")
    if raw.t0 <= 0:
        raise OutOfRange("T0", "initial urn must contain at least one ball")
    return raw


def require_positive_rules(params):
    """Theorem-level checks assume a, b, c >= 1 and warn on a one-colour start."""
    validate_params(params)
    zero = [k for k in ("a", "b", "c") if getattr(params, k) == 0]
    if zero:
        raise TheoremPreconditionViolated(
            f"limit theorems need a, b, c >= 1; zero: {', '.join(zero)}"
        )
    if params.y1_0 == 0 or params.y2_0 == 0:
        warnings.warn(
            "initial proportion is 0 or 1; the first draw is forced",
            stacklevel=3,
        )
    return params


def derived_constants(params, exact=False):
    require_positive_rules(params)
    a, b, c = params.a, params.b, params.c
    if exact:
        p = Fraction(params.p)
        one = Fraction(1)
    else:
        p = float(params.p)
        one = 1.0
    lam = (a + b) * p + c * (1 - p)
    gamma = 2 * b * p / lam
    sigma_sq = (p * (a - b) ** 2 + c**2 * (1 - p)) / (4 * lam**2)
    alpha = b * p / lam - 1
    dm_bound = 2 * a + 3 * b + 2 * c
    cv_bound = one * dm_bound**2 / params.min_step**2
    clt_ok = 3 * b * p + c * p > a * p + c
    lil_ok = -b * p / lam < -one / 2
    limit_variance = sigma_sq / (2 * gamma - 1) if clt_ok else None
    lil_scale = math.sqrt(sigma_sq / (2 * alpha + 1)) if lil_ok else None
    return DerivedConstants(
        lam=lam,
        gamma=gamma,
        sigma_sq=sigma_sq,
        alpha=alpha,
        cv_bound=cv_bound,
        dm_bound=dm_bound,
        clt_ok=bool(clt_ok),
        lil_ok=bool(lil_ok),
        limit_variance=limit_variance,
        lil_scale=lil_scale,
    )


def drift(z, params):
    """Conditional mean displacement ``bp(1 - 2z)`` of the type-1 count."""
    if not 0 <= z <= 1:
        raise DomainError(f"proportion must lie in [0, 1], got {z!r}")
    return params.b * params.p * (1 - 2 * z)


def increments(outcome, params):
    """Return ``(dy1, dt)`` for one draw outcome."""
    if outcome.rule is Rule.FRIEDMAN:
        dt = params.a + params.b
        dy1 = params.a if outcome.drawn_type is Color.TYPE1 else params.b
    else:
        dt = params.c
        dy1 = params.c if outcome.drawn_type is Color.TYPE1 else 0
    return dy1, dt


def step(state, outcome, params):
    dy1, dt = increments(outcome, params)
    z = state.z
    f = params.b * float(params.p) * (1 - 2 * z)
    dm = dy1 - dt * z - f
    new = UrnState(state.n + 1, state.y1 + dy1, state.y2 + dt - dy1)
    return new, StepDelta(dy1, dt, f, dm)


def sample_outcome(state, params, rng):
    """Draw (rule, colour) using two uniforms in a fixed order: rule first."""
    u_rule = rng.random()
    u_color = rng.random()
    rule = Rule.FRIEDMAN if u_rule < float(params.p) else Rule.POLYA
    color = Color.TYPE1 if u_color < state.y1 / state.t else Color.TYPE2
    return DrawOutcome(rule, color)


def _check_checkpoints(horizon, checkpoint_steps):
    if horizon < 0:
        raise InvalidCheckpoints(f"horizon must be non-negative, got {horizon}")
    steps = list(checkpoint_steps)
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise InvalidCheckpoints("checkpoint steps must be strictly increasing")
    if steps and (steps[0] < 0 or steps[-1] > horizon):
        raise InvalidCheckpoints("checkpoint steps must lie in [0, horizon]")
    return steps


def _check_overflow(params, horizon):
    if params.t0 + horizon * params.max_step > _INT64_MAX:
        raise OverflowError("horizon too long for 64-bit ball counts")


def simulate(params, seed, horizon, checkpoint_steps=None):
    """Run one seeded path and record (n, y1, t) at the requested steps.

    Reference implementation built from :func:`sample_outcome` and
    :func:`step`; :class:`UrnBatch` produces the same bits for many seeds.
    """
    validate_params(params)
    if checkpoint_steps is None:
        checkpoint_steps = [horizon]
    steps = _check_checkpoints(horizon, checkpoint_steps)
    _check_overflow(params, horizon)
    rng = CounterRNG(seed)
    state = UrnState.initial(params)
    out = []
    want = iter(steps)
    nxt = next(want, None)
    while True:
        if state.n == nxt:
            out.append(Checkpoint(state.n, state.y1, state.t))
            nxt = next(want, None)
        if state.n == horizon:
            break
        state, _ = step(state, sample_outcome(state, params, rng), params)
    return Trajectory(params, seed, out)


class StepBatch(NamedTuple):
    """One vectorised transition ``n -> n + 1`` across replicates."""

    n: int
    z_prev: np.ndarray
    friedman: np.ndarray
    type1: np.ndarray
    dy1: np.ndarray
    dt: np.ndarray
    drift: np.ndarray
    dm: np.ndarray


class UrnBatch:
    """Many independent urn paths advanced in lockstep.

    Replicate ``i`` uses stream seed ``seeds[i]`` and consumes exactly the
    draws :func:`simulate` would, so results match the scalar path bit for bit.
    """

    def __init__(self, params, seeds):
        validate_params(params)
        self.params = params
        self.seeds = np.asarray(seeds, dtype=np.uint64)
        size = self.seeds.shape[0]
        self.n = 0
        self.y1 = np.full(size, params.y1_0, dtype=np.int64)
        self.t = np.full(size, params.t0, dtype=np.int64)
        self._p = float(params.p)
        self._bp = params.b * self._p

    @property
    def z(self):
        return self.y1 / self.t

    def advance(self):
        a, b, c = self.params.a, self.params.b, self.params.c
        z = self.y1 / self.t
        friedman = uniform_array(self.seeds, 2 * self.n) < self._p
        type1 = uniform_array(self.seeds, 2 * self.n + 1) < z
        dy1 = np.where(friedman, np.where(type1, a, b), np.where(type1, c, 0))
        dt = np.where(friedman, a + b, c)
        f = self._bp * (1 - 2 * z)
        dm = dy1 - dt * z - f
        self.y1 += dy1
        self.t += dt
        self.n += 1
        return StepBatch(self.n - 1, z, friedman, type1, dy1, dt, f, dm)


def simulate_batch(params, seeds, horizon, checkpoint_steps=None):
    """Checkpointed composition of many paths.

    Returns ``(y1, t)`` integer arrays of shape ``(len(seeds), len(checkpoints))``.
    """
    if checkpoint_steps is None:
        checkpoint_steps = [horizon]
    steps = _check_checkpoints(horizon, checkpoint_steps)
    _check_overflow(params, horizon)
    batch = UrnBatch(params, seeds)
    size = batch.seeds.shape[0]
    y1 = np.empty((size, len(steps)), dtype=np.int64)
    t = np.empty((size, len(steps)), dtype=np.int64)
    for j, target in enumerate(steps):
        while batch.n < target:
            batch.advance()
        y1[:, j] = batch.y1
        t[:, j] = batch.t
    return y1, t
