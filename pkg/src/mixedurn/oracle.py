"""Exact finite-n law of the urn by dynamic programming over event counts.

A path's probability depends on the draws only through how many steps of
each (rule, colour) kind have occurred, so the ``4**n`` paths collapse to
``C(n + 3, 3)`` count states.
"""

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .core import require_positive_rules, validate_params
from .errors import CapExceeded

DEFAULT_CAP = 16


class EventCounts(NamedTuple):
    """Steps of kind (Friedman, type 1), (Friedman, type 2), (Pólya, type 1), (Pólya, type 2)."""

    n11: int
    n10: int
    n01: int
    n00: int

    @property
    def n(self):
        return self.n11 + self.n10 + self.n01 + self.n00

    def y1(self, params):
        return params.y1_0 + params.a * self.n11 + params.b * self.n10 + params.c * self.n01

    def t(self, params):
        return (
            params.t0
            + (params.a + params.b) * (self.n11 + self.n10)
            + params.c * (self.n01 + self.n00)
        )

    def z(self, params):
        return Fraction(self.y1(params), self.t(params))

    def swapped(self):
        return EventCounts(self.n10, self.n11, self.n00, self.n01)


@dataclass
class ExactDistribution:
    params: object
    n: int
    mass: dict

    def total(self):
        return sum(self.mass.values())

    def to_csv(self, path):
        """Write ``n11,n10,n01,n00,probability`` rows in stable key order."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n11", "n10", "n01", "n00", "probability"])
            for key in sorted(self.mass):
                w.writerow([*key, str(self.mass[key])])


def _prob(p, exact):
    return Fraction(p) if exact else float(p)


def _branches(params, state, exact):
    """Yield ``(successor, probability)`` for the four kinds of draw."""
    p = _prob(params.p, exact)
    y1, t = state.y1(params), state.t(params)
    z = Fraction(y1, t) if exact else y1 / t
    n11, n10, n01, n00 = state
    yield EventCounts(n11 + 1, n10, n01, n00), p * z
    yield EventCounts(n11, n10 + 1, n01, n00), p * (1 - z)
    yield EventCounts(n11, n10, n01 + 1, n00), (1 - p) * z
    yield EventCounts(n11, n10, n01, n00 + 1), (1 - p) * (1 - z)


def exact_distribution(params, n, cap=DEFAULT_CAP, exact=True):
    """Law of the event counts after ``n`` draws.

    Exact rationals by default; ``exact=False`` uses doubles whose masses sum
    to one within 1e-12 up to the default cap.
    """
    validate_params(params)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the DP cap {cap}")
    one = Fraction(1) if exact else 1.0
    mass = {EventCounts(0, 0, 0, 0): one}
    for _ in range(n):
        mass = _advance(params, mass, exact)
    return ExactDistribution(params, n, mass)


def _advance(params, mass, exact):
    nxt = {}
    for state in sorted(mass):
        m = mass[state]
        for succ, q in _branches(params, state, exact):
            if q:
                nxt[succ] = nxt.get(succ, 0) + m * q
    return nxt


def levels(params, n_max, cap=DEFAULT_CAP, exact=True):
    """Exact distributions for every step ``0 .. n_max``."""
    if n_max > cap:
        raise CapExceeded(f"n={n_max} exceeds the DP cap {cap}")
    dist = exact_distribution(params, 0, cap=cap, exact=exact)
    out = [dist]
    for n in range(1, n_max + 1):
        dist = ExactDistribution(params, n, _advance(params, dist.mass, exact))
        out.append(dist)
    return out


STATISTICS = ("Z", "T", "centered_scaled_Z")


def exact_moment(params, n, power=1, statistic="Z", cap=DEFAULT_CAP):
    """Exact ``E[S**power]`` for ``S`` one of Z_n, T_n or sqrt(n)(Z_n - 1/2).

    Returns a Fraction whenever the value is rational.
    """
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    if statistic not in STATISTICS:
        raise ValueError(f"statistic must be one of {STATISTICS}")
    dist = exact_distribution(params, n, cap=cap)
    total = Fraction(0)
    for state, m in dist.mass.items():
        if statistic == "T":
            s = Fraction(state.t(params))
        else:
            s = state.z(params)
            if statistic == "centered_scaled_Z":
                s = s - Fraction(1, 2)
        total += m * s**power
    if statistic == "centered_scaled_Z":
        if power == 2:
            return total * n
        return math.sqrt(n) * float(total)
    return total


class ConditionalChecks(NamedTuple):
    drift_residual: Fraction
    second_moment: Fraction
    drift_over_total: Fraction


def second_moment_closed_form(params, z):
    """``E[dM**2 | F]`` from the expanded square, exact for rational ``z``."""
    a, b, c = params.a, params.b, params.c
    p = Fraction(params.p)
    raw = (
        a**2 * p * z
        + b**2 * p * (1 - z)
        + c**2 * (1 - p) * z
        + z**2 * (a + b) ** 2 * p
        - 2 * (a + b) * p * z * (a * z + b * (1 - z))
        - c**2 * (1 - p) * z**2
    )
    return raw - (b * p * (1 - 2 * z)) ** 2


def drift_over_total_closed_form(params, z, t):
    """Exact ``E[dM_{n+1} / T_{n+1} | F_n]`` given the current proportion and total."""
    a, b, c = params.a, params.b, params.c
    p = Fraction(params.p)
    return b * p * (1 - p) * (1 - 2 * z) * (c - a - b) / ((t + a + b) * (t + c))


def branch_table(params, z, t):
    """The four draw kinds as ``(probability, dy1, dt)`` with exact probabilities."""
    a, b, c = params.a, params.b, params.c
    p = Fraction(params.p)
    return [
        (p * z, a, a + b),
        (p * (1 - z), b, a + b),
        ((1 - p) * z, c, c),
        ((1 - p) * (1 - z), 0, c),
    ]


def conditional_checks(params, state):
    """Exact conditional identities at one count state.

    ``drift_residual`` is obtained by enumerating the four draw kinds and must
    vanish; the other two fields use the closed forms.
    """
    validate_params(params)
    z = state.z(params)
    t = state.t(params)
    f = params.b * Fraction(params.p) * (1 - 2 * z)
    mean = sum(q * (dy1 - dt * z) for q, dy1, dt in branch_table(params, z, t))
    return ConditionalChecks(
        drift_residual=mean - f,
        second_moment=second_moment_closed_form(params, z),
        drift_over_total=drift_over_total_closed_form(params, z, t),
    )


def enumerated_drift_over_total(params, z, t):
    """``E[dM / T']`` by direct enumeration of the branches (independent of the closed form)."""
    f = params.b * Fraction(params.p) * (1 - 2 * z)
    return sum(
        q * (dy1 - dt * z - f) / (t + dt) for q, dy1, dt in branch_table(params, z, t)
    )


@dataclass
class DriftBoundReport:
    k_empirical: Fraction
    k_analytic: Fraction
    states_checked: int
    closed_form_mismatches: int

    @property
    def ok(self):
        return self.closed_form_mismatches == 0 and self.k_empirical <= self.k_analytic


def verify_drift_bound(params, n_max, cap=DEFAULT_CAP):
    """Largest ``n**2 |E[dM/T' | F]|`` over reachable states with ``1 <= n <= n_max``.

    Every state also has its closed form compared against direct enumeration.
    """
    require_positive_rules(params)
    p = Fraction(params.p)
    k_analytic = (
        params.b * p * (1 - p) * abs(params.c - params.a - params.b) / Fraction(params.min_step) ** 2
    )
    k = Fraction(0)
    checked = 0
    mismatches = 0
    for dist in levels(params, n_max, cap=cap)[1:]:
        for state in dist.mass:
            z, t = state.z(params), state.t(params)
            closed = drift_over_total_closed_form(params, z, t)
            if closed != enumerated_drift_over_total(params, z, t):
                mismatches += 1
            k = max(k, abs(closed) * dist.n**2)
            checked += 1
    return DriftBoundReport(k, k_analytic, checked, mismatches)
