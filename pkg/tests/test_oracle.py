import csv
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from mixedurn import UrnParams
from mixedurn.errors import CapExceeded
from mixedurn.harness import terminal_compositions
from mixedurn.oracle import (
    EventCounts,
    branch_table,
    conditional_checks,
    enumerated_drift_over_total,
    exact_distribution,
    exact_moment,
    levels,
    second_moment_closed_form,
    verify_drift_bound,
)

from conftest import EXAMPLE

OTHER = UrnParams(2, 2, 3, Fraction(1, 2))


def brute_force(params, n):
    """Enumerate all 4**n draw sequences with exact probabilities."""
    p = Fraction(params.p)
    out = {}
    for path in itertools.product(range(4), repeat=n):
        y1, t, prob = params.y1_0, params.t0, Fraction(1)
        counts = [0, 0, 0, 0]
        for kind in path:
            z = Fraction(y1, t)
            fried, type1 = kind in (0, 1), kind in (0, 2)
            prob *= (p if fried else 1 - p) * (z if type1 else 1 - z)
            if fried:
                y1 += params.a if type1 else params.b
                t += params.a + params.b
            else:
                y1 += params.c if type1 else 0
                t += params.c
            counts[kind] += 1
        if prob:
            key = EventCounts(*counts)
            out[key] = out.get(key, 0) + prob
    return out


def test_level_zero():
    assert exact_distribution(EXAMPLE, 0).mass == {EventCounts(0, 0, 0, 0): 1}


def test_level_one():
    mass = exact_distribution(EXAMPLE, 1).mass
    assert mass == {
        EventCounts(1, 0, 0, 0): Fraction(1, 8),
        EventCounts(0, 1, 0, 0): Fraction(1, 8),
        EventCounts(0, 0, 1, 0): Fraction(3, 8),
        EventCounts(0, 0, 0, 1): Fraction(3, 8),
    }


@pytest.mark.parametrize("params", [EXAMPLE, OTHER, UrnParams(1, 2, 5, Fraction(2, 3), 3, 1)])
@pytest.mark.parametrize("n", [1, 2, 4, 5])
def test_matches_path_enumeration(params, n):
    assert exact_distribution(params, n).mass == brute_force(params, n)


def test_mass_conservation_exact():
    for dist in levels(EXAMPLE, 10):
        assert dist.total() == 1
        assert all(k.n == dist.n for k in dist.mass)


def test_mass_conservation_float_at_cap():
    dist = exact_distribution(UrnParams(1, 3, 2, 0.25), 16, exact=False)
    assert len(dist.mass) == math.comb(19, 3)
    assert abs(dist.total() - 1) < 1e-12


def test_cap():
    with pytest.raises(CapExceeded):
        exact_distribution(EXAMPLE, 17)
    assert exact_distribution(EXAMPLE, 17, cap=17).n == 17


def test_moments():
    assert exact_moment(EXAMPLE, 1, 1, "Z") == Fraction(1, 2)
    assert exact_moment(EXAMPLE, 1, 1, "T") == Fraction(9, 2)
    # E[T_n] = T0 + n lambda
    assert exact_moment(EXAMPLE, 6, 1, "T") == 2 + 6 * Fraction(5, 2)
    # balanced start: E[sqrt(n)(Z_n - 1/2)] vanishes, second moment is n Var Z_n
    assert exact_moment(EXAMPLE, 5, 1, "centered_scaled_Z") == 0
    var = exact_moment(EXAMPLE, 5, 2, "Z") - exact_moment(EXAMPLE, 5, 1, "Z") ** 2
    assert exact_moment(EXAMPLE, 5, 2, "centered_scaled_Z") == 5 * var


def test_symmetry_about_half():
    for n in range(1, 9):
        dist = exact_distribution(EXAMPLE, n)
        for key, m in dist.mass.items():
            assert dist.mass[key.swapped()] == m
            assert key.swapped().z(EXAMPLE) == 1 - key.z(EXAMPLE)


def test_variance_matches_monte_carlo():
    r = 20_000
    y1, t = terminal_compositions(UrnParams(1, 3, 2, 0.25), 10, r, 11, checkpoints=range(1, 11))
    z = y1 / t
    for j, n in enumerate(range(1, 11)):
        m1 = exact_moment(EXAMPLE, n, 1, "Z")
        var = float(exact_moment(EXAMPLE, n, 2, "Z") - m1**2)
        dist = exact_distribution(EXAMPLE, n)
        m4 = float(sum(m * (k.z(EXAMPLE) - m1) ** 4 for k, m in dist.mass.items()))
        se = math.sqrt((m4 - var**2) / r)
        assert abs(z[:, j].var(ddof=1) - var) <= 4 * se


class TestConditional:
    @pytest.mark.parametrize("params", [EXAMPLE, OTHER])
    def test_martingale_residual_zero(self, params):
        for dist in levels(params, 6):
            for state in dist.mass:
                assert conditional_checks(params, state).drift_residual == 0

    def test_half_state(self):
        state = EventCounts(1, 1, 0, 0)  # y1 = 1 + 1 + 3 = 5, t = 10
        assert state.z(EXAMPLE) == Fraction(1, 2)
        chk = conditional_checks(EXAMPLE, state)
        assert chk.drift_over_total == 0
        assert chk.second_moment == 1

    def test_second_moment_matches_enumeration(self):
        for dist in levels(OTHER, 5):
            for state in dist.mass:
                z, t = state.z(OTHER), state.t(OTHER)
                f = OTHER.b * Fraction(OTHER.p) * (1 - 2 * z)
                direct = sum(q * (dy1 - dt * z - f) ** 2 for q, dy1, dt in branch_table(OTHER, z, t))
                assert second_moment_closed_form(OTHER, z) == direct

    def test_drift_over_total_matches_enumeration(self):
        for dist in levels(EXAMPLE, 6):
            for state in dist.mass:
                z, t = state.z(EXAMPLE), state.t(EXAMPLE)
                assert conditional_checks(EXAMPLE, state).drift_over_total == enumerated_drift_over_total(
                    EXAMPLE, z, t
                )


class TestDriftBound:
    def test_balanced_rules_zero(self):
        rep = verify_drift_bound(UrnParams(1, 2, 3, Fraction(1, 3)), 8)
        assert rep.k_empirical == 0 and rep.k_analytic == 0
        assert rep.ok

    def test_example_bounds(self):
        p = Fraction(1, 4)
        for dist in levels(EXAMPLE, 8)[1:]:
            for state in dist.mass:
                t = state.t(EXAMPLE)
                val = conditional_checks(EXAMPLE, state).drift_over_total
                assert abs(val) <= 3 * p * (1 - p) * 2 / ((t + 4) * (t + 2))

    def test_monotone_and_capped(self):
        k4 = verify_drift_bound(EXAMPLE, 4)
        k8 = verify_drift_bound(EXAMPLE, 8)
        assert k4.k_empirical <= k8.k_empirical <= k8.k_analytic
        assert k8.closed_form_mismatches == 0
        assert k8.k_analytic == 3 * Fraction(1, 4) * Fraction(3, 4) * 2 / 4


def test_csv_export(tmp_path):
    path = tmp_path / "dist.csv"
    exact_distribution(EXAMPLE, 2).to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n11", "n10", "n01", "n00", "probability"]
    assert len(rows) == 1 + math.comb(5, 3)
    assert sum(Fraction(r[4]) for r in rows[1:]) == 1


def test_float_mode_agrees_with_exact():
    ex = exact_distribution(EXAMPLE, 8).mass
    fl = exact_distribution(UrnParams(1, 3, 2, 0.25), 8, exact=False).mass
    assert max(abs(float(ex[k]) - fl[k]) for k in ex) < 1e-14
    assert np.isclose(sum(fl.values()), 1.0, rtol=0, atol=1e-12)
