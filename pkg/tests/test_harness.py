import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from mixedurn import UrnParams, derived_constants, simulate
from mixedurn.core import Trajectory, Checkpoint
from mixedurn.errors import (
    CltConditionViolated,
    InsufficientExceedances,
    LilConditionViolated,
)
from mixedurn.harness import (
    SampleSet,
    Verdict,
    cf_gap,
    clt_samples,
    clt_test,
    conditional_variance_track,
    coupling_l1,
    empirical_cf,
    exact_normalized_second_moment,
    exceedance_counts,
    growth_rate,
    ks_distance,
    ldp_decay,
    lil_envelope,
    map_replicates,
    _terminal_chunk,
)
from mixedurn.oracle import branch_table

from conftest import LIL_PARAMS

P = UrnParams(1, 3, 2, 0.25)
K = derived_constants(P)


def test_verdict_two_sided_and_upper():
    assert Verdict.two_sided("x", 1.05, 1.0, 0.1).passed
    assert not Verdict.two_sided("x", 1.2, 1.0, 0.1).passed
    v = Verdict.upper("y", 3.0, 2.0)
    assert not v.passed and v.failed and v.sided == "upper"
    low = Verdict("z", 9.0, 0.0, 0.1, False, low_power=True)
    assert not low.failed


def test_sample_set_guards():
    with pytest.raises(ValueError):
        SampleSet(P, 10, [0.1], 0)
    with pytest.raises(ValueError):
        SampleSet(P, 10, [0.1, float("inf")], 0)


class TestGrowth:
    def test_band(self):
        tr = simulate(P, 5, 20_000, [20_000])
        v = growth_rate(tr.checkpoints[-1].t, 20_000, P, K)
        assert v.target == 2.5
        assert v.tolerance == pytest.approx(4 * math.sqrt(0.1875 * 4 / 20_000))
        assert v.passed

    def test_balanced_rules_deterministic(self):
        params = UrnParams(1, 2, 3, 0.4)
        tr = simulate(params, 1, 1000, [1000])
        v = growth_rate(tr.checkpoints[-1].t, 1000, params, derived_constants(params))
        assert v.tolerance == 0 and v.observed == 3 and v.passed


class TestConditionalVariance:
    def test_exact_matches_branch_enumeration(self):
        pe = UrnParams(1, 3, 2, Fraction(1, 4))
        for y1, t, n in [(3, 8, 2), (17, 40, 15), (1, 2, 0)]:
            z = Fraction(y1, t)
            f = 3 * Fraction(1, 4) * (1 - 2 * z)
            direct = sum(
                q * ((n + 1) * (dy1 - dt * z - f) / (t + dt)) ** 2 for q, dy1, dt in branch_table(pe, z, t)
            )
            assert exact_normalized_second_moment(P, y1, t, n) == pytest.approx(float(direct), rel=1e-13)

    def test_pinned_limit_state(self):
        n = 1000
        traj = Trajectory(P, 0, [Checkpoint(n, 1250, 2500)])  # Z = 1/2, T = lambda n
        track = conditional_variance_track(P, K, traj)
        assert track.plug_in[0] == pytest.approx(0.16, abs=1e-15)
        assert track.exact[0] == pytest.approx(0.16, rel=5e-3)

    def test_along_path(self):
        tr = simulate(P, 3, 100_000, [100, 1000, 10_000, 100_000])
        track = conditional_variance_track(P, K, tr)
        assert track.verdict(0.01).passed

    def test_equal_friedman_counts(self):
        params = UrnParams(2, 2, 3, 0.3)
        k = derived_constants(params)
        lam = 4 * 0.3 + 3 * 0.7
        assert k.sigma_sq == pytest.approx(9 * 0.7 / (4 * lam**2))
        tr = simulate(params, 8, 100_000, [100_000])
        assert conditional_variance_track(params, k, tr).exact[-1] == pytest.approx(k.sigma_sq, abs=0.005)


def test_ks_distance_matches_scipy():
    rng = np.random.default_rng(0)
    x = rng.normal(scale=0.9, size=3000)
    ours = ks_distance(x, 0.8)
    ref = stats.kstest(x, "norm", args=(0, math.sqrt(0.8))).statistic
    assert ours == pytest.approx(ref, abs=1e-15)
    assert 0 <= ours <= 1


class TestClt:
    def test_low_power_never_fails(self):
        res = clt_test(SampleSet(P, 10, [5.0, -5.0], 0), K)
        assert all(v.low_power and not v.failed for v in res.verdicts)

    def test_condition(self):
        bad = UrnParams(5, 1, 2, 0.5)
        with pytest.raises(CltConditionViolated):
            clt_test(SampleSet(bad, 10, [0.0, 1.0], 0), derived_constants(bad))

    def test_small_run_symmetric(self):
        s = clt_samples(P, 500, 2000, 3)
        res = clt_test(s, K)
        assert res.mean.passed
        assert s.values.shape == (2000,)


class TestLdp:
    def test_impossible_exceedance(self):
        assert np.all(exceedance_counts(P, 0.6, [10, 20], 100, 0) == 0)
        with pytest.raises(InsufficientExceedances):
            ldp_decay(P, 0.6, [10, 20], 100, 0)

    def test_small_run(self):
        res = ldp_decay(P, 0.1, [50, 100, 200], 20_000, 4)
        assert res.slope < 0
        assert all(v.passed for v in res.verdicts)


class TestLil:
    def test_condition(self):
        with pytest.raises(LilConditionViolated):
            lil_envelope(P, K, 10, 100, [10, 100], 0)

    def test_guard(self):
        with pytest.raises(ValueError):
            lil_envelope(LIL_PARAMS, derived_constants(LIL_PARAMS), 10, 100, [3, 100], 0)

    def test_small_run(self):
        v = lil_envelope(LIL_PARAMS, derived_constants(LIL_PARAMS), 20, 2000, [8, 100, 2000], 0)
        assert v.passed


class TestCfGap:
    def test_zero(self):
        s = clt_samples(P, 200, 500, 1)
        gap = cf_gap(s, K, [0.0])
        assert gap.phi_hat[0] == 1 and gap.beta[0] == 1
        assert gap.sup_gap_beta == 0 and gap.sup_gap_gaussian == 0

    def test_empirical_cf_gaussian(self):
        x = np.random.default_rng(1).normal(size=200_000)
        t = np.linspace(-3, 3, 13)
        assert np.max(np.abs(empirical_cf(x, t) - np.exp(-t**2 / 2))) < 0.01

    def test_more_replicates_shrink_gap_to_beta(self):
        t = np.linspace(-3, 3, 31)
        small = cf_gap(clt_samples(P, 300, 300, 2), K, t).sup_gap_beta
        large = cf_gap(clt_samples(P, 300, 3000, 2), K, t).sup_gap_beta
        assert large < small


class TestCoupling:
    def test_start_is_zero(self):
        res = coupling_l1(P, K, 64, [0, 10], 0)
        assert res.mean_abs_delta[0] == 0 and res.mean_abs_d[0] == 0

    def test_small_run(self):
        res = coupling_l1(P, K, 500, [100, 1000], 0)
        assert res.v_violations == 0
        assert res.mean_abs_delta[1] < res.mean_abs_delta[0]


def test_worker_count_does_not_change_results():
    args = (P, 50, [10, 50], 9)
    one = map_replicates(_terminal_chunk, args, 300, workers=1, chunk=64)
    two = map_replicates(_terminal_chunk, args, 300, workers=2, chunk=64)
    assert np.array_equal(one, two)
