"""Tests for the covariate significance test and the sufficient follow-up test."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from curekit.control import ControlParams
from curekit.errors import GbarZero, InvalidSample, NoUncensored, TooManyLevels
from curekit.hyptests import (
    CATEGORICAL,
    CONTINUOUS,
    EtaResponse,
    estimate_eta,
    level_statistics,
    rank_scale,
    statistics,
    testcov,
    testmz,
    u_process,
)
from curekit.survival_data import SurvivalSample


class TestEta:
    def test_hand_case(self):
        sample = SurvivalSample(x=[0.0, 1.0], t=[1.0, 2.0], d=[1, 0])
        eta = estimate_eta(sample, bandwidths=np.array([1e6, 1e6]))
        assert eta.tau_hat == 1.0
        assert_allclose(eta.eta, [0.0, 1.0])

    def test_zero_unless_censored_beyond_tau(self, random_sample):
        eta = estimate_eta(random_sample, bandwidths=np.full(random_sample.n, 0.5))
        zero = (random_sample.d == 1) | (random_sample.t < eta.tau_hat)
        assert np.all(eta.eta[zero] == 0.0)
        assert np.all(eta.eta[~zero] >= 1.0)

    def test_weights_capped_at_n(self):
        # stratum "a" has no one left at risk after its own censoring at tau
        sample = SurvivalSample.from_arrays(["a", "a", "b", "b"], [1.0, 2.0, 1.0, 2.0], [1, 0, 0, 1])
        eta = estimate_eta(sample)
        assert eta.capped == 1
        assert eta.eta[1] == sample.n

    def test_categorical_strata(self):
        sample = SurvivalSample.from_arrays(["a", "a", "b", "b"], [1.0, 3.0, 1.0, 2.0], [1, 0, 0, 1])
        eta = estimate_eta(sample)
        assert eta.eta[1] == pytest.approx(1.0)
        assert eta.eta[3] == 0.0

    def test_needs_events(self):
        sample = SurvivalSample(x=[0.0, 1.0], t=[1.0, 2.0], d=[0, 0])
        with pytest.raises(NoUncensored):
            estimate_eta(sample)

    def test_strict_mode_rejects_zero_censoring_survival(self):
        sample = SurvivalSample.from_arrays(["a", "a", "b", "b"], [1.0, 2.0, 1.0, 2.0], [1, 0, 0, 1])
        with pytest.raises(GbarZero):
            estimate_eta(sample, cap=False)


class TestProcess:
    def test_hand_values(self):
        u = u_process(EtaResponse(eta=np.array([0.0, 0.0, 3.0]), tau_hat=1.0), [1.0, 2.0, 3.0])
        assert_allclose(u, [-1 / 3, -2 / 3, 0.0])

    def test_vanishes_at_largest_covariate(self, random_sample):
        eta = np.random.default_rng(4).exponential(size=random_sample.n)
        u = u_process(eta, random_sample.x)
        assert u[np.argmax(random_sample.x)] == 0.0

    def test_constant_eta(self):
        assert_allclose(u_process(np.full(5, 2.0), np.arange(5.0)), 0.0)

    def test_ties_share_a_value(self):
        u = u_process(np.array([1.0, 0.0, 0.0, 2.0]), [1.0, 1.0, 2.0, 3.0])
        assert u[0] == u[1]

    def test_invariant_under_monotone_transform(self, random_sample):
        eta = np.random.default_rng(6).exponential(size=random_sample.n)
        assert statistics(eta, random_sample.x) == statistics(eta, np.exp(random_sample.x))

    def test_two_level_orderings_agree(self):
        rng = np.random.default_rng(8)
        labels = np.array(["a", "b"] * 10)
        eta = rng.exponential(size=20)
        codes = (labels == "b").astype(float)
        assert_allclose(level_statistics(eta, labels, ("a", "b")), statistics(eta, codes))
        assert_allclose(statistics(eta, codes), statistics(eta, 1.0 - codes))

    def test_too_many_levels(self):
        levels = tuple("abcdefgh")
        with pytest.raises(TooManyLevels):
            level_statistics(np.zeros(8), np.array(levels), levels)


class TestCovariateTest:
    def test_constant_covariate(self):
        sample = SurvivalSample(x=np.ones(6), t=np.arange(1.0, 7.0), d=[1, 0, 1, 0, 1, 0])
        result = testcov(sample, ControlParams(B=10, workers=1, seed=1))
        assert (result.cm_stat, result.cm_pvalue, result.ks_stat, result.ks_pvalue) == (0.0, 1.0, 0.0, 1.0)
        assert result.covariate_kind == CONTINUOUS

    def test_pvalues_on_bootstrap_lattice(self, sim_sample, fast_params):
        params = fast_params.with_updates(B=19)
        result = testcov(sim_sample, params)
        for p in (result.cm_pvalue, result.ks_pvalue):
            assert 1 / 20 <= p <= 1.0
            assert (p * 20) == pytest.approx(round(p * 20))

    def test_independent_of_worker_count(self, sim_sample, fast_params):
        params = fast_params.with_updates(B=12)
        a = testcov(sim_sample, params)
        b = testcov(sim_sample, params.with_updates(workers=4))
        assert (a.cm_stat, a.cm_pvalue, a.ks_stat, a.ks_pvalue) == (b.cm_stat, b.cm_pvalue, b.ks_stat, b.ks_pvalue)

    def test_categorical_covariate(self):
        rng = np.random.default_rng(12)
        labels = rng.choice(["m", "f"], size=40)
        t = rng.exponential(size=40)
        d = (rng.uniform(size=40) < 0.6).astype(int)
        sample = SurvivalSample.from_arrays(labels, t, d, categorical=True)
        result = testcov(sample, ControlParams(B=15, seed=2, workers=1))
        assert result.covariate_kind == CATEGORICAL
        assert 0 < result.cm_pvalue <= 1

    def test_too_many_levels(self):
        labels = [str(i) for i in range(8)] * 2
        sample = SurvivalSample.from_arrays(labels, np.arange(1.0, 17.0), [1, 0] * 8, categorical=True)
        with pytest.raises(TooManyLevels):
            testcov(sample, ControlParams(B=5, seed=1))

    def test_needs_events(self):
        sample = SurvivalSample(x=[0.0, 1.0, 2.0, 3.0], t=[1.0, 2.0, 3.0, 4.0], d=[0, 0, 0, 0])
        with pytest.raises(NoUncensored):
            testcov(sample, ControlParams(B=5, seed=1))

    def test_needs_four_subjects(self):
        sample = SurvivalSample(x=[0.0, 1.0, 2.0], t=[1.0, 2.0, 3.0], d=[1, 0, 1])
        with pytest.raises(InvalidSample):
            testcov(sample)

    def test_invariant_under_exp(self, sim_sample):
        # one decimal keeps exp of distinct values distinct
        x = np.round(sim_sample.x, 1)
        params = ControlParams(B=20, seed=1, workers=1, hsave=True)
        a = testcov(SurvivalSample(x=x, t=sim_sample.t, d=sim_sample.d), params)
        b = testcov(SurvivalSample(x=np.exp(x), t=sim_sample.t, d=sim_sample.d), params)
        assert (a.cm_stat, a.cm_pvalue, a.ks_stat, a.ks_pvalue) == (b.cm_stat, b.cm_pvalue, b.ks_stat, b.ks_pvalue)
        assert np.array_equal(a.cm_boot, b.cm_boot)

    def test_keeps_bootstrap_statistics(self, sim_sample, fast_params):
        result = testcov(sim_sample, fast_params.with_updates(B=11, hsave=True))
        assert result.cm_boot.shape == (11,) and result.ks_boot.shape == (11,)
        assert result.cm_pvalue == (1 + np.sum(result.cm_boot >= result.cm_stat)) / 12
        assert result.ks_pvalue == (1 + np.sum(result.ks_boot >= result.ks_stat)) / 12
        assert testcov(sim_sample, fast_params.with_updates(B=11)).cm_boot is None

    def test_level_without_events(self):
        rng = np.random.default_rng(3)
        labels = np.array(["a"] * 20 + ["b"] * 10)
        t = rng.exponential(size=30)
        d = np.concatenate([(rng.uniform(size=20) < 0.7).astype(int), np.zeros(10, dtype=int)])
        sample = SurvivalSample.from_arrays(labels, t, d, categorical=True)
        result = testcov(sample, ControlParams(B=9, seed=4, workers=1))
        assert 1 / 10 <= result.cm_pvalue <= 1.0

    def test_rank_scale(self):
        sample = SurvivalSample(x=[3.0, 1.0, 1.0, 10.0], t=[1.0, 2.0, 3.0, 4.0], d=[1, 0, 1, 0])
        assert_allclose(rank_scale(sample).x, [0.75, 0.375, 0.375, 1.0])
        assert np.array_equal(rank_scale(sample).t, sample.t)

    def test_collects_only_test_functions(self, pytestconfig):
        assert pytestconfig.getini("python_functions") == ["test_*"]


class TestFollowUp:
    def test_tiny_pvalue(self):
        t = np.concatenate([np.arange(1.0, 44.0), np.full(7, 100.0)])
        d = np.concatenate([np.ones(43), np.zeros(7)])
        result = testmz(SurvivalSample(x=np.zeros(50), t=t, d=d))
        assert result.statistic == 43
        assert result.pvalue == pytest.approx(2.024892e-43, rel=1e-6)

    def test_no_events(self):
        result = testmz(SurvivalSample(x=[0.0, 1.0], t=[1.0, 2.0], d=[0, 0]))
        assert result.statistic == 0
        assert result.pvalue == 1.0
        assert np.isnan(result.delta)

    def test_all_events_in_interval(self):
        result = testmz(SurvivalSample(x=np.zeros(4), t=[1.0, 2.0, 3.0, 4.0], d=[1, 1, 1, 1]))
        # last observation is an event: delta = 0 and the interval is empty
        assert result.delta == 0.0
        assert result.statistic == 0
        assert result.pvalue == 1.0

    def test_every_event_counted(self):
        result = testmz(SurvivalSample(x=np.zeros(4), t=[1.0, 2.0, 9.0, 9.0], d=[1, 1, 0, 0]))
        assert result.interval == (0.0, 2.0)
        assert result.statistic == 2
        assert result.pvalue == pytest.approx(0.5**4)

    def test_bmt(self, bmt_loader):
        result = testmz(bmt_loader("z1"))
        assert (result.statistic, result.n) == (11, 137)
        assert result.pvalue == pytest.approx(1.047242e-05, rel=1e-6)


@pytest.mark.slow
class TestBmtCovariates:
    @pytest.mark.parametrize(
        "column, categorical, low, high",
        [("z1", None, 0.67, 0.97), ("z7", None, 0.05, 0.25), ("z3", True, 0.04, 0.19), ("z10", True, 0.02, 0.17)],
    )
    def test_cm_pvalue(self, bmt_loader, column, categorical, low, high):
        result = testcov(bmt_loader(column, categorical=categorical), ControlParams(B=2500, seed=2024))
        assert low <= result.cm_pvalue <= high
