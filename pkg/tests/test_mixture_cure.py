"""Tests for the cure probability and latency estimators."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from curekit.bandwidths import BandwidthSpec
from curekit.beran import beran_survival, normal_quantile
from curekit.control import ControlParams
from curekit.errors import InvalidSample, UsageError
from curekit.mixture_cure import latency, probcure
from curekit.survival_data import SurvivalSample

WIDE = BandwidthSpec.single(1e6)


class TestProbcure:
    def test_four_subject_hand_case(self, four_subjects):
        estimate = probcure(four_subjects, [1.5], WIDE)
        assert estimate.t1max == 2.0
        assert estimate.cure[0] == pytest.approx(0.5, abs=1e-9)

    def test_uncensored_sample_has_no_cure(self):
        sample = SurvivalSample(x=[0.0, 1.0, 2.0, 3.0], t=[1.0, 2.0, 3.0, 4.0], d=[1, 1, 1, 1])
        estimate = probcure(sample, [1.5], WIDE)
        assert estimate.cure[0] == 0.0

    def test_no_events_gives_cure_one(self):
        sample = SurvivalSample(x=[0.0, 1.0, 2.0, 3.0], t=[1.0, 2.0, 3.0, 4.0], d=[0, 0, 0, 0])
        estimate = probcure(sample, [0.5, 2.5])
        assert estimate.no_events
        assert_allclose(estimate.cure, [1.0, 1.0])
        assert np.all(np.isnan(estimate.h.values))

    def test_point_out_of_reach_fails_alone(self, random_sample):
        estimate = probcure(random_sample, [0.5, 40.0], BandwidthSpec.single(0.2))
        assert np.isfinite(estimate.cure[0])
        assert np.isnan(estimate.cure[1])
        assert estimate.errors[0] is None
        assert "all kernel weights are zero" in estimate.errors[1]

    def test_equals_beran_curve_at_last_event(self, random_sample):
        estimate = probcure(random_sample, [0.3, 0.7], BandwidthSpec.local([0.25, 0.4]))
        for x0, h, cure in zip([0.3, 0.7], [0.25, 0.4], estimate.cure):
            assert cure == beran_survival(random_sample, x0, h, [random_sample.t1max]).values[0]

    def test_rejects_categorical_covariate(self):
        sample = SurvivalSample.from_arrays(["a", "b"], [1.0, 2.0], [1, 0])
        with pytest.raises(InvalidSample):
            probcure(sample, [0.0], WIDE)

    def test_rejects_empty_grid(self, random_sample):
        with pytest.raises(UsageError):
            probcure(random_sample, [], WIDE)

    def test_selected_bandwidths_are_used(self, sim_sample, fast_params):
        estimate = probcure(sim_sample, [-0.5, 0.5], params=fast_params)
        assert estimate.selection.kind == "probcure_hboot"
        assert np.array_equal(estimate.h.values, estimate.selection.h.values)
        assert estimate.seed == fast_params.seed

    def test_smoothed_bandwidths_are_used(self, sim_sample, fast_params):
        params = fast_params.with_updates(hsmooth=3)
        estimate = probcure(sim_sample, np.linspace(-1, 1, 5), params=params)
        assert_allclose(estimate.h.values, estimate.selection.smoothed.values)


class TestConfidenceIntervals:
    def test_normal_quantile(self):
        assert normal_quantile(0.95, "probcure") == pytest.approx(1.959964, abs=1e-6)

    @pytest.mark.parametrize("level", [0.0, 1.0, 1.5])
    def test_rejects_bad_level(self, random_sample, level):
        with pytest.raises(UsageError):
            probcure(random_sample, [0.5], WIDE, conflevel=level)

    def test_interval_contains_estimate(self, random_sample):
        params = ControlParams(B=40, seed=3, workers=1)
        estimate = probcure(random_sample, [0.3, 0.6], BandwidthSpec.single(0.3), conflevel=0.95, params=params)
        assert np.all(estimate.ci_lower <= estimate.cure)
        assert np.all(estimate.cure <= estimate.ci_upper)
        assert np.all((estimate.ci_lower >= 0) & (estimate.ci_upper <= 1))
        assert estimate.conflevel == 0.95

    def test_interval_reproducible_from_seed(self, random_sample):
        params = ControlParams(B=25, seed=17, workers=1)
        a = probcure(random_sample, [0.5], BandwidthSpec.single(0.3), conflevel=0.9, params=params)
        b = probcure(random_sample, [0.5], BandwidthSpec.single(0.3), conflevel=0.9, params=params.with_updates(workers=4))
        assert np.array_equal(a.ci_lower, b.ci_lower)
        assert np.array_equal(a.ci_upper, b.ci_upper)

    def test_latency_band_is_clamped(self, random_sample):
        params = ControlParams(B=25, seed=5, workers=1)
        estimate = latency(random_sample, [0.5], BandwidthSpec.single(0.4), [0.2, 0.8], conflevel=0.95, params=params)
        ok = np.isfinite(estimate.ci_lower)
        assert np.all((estimate.ci_lower[ok] >= 0) & (estimate.ci_upper[ok] <= 1))


class TestLatency:
    def test_four_subject_hand_case(self, four_subjects):
        estimate = latency(four_subjects, [1.5], WIDE, eval_times=[0.5, 1.0, 2.0, 4.0])
        assert_allclose(estimate.values[0], [1.0, 0.5, 0.0, 0.0], atol=1e-9)
        assert estimate.cure[0] == pytest.approx(0.5, abs=1e-9)

    def test_mixture_identity(self, random_sample):
        times = np.linspace(0.0, random_sample.t.max(), 30)
        lat = latency(random_sample, [0.4], BandwidthSpec.single(0.3), eval_times=times)
        surv = beran_survival(random_sample, 0.4, 0.3, times).values
        cure = lat.cure[0]
        assert_allclose(cure + (1 - cure) * lat.unclamped[0], surv, atol=1e-12)

    def test_values_are_clamped(self, random_sample):
        estimate = latency(random_sample, [0.2, 0.8], BandwidthSpec.single(0.2))
        finite = estimate.values[np.isfinite(estimate.values)]
        assert np.all((finite >= 0) & (finite <= 1))

    def test_cure_one_is_reported_per_point(self):
        sample = SurvivalSample(x=[0.0, 0.1, 5.0, 5.1], t=[1.0, 2.0, 3.0, 4.0], d=[1, 1, 0, 0])
        # near x=5 only censored subjects carry weight
        estimate = latency(sample, [0.05, 5.05], BandwidthSpec.single(0.5), eval_times=[0.5])
        assert estimate.errors[0] is None
        assert "cure" in estimate.errors[1].lower()
        assert np.isnan(estimate.values[1, 0])

    def test_aliases(self, random_sample):
        estimate = latency(random_sample, [0.5], BandwidthSpec.single(0.3), eval_times=[0.1, 0.2])
        assert estimate.testim is estimate.times
        assert estimate.S0 is estimate.values

    def test_selection_independent_of_workers(self, sim_sample, fast_params):
        results = [
            latency(sim_sample, [-0.5, 0.5], eval_times=[1.0], params=fast_params.with_updates(workers=w))
            for w in (1, 2, 8)
        ]
        for other in results[1:]:
            assert np.array_equal(results[0].h.values, other.h.values)
            assert np.array_equal(results[0].values, other.values, equal_nan=True)
