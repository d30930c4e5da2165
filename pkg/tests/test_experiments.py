"""Tests for the type-I, power and validity experiments."""

import logging
import statistics

import pytest
from scipy.optimize import isotonic_regression

from ir_significance_simulation.core.experiments import (
    TEST_PAIRS, agreement_matrix, delta_ap_distribution, power_experiment,
    type1_experiment, validity_map_curve
)
from ir_significance_simulation.exceptions import ConfigurationError
from ir_significance_simulation.models.config_models import ExperimentConfig
from ir_significance_simulation.models.mixture_models import LogNormal, LogNormalMixture
from ir_significance_simulation.models.significance_models import ALL_TESTS, SignificanceTest
from ir_significance_simulation.utils.metrics import metrics


def _isotonic_residual(values):
    """Largest distance between a sequence and its best non-decreasing fit."""
    fitted = isotonic_regression(values).x
    return max(abs(a - b) for a, b in zip(values, fitted))


class TestType1:
    def test_row_count(self, synthetic_models, desk_config):
        report = type1_experiment(synthetic_models, desk_config)

        assert len(report.entries) == len(ALL_TESTS) * len(desk_config.alpha_grid) * len(desk_config.query_sizes)
        assert {e.n_trials for e in report.entries} == {desk_config.n_repetitions}

    def test_single_repetition_rates_are_binary(self, synthetic_models, desk_config):
        cfg = desk_config.model_copy(update={"n_repetitions": 1})

        report = type1_experiment(synthetic_models, cfg)

        assert all(e.rejection_rate in (0.0, 1.0) for e in report.entries)

    def test_rates_monotone_in_alpha(self, synthetic_models, desk_config):
        report = type1_experiment(synthetic_models, desk_config)

        for test in ALL_TESTS:
            for n in desk_config.query_sizes:
                rates = [report.rate(test, a, n) for a in desk_config.alpha_grid]
                assert rates == sorted(rates)

    def test_same_seed_same_report(self, synthetic_models, desk_config):
        assert type1_experiment(synthetic_models, desk_config) == type1_experiment(synthetic_models, desk_config)

    def test_thread_count_does_not_change_results(self, synthetic_mixture, desk_config):
        models = {
            "sysA": {f"q{i:02d}": synthetic_mixture for i in range(50)},
            "sysB": {f"q{i:02d}": synthetic_mixture for i in range(50)},
            "sysC": {f"q{i:02d}": synthetic_mixture for i in range(50)},
        }

        serial = type1_experiment(models, desk_config)
        parallel = type1_experiment(models, desk_config.model_copy(update={"threads": 4}))

        assert serial == parallel

    def test_per_system_and_agreement(self, synthetic_models, desk_config):
        report = type1_experiment(synthetic_models, desk_config)

        assert list(report.per_system) == ["synthetic"]
        assert len(report.agreement) == len(TEST_PAIRS) * len(desk_config.query_sizes)
        assert all(0.0 <= a.agreement <= 1.0 and a.h == 0.0 for a in report.agreement)

    def test_overall_rate_is_mean_of_system_rates(self, synthetic_mixture, desk_config):
        other = LogNormalMixture(lam=0.3, l1=LogNormal(mu=1.0, sigma=0.6), l0=LogNormal(mu=0.2, sigma=0.5))
        models = {
            "sysA": {f"q{i:02d}": synthetic_mixture for i in range(50)},
            "sysB": {f"q{i:02d}": other for i in range(50)},
            "sysC": {f"q{i:02d}": (other if i % 2 else synthetic_mixture) for i in range(50)},
        }

        report = type1_experiment(models, desk_config)

        for i, entry in enumerate(report.entries):
            system_rates = [entries[i].rejection_rate for entries in report.per_system.values()]
            assert entry.rejection_rate == pytest.approx(statistics.fmean(system_rates), abs=1e-12)

    def test_agreement_built_from_trial_decisions(self, synthetic_models, desk_config):
        cfg = desk_config.model_copy(update={"n_repetitions": 1})

        report = type1_experiment(synthetic_models, cfg)

        for entry in report.agreement:
            same = report.rate(entry.test_a, cfg.power_alpha, entry.n_queries) == \
                report.rate(entry.test_b, cfg.power_alpha, entry.n_queries)
            assert entry.agreement == (1.0 if same else 0.0)
            assert entry.n_trials == 1

    def test_query_size_beyond_available_is_skipped(self, synthetic_mixture, desk_config):
        models = {"small": {f"q{i}": synthetic_mixture for i in range(20)}}

        report = type1_experiment(models, desk_config)

        assert {e.n_trials for e in report.entries if e.n_queries == 50} == {0}
        assert {e.n_trials for e in report.entries if e.n_queries == 10} == {desk_config.n_repetitions}

    def test_empty_model_set(self, desk_config):
        with pytest.raises(ConfigurationError):
            type1_experiment({}, desk_config)

    @pytest.mark.slow
    def test_calibration_at_five_percent(self, synthetic_models):
        cfg = ExperimentConfig(n_repetitions=2000, n_resamples=10_000, alpha_grid=[0.05],
                               h_grid=[0.0], query_sizes=[50], master_seed=2024, threads=4)

        report = type1_experiment(synthetic_models, cfg)

        assert 0.035 <= report.rate(SignificanceTest.WILCOXON, 0.05, 50) <= 0.065
        assert 0.035 <= report.rate(SignificanceTest.PERMUTATION, 0.05, 50) <= 0.065
        # Bootstrap is at most nominal, up to three Monte Carlo standard errors
        assert report.rate(SignificanceTest.BOOTSTRAP, 0.05, 50) <= 0.05 + 3 * (0.05 * 0.95 / 2000) ** 0.5


class TestPower:
    def test_row_count(self, synthetic_models, desk_config):
        cfg = desk_config.model_copy(update={"h_grid": [0.0, 0.05, 0.1]})

        curve = power_experiment(synthetic_models, cfg)

        assert len(curve.points) == 3 * len(ALL_TESTS) * len(cfg.query_sizes)
        assert len(curve.agreement) == 3 * len(TEST_PAIRS) * len(cfg.query_sizes)

    def test_zero_effect_row_equals_type1(self, synthetic_models, desk_config):
        report = type1_experiment(synthetic_models, desk_config)
        curve = power_experiment(synthetic_models, desk_config)

        for test in ALL_TESTS:
            for n in desk_config.query_sizes:
                assert curve.p_reject(test, 0.0, n) == report.rate(test, desk_config.power_alpha, n)

    def test_nonpositive_mu1_logged_once_per_pair(self, desk_config, caplog):
        bad = LogNormalMixture(lam=0.1, l1=LogNormal(mu=-0.5, sigma=0.4), l0=LogNormal(mu=-1.0, sigma=0.4))
        good = LogNormalMixture(lam=0.1, l1=LogNormal(mu=1.0, sigma=0.4), l0=LogNormal(mu=0.5, sigma=0.4))
        models = {"sys": {**{f"b{i}": bad for i in range(2)}, **{f"g{i}": good for i in range(8)}}}
        cfg = desk_config.model_copy(update={"query_sizes": [10], "n_repetitions": 2, "h_grid": [0.0, 0.05, 0.1]})

        with caplog.at_level(logging.WARNING, logger="ir_significance_simulation"):
            power_experiment(models, cfg)

        messages = [r.getMessage() for r in caplog.records if "mu1=" in r.getMessage()]
        assert len(messages) == 2
        assert any("b0" in m for m in messages) and any("b1" in m for m in messages)

    @pytest.mark.slow
    def test_power_ordering(self, synthetic_models):
        cfg = ExperimentConfig(n_repetitions=500, n_resamples=2000, h_grid=[0.0, 0.02, 0.04, 0.06],
                               query_sizes=[50], master_seed=7, threads=4)

        curve = power_experiment(synthetic_models, cfg)

        def mean_power(test):
            return statistics.fmean(curve.p_reject(test, h, 50) for h in (0.02, 0.04, 0.06))

        permutation = mean_power(SignificanceTest.PERMUTATION)
        assert mean_power(SignificanceTest.WILCOXON) >= permutation - 0.02
        assert mean_power(SignificanceTest.SIGN) >= permutation - 0.02
        assert mean_power(SignificanceTest.BOOTSTRAP) <= permutation + 0.02

    @pytest.mark.slow
    def test_small_query_sets_lose_power(self, synthetic_models):
        cfg = ExperimentConfig(n_repetitions=500, n_resamples=2000, h_grid=[0.0, 0.04],
                               query_sizes=[10, 50], master_seed=11, threads=4)

        curve = power_experiment(synthetic_models, cfg)

        for test in ALL_TESTS:
            assert curve.p_reject(test, 0.04, 10) <= curve.p_reject(test, 0.04, 50) - 0.05, test


class TestValidity:
    def test_all_relevant_models_have_perfect_map(self, desk_config):
        perfect = LogNormalMixture(lam=1.0, l1=LogNormal(mu=1.0, sigma=0.4), l0=LogNormal(mu=0.5, sigma=0.4))
        models = {"sys": {f"q{i}": perfect for i in range(3)}}

        points = validity_map_curve(models, desk_config, [0.0, 0.1, 0.2])

        assert [p.mean_ap for p in points] == [1.0, 1.0, 1.0]

    def test_shared_streams_make_the_curve_non_decreasing(self, synthetic_models, desk_config):
        # mu1 > 0: scaling only lifts relevant scores of otherwise identical samples
        grid = [round(0.05 * i, 2) for i in range(7)]

        means = [p.mean_ap for p in validity_map_curve(synthetic_models, desk_config, grid)]

        assert means == sorted(means)
        assert means[-1] > means[0]

    def test_uses_configured_grid_by_default(self, synthetic_models, desk_config):
        points = validity_map_curve(synthetic_models, desk_config)

        assert [p.h for p in points] == desk_config.h_grid

    @pytest.mark.slow
    def test_map_curve_is_monotone(self, synthetic_models):
        cfg = ExperimentConfig(n_samples_per_list=1000, map_simulations=20, master_seed=5, threads=4)
        grid = [round(0.05 * i, 2) for i in range(7)]

        points = validity_map_curve(synthetic_models, cfg, grid)

        assert _isotonic_residual([p.mean_ap for p in points]) < 0.01
        assert points[-1].mean_ap > points[0].mean_ap

    def test_delta_ap_record_count(self, synthetic_models):
        records = delta_ap_distribution(synthetic_models, 0.05, n_reps=4, n_samples=200, master_seed=1)

        assert len(records) == 50 * 4
        assert {r.rep for r in records} == {0, 1, 2, 3}

    def test_zero_base_ap_is_flagged(self):
        empty = LogNormalMixture(lam=0.0, l1=LogNormal(mu=1.0, sigma=0.4), l0=LogNormal(mu=0.5, sigma=0.4))

        records = delta_ap_distribution({"sys": {"q1": empty}}, 0.05, n_reps=3, n_samples=50)

        assert all(r.base_zero and r.delta_ap_pct is None for r in records)

    def test_delta_ap_reproducible(self, synthetic_models):
        first = delta_ap_distribution(synthetic_models, 0.05, n_reps=2, n_samples=100, master_seed=3)
        second = delta_ap_distribution(synthetic_models, 0.05, n_reps=2, n_samples=100, master_seed=3)

        assert first == second

    def test_rejects_bad_arguments(self, synthetic_models):
        with pytest.raises(ValueError):
            delta_ap_distribution(synthetic_models, -0.1, n_reps=2)
        with pytest.raises(ValueError):
            delta_ap_distribution(synthetic_models, 0.05, n_reps=0)

    @pytest.mark.slow
    def test_delta_ap_dispersion(self, synthetic_models):
        records = delta_ap_distribution(synthetic_models, 0.05, n_reps=100, n_samples=1000, master_seed=9)
        deltas = [r.delta_ap_pct for r in records if not r.base_zero]

        assert statistics.median(deltas) > 0
        assert min(deltas) < 0 < max(deltas)


class TestAgreementMatrix:
    def test_pairwise_fractions(self):
        decisions = {
            SignificanceTest.TTEST: [True, False, True, False],
            SignificanceTest.WILCOXON: [True, False, False, False],
            SignificanceTest.SIGN: [True, False, True, False],
            SignificanceTest.PERMUTATION: [False, True, False, True],
            SignificanceTest.BOOTSTRAP: [True, False, True, False],
        }

        entries = {(e.test_a, e.test_b): e for e in agreement_matrix(decisions, n_queries=50)}

        assert len(entries) == 10
        assert entries[(SignificanceTest.TTEST, SignificanceTest.SIGN)].agreement == 1.0
        assert entries[(SignificanceTest.TTEST, SignificanceTest.WILCOXON)].agreement == 0.75
        assert entries[(SignificanceTest.TTEST, SignificanceTest.PERMUTATION)].agreement == 0.0
        assert all(e.n_trials == 4 for e in entries.values())

    def test_unequal_lengths(self):
        decisions = {t: [True, False] for t in ALL_TESTS}
        decisions[SignificanceTest.SIGN] = [True]

        with pytest.raises(ValueError):
            agreement_matrix(decisions, n_queries=10)

    def test_power_agreement_entries(self, synthetic_models, desk_config):
        curve = power_experiment(synthetic_models, desk_config)

        for entry in curve.agreement:
            assert 0.0 <= entry.agreement <= 1.0
            assert entry.n_trials == desk_config.n_repetitions


class TestExperimentMetrics:
    def test_trials_and_timings_recorded(self, synthetic_models, desk_config):
        metrics.reset()

        type1_experiment(synthetic_models, desk_config)

        expected = desk_config.n_repetitions * len(desk_config.query_sizes)
        assert metrics.get_counter_value("trials") == expected
        assert metrics.get_metric_stats("type1_experiment").count == 1
