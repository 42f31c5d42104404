"""Synthetic-scenario generators and their closed-form descriptors."""

import math

import numpy as np
import pytest
from scipy.stats import kstest, skewnorm

from dpirt import (
    ModelKind,
    ValidationError,
    sample_skew_normal,
    scenario_density,
    simulate_abilities,
    simulate_items,
    simulate_responses,
    simulate_truth,
)
from dpirt.scenarios import GroundTruth, Scenario, skew_normal_mean, skew_normal_pdf


class TestSimulateItems:
    def test_three_item_difficulties(self):
        _, beta, _ = simulate_items(3, seed=0)
        np.testing.assert_allclose(beta, [-1.5, 0.0, 1.5])

    def test_difficulties_sum_to_zero_and_span(self):
        for i in (2, 7, 10, 31):
            _, beta, _ = simulate_items(i, seed=3)
            assert beta.sum() == pytest.approx(0.0, abs=1e-12)
            assert beta.min() > -3 and beta.max() < 3

    def test_log_centering_for_any_seed(self):
        for seed in range(10):
            lam, _, raw = simulate_items(12, seed=seed)
            assert abs(np.log(lam).sum()) < 1e-12
            assert ((raw > 0.5) & (raw < 1.5)).all()

    def test_rejects_single_item(self):
        with pytest.raises(ValidationError):
            simulate_items(1, seed=0)


class TestSimulateAbilities:
    def test_unimodal_moments(self):
        eta = simulate_abilities("unimodal", 100_000, seed=1)
        assert eta.mean() == pytest.approx(0.0, abs=0.02)
        assert eta.std() == pytest.approx(1.25, abs=0.02)

    def test_bimodal_symmetry(self):
        eta = simulate_abilities("bimodal", 100_000, seed=2)
        assert eta.mean() == pytest.approx(0.0, abs=0.03)

    def test_multimodal_mean_matches_mixture_formula(self):
        # oracle: mixture mean with the skew component's xi + omega*delta*sqrt(2/pi)
        expected = 0.2 * (-2.0) + 0.4 * 0.0 + 0.4 * skew_normal_mean(3.0, 1.0, -3.0)
        assert expected == pytest.approx(0.49722, abs=1e-4)
        eta = simulate_abilities("multimodal", 200_000, seed=3)
        se = eta.std() / math.sqrt(len(eta))
        assert eta.mean() == pytest.approx(expected, abs=3 * se)

    def test_unknown_scenario(self):
        with pytest.raises(ValidationError):
            simulate_abilities("trimodal", 10, seed=0)


class TestSkewNormal:
    def test_delta_representation_against_scipy(self, rng):
        draws = sample_skew_normal(3.0, 1.0, -3.0, 50_000, rng)
        stat = kstest(draws, skewnorm(-3.0, loc=3.0, scale=1.0).cdf)
        assert stat.pvalue > 0.01

    def test_pdf_matches_scipy(self):
        grid = np.linspace(-2, 6, 101)
        np.testing.assert_allclose(
            skew_normal_pdf(grid, 3.0, 1.0, -3.0),
            skewnorm(-3.0, loc=3.0, scale=1.0).pdf(grid),
            atol=1e-12,
        )

    def test_mean_formula_matches_scipy(self):
        assert skew_normal_mean(3.0, 1.0, -3.0) == pytest.approx(
            skewnorm(-3.0, loc=3.0, scale=1.0).mean(), rel=1e-12
        )


class TestScenarioDensity:
    @pytest.mark.parametrize("name", ["unimodal", "bimodal", "multimodal"])
    def test_integrates_to_one(self, name):
        grid = np.linspace(-12, 12, 4001)
        assert np.trapezoid(scenario_density(name, grid), grid) == pytest.approx(1.0, abs=1e-4)

    def test_matches_empirical_histogram(self):
        eta = simulate_abilities("multimodal", 200_000, seed=5)
        hist, edges = np.histogram(eta, bins=60, range=(-6, 6), density=True)
        mids = 0.5 * (edges[1:] + edges[:-1])
        np.testing.assert_allclose(hist, scenario_density("multimodal", mids), atol=0.02)


class TestSimulateResponses:
    def test_extreme_parameters_force_all_ones(self):
        truth = GroundTruth(
            scenario="unimodal",
            discrimination=np.array([1.0, 1.0]),
            difficulty=np.array([-60.0, -60.0]),
            abilities=np.zeros(5),
            discrimination_uncentered=np.array([1.0, 1.0]),
        )
        data = simulate_responses(truth, seed=0)
        assert (data.values == 1).all()

    def test_same_seed_is_bitwise_identical(self):
        truth = simulate_truth(Scenario("bimodal", 30, 4, seed=9))
        a = simulate_responses(truth, seed=4)
        b = simulate_responses(truth, seed=4)
        np.testing.assert_array_equal(a.values, b.values)

    def test_cell_means_match_success_probability(self, rng):
        from dpirt import success_probability

        truth = GroundTruth(
            scenario="unimodal",
            discrimination=np.array([0.8, 1.4]),
            difficulty=np.array([-0.5, 0.5]),
            abilities=np.array([0.3, -1.2]),
            discrimination_uncentered=np.array([0.8, 1.4]),
        )
        reps = 10_000
        counts = np.zeros((2, 2))
        for r in range(reps):
            counts += simulate_responses(truth, seed=r).values
        freq = counts / reps
        pi = success_probability(
            ModelKind.TWO_PL,
            truth.discrimination[None, :],
            truth.difficulty[None, :],
            truth.abilities[:, None],
        )
        se = np.sqrt(pi * (1 - pi) / reps)
        np.testing.assert_array_less(np.abs(freq - pi), 3.5 * se)

    def test_three_pl_requires_guessing(self):
        truth = simulate_truth(Scenario("unimodal", 10, 3, seed=1))
        with pytest.raises(ValidationError):
            simulate_responses(truth, kind=ModelKind.THREE_PL, seed=0)


class TestGroundTruthCsv:
    def test_round_trip(self, tmp_path):
        truth = simulate_truth(Scenario("multimodal", 15, 4, seed=11))
        path = tmp_path / "truth.csv"
        truth.to_csv(path)
        loaded = GroundTruth.from_csv(path)
        np.testing.assert_allclose(loaded.discrimination, truth.discrimination, rtol=1e-15)
        np.testing.assert_allclose(loaded.abilities, truth.abilities, rtol=1e-15)
        assert loaded.scenario == "multimodal"
