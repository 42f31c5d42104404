"""Collapsed CRP updates, the base-measure marginal, and the concentration sampler."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import invgamma, norm

from dpirt import NormalInverseGamma, ValidationError, simulate_crp_partition
from dpirt.samplers import (
    BaseMeasureMarginal,
    CRPState,
    crp_assignment_update,
    crp_label_sweep,
    escobar_west_alpha_update,
    sample_new_atom,
    update_cluster_atoms,
)

G0 = NormalInverseGamma(mean_loc=0.0, mean_var=3.0, shape=2.01, scale=1.01)


from oracles import quad_marginal


def prior_state(n, alpha, rng):
    """Joint prior draw: partition, atoms, abilities."""
    labels = simulate_crp_partition(alpha, n, rng)
    k = labels.max() + 1
    means, variances = G0.sample(rng, size=k)
    state = CRPState(
        labels=labels,
        counts=list(np.bincount(labels)),
        means=list(means),
        variances=list(variances),
        alpha=alpha,
    )
    eta = rng.normal(means[labels], np.sqrt(variances[labels]))
    return state, eta


class TestBaseMeasureMarginal:
    @pytest.mark.parametrize("eta", [0.0, 0.7, -2.3, 5.0, 11.0])
    def test_matches_adaptive_quadrature(self, eta):
        # the fixed-node rule agrees with mpmath to ~1e-12; the adaptive
        # oracle itself is only good to ~1e-7 relative in the far tail
        approx = BaseMeasureMarginal(G0).pdf(eta)
        assert approx == pytest.approx(quad_marginal(eta), rel=1e-6)

    def test_vectorized_evaluation(self):
        marginal = BaseMeasureMarginal(G0)
        grid = np.array([-1.0, 0.0, 2.0])
        np.testing.assert_allclose(marginal.pdf(grid), [marginal.pdf(x) for x in grid])

    def test_integrates_to_one(self):
        marginal = BaseMeasureMarginal(G0)
        total, _ = integrate.quad(lambda e: marginal.pdf(e), -np.inf, np.inf, limit=300)
        assert total == pytest.approx(1.0, abs=1e-6)


class TestNewAtomSampler:
    def test_variance_distribution_matches_conditional(self, rng):
        eta = 1.7
        draws = np.array([sample_new_atom(eta, G0, rng) for _ in range(40_000)])
        vs = draws[:, 1]

        def cond_pdf(v):
            return invgamma.pdf(v, G0.shape, scale=G0.scale) * norm.pdf(
                eta, scale=np.sqrt(G0.mean_var + v)
            )

        z, _ = integrate.quad(cond_pdf, 0, np.inf, limit=300)
        for threshold in (0.2, 0.5, 1.0, 3.0):
            expected, _ = integrate.quad(cond_pdf, 0, threshold, limit=300)
            expected /= z
            observed = (vs < threshold).mean()
            se = math.sqrt(expected * (1 - expected) / len(vs))
            assert observed == pytest.approx(expected, abs=4 * se)

    def test_mean_of_atom_centers(self, rng):
        eta = -2.2
        draws = np.array([sample_new_atom(eta, G0, rng) for _ in range(40_000)])

        def cond_pdf(v):
            return invgamma.pdf(v, G0.shape, scale=G0.scale) * norm.pdf(
                eta, scale=np.sqrt(G0.mean_var + v)
            )

        def post_mean(v):
            post_var = 1.0 / (1.0 / G0.mean_var + 1.0 / v)
            return post_var * eta / v

        z, _ = integrate.quad(cond_pdf, 0, np.inf, limit=300)
        expected, _ = integrate.quad(lambda v: post_mean(v) * cond_pdf(v) / z, 0, np.inf, limit=300)
        se = draws[:, 0].std() / math.sqrt(len(draws))
        assert draws[:, 0].mean() == pytest.approx(expected, abs=4 * se)


class TestAssignmentUpdate:
    def test_single_individual_always_one_cluster(self, rng):
        for _ in range(50):
            state = CRPState.single_cluster(1, alpha=0.8)
            crp_assignment_update(0, state, 0.3, G0, rng)
            assert state.n_clusters == 1
            assert state.counts == [1]
            assert state.labels[0] == 0
            state.validate()

    def test_second_customer_new_cluster_rate_is_prior(self, rng):
        """Stationarity at n=2 recovers the alpha/(alpha+1) prior weight."""
        alpha = 0.7
        reps = 40_000
        new = 0
        for _ in range(reps):
            state, eta = prior_state(2, alpha, rng)
            crp_assignment_update(1, state, float(eta[1]), G0, rng)
            new += state.labels[1] != state.labels[0]
        expected = alpha / (alpha + 1.0)
        se = math.sqrt(expected * (1 - expected) / reps)
        assert new / reps == pytest.approx(expected, abs=3.5 * se)

    def test_toy_frequencies_match_enumeration(self, rng):
        """3-individual toy with fixed atoms against brute-force enumeration."""
        alpha = 1.3
        eta = np.array([0.4, -1.1, 2.0])
        means = [-0.5, 1.5]
        variances = [0.8, 1.6]
        weights = np.array(
            [
                1.0 * norm.pdf(eta[0], means[0], math.sqrt(variances[0])),
                1.0 * norm.pdf(eta[0], means[1], math.sqrt(variances[1])),
                alpha * quad_marginal(float(eta[0])),
            ]
        )
        expected = weights / weights.sum()
        counts = np.zeros(3)
        reps = 100_000
        for _ in range(reps):
            state = CRPState(
                labels=np.array([0, 0, 1]),
                counts=[2, 1],
                means=list(means),
                variances=list(variances),
                alpha=alpha,
            )
            crp_assignment_update(0, state, float(eta[0]), G0, rng)
            if state.labels[0] == state.labels[1]:
                counts[0] += 1
            elif state.labels[0] == state.labels[2]:
                counts[1] += 1
            else:
                counts[2] += 1
        freq = counts / reps
        se = np.sqrt(expected * (1 - expected) / reps)
        np.testing.assert_array_less(np.abs(freq - expected), 3.5 * se + 1e-12)

    def test_emptied_cluster_is_compacted(self, rng):
        state = CRPState(
            labels=np.array([0, 1, 2]),
            counts=[1, 1, 1],
            means=[0.0, 5.0, -5.0],
            variances=[1.0, 1.0, 1.0],
            alpha=0.01,
        )
        crp_assignment_update(0, state, 5.0, G0, rng)
        state.validate()
        assert sum(state.counts) == 3

    def test_rejects_nonfinite_ability(self, rng):
        state = CRPState.single_cluster(2, alpha=1.0)
        with pytest.raises(ValidationError):
            crp_assignment_update(0, state, float("nan"), G0, rng)

    def test_state_validation_catches_corruption(self):
        state = CRPState(
            labels=np.array([0, 0]),
            counts=[1, 1],
            means=[0.0, 0.0],
            variances=[1.0, 1.0],
            alpha=1.0,
        )
        with pytest.raises(ValidationError):
            state.validate()


class TestEscobarWest:
    def test_prior_invariance_through_crp_coupling(self, rng):
        """K ~ CRP(alpha) then alpha | K leaves the Gamma prior invariant."""
        shape, rate, n = 2.0, 4.0, 40
        reps, sweeps = 4000, 5
        finals = np.empty(reps)
        for r in range(reps):
            alpha = rng.gamma(shape, 1.0 / rate)
            for _ in range(sweeps):
                labels = simulate_crp_partition(alpha, n, rng)
                k = int(labels.max()) + 1
                alpha = escobar_west_alpha_update(alpha, k, n, (shape, rate), rng)
            finals[r] = alpha
        se_mean = finals.std() / math.sqrt(reps)
        assert finals.mean() == pytest.approx(shape / rate, abs=3.5 * se_mean)
        assert finals.var() == pytest.approx(shape / rate**2, rel=0.15)

    def test_more_clusters_push_alpha_up(self, rng):
        small = np.array(
            [escobar_west_alpha_update(1.0, 2, 50, (2.0, 4.0), rng) for _ in range(4000)]
        )
        large = np.array(
            [escobar_west_alpha_update(1.0, 30, 50, (2.0, 4.0), rng) for _ in range(4000)]
        )
        assert large.mean() > small.mean() * 1.5

    def test_rejects_invalid_cluster_count(self, rng):
        with pytest.raises(ValidationError):
            escobar_west_alpha_update(1.0, 0, 10, (2.0, 4.0), rng)
        with pytest.raises(ValidationError):
            escobar_west_alpha_update(1.0, 11, 10, (2.0, 4.0), rng)


class TestBlockInvariance:
    def test_full_crp_block_leaves_prior_invariant(self, rng):
        """Labels -> atoms -> alpha sweeps preserve the joint prior."""
        shape, rate, n = 2.0, 4.0, 30
        reps, sweeps = 500, 4
        ks = np.empty(reps)
        alphas = np.empty(reps)
        eta_means = np.empty(reps)
        for r in range(reps):
            alpha = rng.gamma(shape, 1.0 / rate)
            state, eta = prior_state(n, alpha, rng)
            for _ in range(sweeps):
                crp_label_sweep(state, eta, G0, rng)
                update_cluster_atoms(state, eta, G0, rng)
                state.alpha = escobar_west_alpha_update(
                    state.alpha, state.n_clusters, n, (shape, rate), rng
                )
                # no-data conditional refresh of the abilities
                mu = np.asarray(state.means)[state.labels]
                sd = np.sqrt(np.asarray(state.variances)[state.labels])
                eta = rng.normal(mu, sd)
            state.validate()
            ks[r] = state.n_clusters
            alphas[r] = state.alpha
            eta_means[r] = eta.mean()
        from dpirt import marginal_cluster_moments

        expected_k, expected_k_var = marginal_cluster_moments(shape, rate, n, n_mc=20_000, seed=9)
        assert ks.mean() == pytest.approx(expected_k, abs=3.5 * math.sqrt(expected_k_var / reps))
        se_alpha = alphas.std() / math.sqrt(reps)
        assert alphas.mean() == pytest.approx(shape / rate, abs=3.5 * se_alpha)
        se_eta = eta_means.std() / math.sqrt(reps)
        assert eta_means.mean() == pytest.approx(0.0, abs=3.5 * se_eta)
