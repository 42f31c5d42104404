"""Chain driver: determinism, degenerate inputs, constraint bookkeeping."""

import numpy as np
import pytest

from dpirt import (
    ModelKind,
    Priors,
    ResponseMatrix,
    SampleArchive,
    StrategyConfig,
    ValidationError,
    run_chain,
    table_strategies,
)
from dpirt.model import Parameterization
from dpirt.samplers import AbilityModel, Algorithm, ConstraintMode
from dpirt.scenarios import Scenario, simulate_responses, simulate_truth


@pytest.fixture(scope="module")
def small_dataset():
    truth = simulate_truth(Scenario("unimodal", 35, 5, seed=21))
    return simulate_responses(truth, seed=21), truth


class TestStrategyMatrix:
    def test_exactly_thirteen_non_hmc_cells(self):
        assert len(table_strategies()) == 13

    def test_invalid_combinations_rejected(self):
        with pytest.raises(ValidationError):
            StrategyConfig(parameterization=Parameterization.IRT, algorithm=Algorithm.CENTERED)
        with pytest.raises(ValidationError):
            StrategyConfig(
                constraint=ConstraintMode.ABILITIES, ability_model=AbilityModel.SEMIPARAMETRIC
            )
        with pytest.raises(ValidationError):
            StrategyConfig(
                parameterization=Parameterization.SI,
                constraint=ConstraintMode.ITEMS,
                algorithm=Algorithm.CENTERED,
            )
        with pytest.raises(ValidationError):
            StrategyConfig(
                kind=ModelKind.ONE_PL,
                parameterization=Parameterization.SI,
                algorithm=Algorithm.CENTERED,
            )

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValidationError):
            StrategyConfig.from_dict({"kind": "2pl", "flavor": "spicy"})


class TestDeterminism:
    @pytest.mark.parametrize(
        "strategy",
        [
            StrategyConfig(),
            StrategyConfig(
                parameterization=Parameterization.SI,
                algorithm=Algorithm.CENTERED,
                ability_model=AbilityModel.SEMIPARAMETRIC,
            ),
        ],
        ids=["parametric", "semiparametric"],
    )
    def test_same_seed_bitwise_identical(self, small_dataset, strategy, tmp_path):
        data, _ = small_dataset
        a = run_chain(data, strategy, n_iterations=250, n_burnin=50, seed=123)
        b = run_chain(data, strategy, n_iterations=250, n_burnin=50, seed=123)
        np.testing.assert_array_equal(a.draws, b.draws)
        a.save(tmp_path / "a")
        b.save(tmp_path / "b")
        for name in ("samples.csv", "labels.csv", "clusters.csv"):
            fa, fb = tmp_path / "a" / name, tmp_path / "b" / name
            if fa.exists():
                assert fa.read_bytes() == fb.read_bytes()

    def test_different_seeds_differ(self, small_dataset):
        data, _ = small_dataset
        a = run_chain(data, StrategyConfig(), n_iterations=200, n_burnin=50, seed=1)
        b = run_chain(data, StrategyConfig(), n_iterations=200, n_burnin=50, seed=2)
        assert not np.array_equal(a.draws, b.draws)


class TestChainBehavior:
    def test_degenerate_data_stays_finite(self):
        # one item everyone gets right, one everyone gets wrong
        values = np.zeros((20, 3), dtype=np.int8)
        values[:, 0] = 1
        values[:, 2] = np.arange(20) % 2
        data = ResponseMatrix(values=values, observed=np.ones_like(values, dtype=bool), item_names=("a", "b", "c"))
        archive = run_chain(data, StrategyConfig(), n_iterations=300, n_burnin=100, seed=5)
        assert np.isfinite(archive.draws).all()

    def test_constrained_items_draws_satisfy_sums(self, small_dataset):
        data, _ = small_dataset
        for parameterization in (Parameterization.IRT, Parameterization.SI):
            archive = run_chain(
                data,
                StrategyConfig(parameterization=parameterization, constraint=ConstraintMode.ITEMS),
                n_iterations=250,
                n_burnin=50,
                seed=7,
            )
            lam = archive.block("lambda")[1]
            loc_prefix = "beta" if parameterization is Parameterization.IRT else "gamma"
            loc = archive.block(loc_prefix)[1]
            assert np.abs(np.log(lam).sum(axis=1)).max() < 1e-10
            assert np.abs(loc.sum(axis=1)).max() < 1e-10

    def test_constrained_abilities_has_fixed_hyperparameters(self, small_dataset):
        data, _ = small_dataset
        archive = run_chain(
            data,
            StrategyConfig(constraint=ConstraintMode.ABILITIES),
            n_iterations=200,
            n_burnin=50,
            seed=9,
        )
        assert (archive.column("mu_eta") == 0.0).all()
        assert (archive.column("sigma2_eta") == 1.0).all()

    def test_one_pl_keeps_unit_discrimination(self, small_dataset):
        data, _ = small_dataset
        archive = run_chain(
            data, StrategyConfig(kind=ModelKind.ONE_PL), n_iterations=200, n_burnin=50, seed=3
        )
        assert (archive.block("lambda")[1] == 1.0).all()

    def test_three_pl_guessing_draws_in_unit_interval(self, small_dataset):
        data, _ = small_dataset
        archive = run_chain(
            data, StrategyConfig(kind=ModelKind.THREE_PL), n_iterations=200, n_burnin=50, seed=3
        )
        ups = archive.block("upsilon")[1]
        assert ((ups > 0) & (ups < 1)).all()
        assert "guessing" in archive.meta["acceptance_rates"]

    def test_burnin_validation(self, small_dataset):
        data, _ = small_dataset
        with pytest.raises(ValidationError):
            run_chain(data, StrategyConfig(), n_iterations=100, n_burnin=100, seed=1)

    def test_semiparametric_archive_bookkeeping(self, small_dataset):
        data, _ = small_dataset
        archive = run_chain(
            data,
            StrategyConfig(ability_model=AbilityModel.SEMIPARAMETRIC),
            n_iterations=250,
            n_burnin=50,
            seed=13,
            debug=True,
        )
        assert archive.labels.shape == (200, data.n_individuals)
        counts = archive.column("n_clusters")
        for t in (0, 57, 199):
            rows = archive.clusters_for_draw(t)
            assert rows.shape[0] == counts[t]
            assert rows[:, 2].sum() == data.n_individuals
        assert (archive.column("alpha") > 0).all()

    def test_posterior_tracks_truth_loosely(self, small_dataset):
        data, truth = small_dataset
        archive = run_chain(data, StrategyConfig(), n_iterations=1500, n_burnin=500, seed=17)
        eta_hat = archive.block("eta")[1].mean(axis=0)
        corr = np.corrcoef(eta_hat, truth.abilities)[0, 1]
        assert corr > 0.6

    def test_timings_recorded(self, small_dataset):
        data, _ = small_dataset
        archive = run_chain(data, StrategyConfig(), n_iterations=150, n_burnin=50, seed=2)
        t = archive.meta["timings"]
        assert t["burnin_seconds"] > 0 and t["sampling_seconds"] > 0
        assert t["total_seconds"] == pytest.approx(
            t["burnin_seconds"] + t["sampling_seconds"], rel=1e-6
        )


class TestArchiveRoundTrip:
    def test_save_load_preserves_everything(self, small_dataset, tmp_path):
        data, _ = small_dataset
        archive = run_chain(
            data,
            StrategyConfig(ability_model=AbilityModel.SEMIPARAMETRIC),
            n_iterations=150,
            n_burnin=50,
            seed=31,
        )
        archive.save(tmp_path / "arch")
        loaded = SampleArchive.load(tmp_path / "arch")
        assert loaded.columns == archive.columns
        np.testing.assert_array_equal(loaded.draws, archive.draws)
        np.testing.assert_array_equal(loaded.labels, archive.labels)
        np.testing.assert_array_equal(loaded.clusters, archive.clusters)
        assert loaded.meta["seed"] == 31

    def test_load_missing_directory_raises(self, tmp_path):
        with pytest.raises(ValidationError):
            SampleArchive.load(tmp_path / "nothing")


class TestPriorInvarianceParametricKernel:
    def test_joint_sweeps_preserve_prior_moments(self, rng):
        """Sample prior, simulate data, sweep; marginals must match the prior."""
        from dpirt.model import success_probability

        n, i = 12, 3
        reps, sweeps = 400, 3
        priors = Priors()
        keep_beta = np.empty((reps, i))
        keep_loglam = np.empty((reps, i))
        keep_mu = np.empty(reps)
        for r in range(reps):
            lam = np.exp(rng.normal(0.0, np.sqrt(0.5), i))
            beta = rng.normal(0.0, np.sqrt(3.0), i)
            mu = rng.normal(0, np.sqrt(3.0))
            s2 = 1.01 / rng.gamma(2.01, 1.0)
            eta = rng.normal(mu, np.sqrt(s2), n)
            pi = success_probability("2pl", lam[None, :], beta[None, :], eta[:, None])
            values = (rng.random((n, i)) < pi).astype(np.int8)
            # regenerating data each sweep makes this a Gibbs sampler on the
            # joint (parameters, data) prior, so parameter marginals persist
            from dpirt.samplers.chain import _Chain

            data = ResponseMatrix(values, np.ones_like(values, dtype=bool), ("a", "b", "c"))
            chain = _Chain(data, StrategyConfig(), priors, seed=r)
            chain.state.log_lam = np.log(lam)
            chain.state.loc = beta.copy()
            chain.state.eta = eta.copy()
            chain.state.mu_eta, chain.state.sigma2_eta = mu, s2
            for _ in range(sweeps):
                chain.sweep()
                pi = success_probability(
                    "2pl",
                    np.exp(chain.state.log_lam)[None, :],
                    chain.state.loc[None, :],
                    chain.state.eta[:, None],
                )
                chain.lik.y = (rng.random((n, i)) < pi).astype(float)
            keep_beta[r] = chain.state.loc
            keep_loglam[r] = chain.state.log_lam
            keep_mu[r] = chain.state.mu_eta
        se = np.sqrt(3.0 / reps)
        assert abs(keep_beta.mean()) < 3.5 * se / np.sqrt(i)
        assert keep_beta.var() == pytest.approx(3.0, rel=0.2)
        assert keep_loglam.var() == pytest.approx(0.5, rel=0.2)
        assert abs(keep_mu.mean()) < 3.5 * se
        assert keep_mu.var() == pytest.approx(3.0, rel=0.25)


class TestCenteredPairProposal:
    def test_zero_step_is_identity(self):
        from dpirt.samplers import centered_pair_proposal

        u, g = centered_pair_proposal(np.log([1.3, 0.7]), np.array([0.4, -0.2]), 1.1, 0.0)
        np.testing.assert_allclose(np.exp(u), [1.3, 0.7])
        np.testing.assert_allclose(g, [0.4, -0.2])

    def test_centered_abilities_leave_intercept_alone(self, rng):
        from dpirt.samplers import centered_pair_proposal

        gamma = rng.normal(size=4)
        _, gamma_new = centered_pair_proposal(
            rng.normal(size=4), gamma, 0.0, rng.normal(size=4)
        )
        np.testing.assert_array_equal(gamma_new, gamma)

    def test_logit_surface_fixed_at_ability_mean(self, rng):
        from dpirt.samplers import centered_pair_proposal

        for _ in range(50):
            log_lam = rng.normal(size=3)
            gamma = rng.normal(size=3)
            eta_bar = rng.normal()
            u_new, g_new = centered_pair_proposal(log_lam, gamma, eta_bar, rng.normal(size=3))
            before = np.exp(log_lam) * eta_bar + gamma
            after = np.exp(u_new) * eta_bar + g_new
            np.testing.assert_allclose(after, before, rtol=1e-12, atol=1e-12)
