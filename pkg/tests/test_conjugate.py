"""Conjugate normal/inverse-gamma Gibbs updates against closed forms."""

import numpy as np
import pytest
from scipy import integrate

from dpirt import NormalInverseGamma
from dpirt.samplers import conjugate_normal_invgamma_update

PRIOR = NormalInverseGamma(mean_loc=0.0, mean_var=3.0, shape=2.01, scale=1.01)


def test_no_observations_returns_prior_draws(rng):
    draws = np.array(
        [
            conjugate_normal_invgamma_update(np.empty(0), PRIOR, sigma2=1.0, rng=rng)
            for _ in range(60_000)
        ]
    )
    mus, sigmas = draws[:, 0], draws[:, 1]
    se = np.sqrt(PRIOR.mean_var / len(mus))
    assert mus.mean() == pytest.approx(PRIOR.mean_loc, abs=3 * se)
    assert mus.var() == pytest.approx(PRIOR.mean_var, rel=0.05)
    assert sigmas.mean() == pytest.approx(PRIOR.scale / (PRIOR.shape - 1.0), rel=0.1)


def test_mu_full_conditional_matches_closed_form(rng):
    x = np.array([0.4, -1.2, 2.2, 0.9, 1.4])
    sigma2 = 0.7
    prec = 1.0 / PRIOR.mean_var + len(x) / sigma2
    expected_mean = (x.sum() / sigma2) / prec
    expected_var = 1.0 / prec
    draws = np.array(
        [
            conjugate_normal_invgamma_update(x, PRIOR, sigma2=sigma2, rng=rng)[0]
            for _ in range(100_000)
        ]
    )
    se_mean = np.sqrt(expected_var / len(draws))
    assert draws.mean() == pytest.approx(expected_mean, abs=3 * se_mean)
    se_var = expected_var * np.sqrt(2.0 / (len(draws) - 1))
    assert draws.var() == pytest.approx(expected_var, abs=4 * se_var)


def test_gibbs_chain_matches_quadrature_posterior(rng):
    """Iterated updates target the joint posterior; verified by 2-d quadrature."""
    x = np.array([1.8, 0.3, 1.1, 2.4, 0.7, 1.5, 1.9, 0.2])
    n = len(x)

    def unnorm(mu, s2):
        lik = (2 * np.pi * s2) ** (-n / 2) * np.exp(-0.5 * ((x - mu) ** 2).sum() / s2)
        prior_mu = np.exp(-0.5 * mu**2 / PRIOR.mean_var)
        prior_s2 = s2 ** (-PRIOR.shape - 1) * np.exp(-PRIOR.scale / s2)
        return lik * prior_mu * prior_s2

    z, _ = integrate.dblquad(unnorm, 0.01, 60, -6, 8)
    mu_post, _ = integrate.dblquad(lambda m, s: m * unnorm(m, s) / z, 0.01, 60, -6, 8)
    s2_post, _ = integrate.dblquad(lambda m, s: s * unnorm(m, s) / z, 0.01, 60, -6, 8)

    mu, s2 = 0.0, 1.0
    n_sweeps = 100_000
    keep = np.empty((n_sweeps, 2))
    for t in range(n_sweeps):
        mu, s2 = conjugate_normal_invgamma_update(x, PRIOR, sigma2=s2, rng=rng)
        keep[t] = mu, s2
    # batch-means standard errors absorb the autocorrelation
    batches = keep[: 316 * 316].reshape(316, 316, 2).mean(axis=1)
    se = batches.std(axis=0, ddof=1) / np.sqrt(316)
    assert keep[:, 0].mean() == pytest.approx(mu_post, abs=4 * se[0])
    assert keep[:, 1].mean() == pytest.approx(s2_post, abs=4 * se[1])


def test_posterior_concentrates_on_constant_data(rng):
    c = 2.5
    x = np.full(4000, c)
    mus = np.array(
        [conjugate_normal_invgamma_update(x, PRIOR, sigma2=0.5, rng=rng)[0] for _ in range(200)]
    )
    assert np.abs(mus - c).max() < 0.2
