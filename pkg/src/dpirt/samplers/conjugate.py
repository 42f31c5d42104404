"""Exact Gibbs draws for a normal mean/variance with independent
Normal and InvGamma priors (one-at-a-time full conditionals)."""

from __future__ import annotations

import numpy as np

from ..priors import NormalInverseGamma


def conjugate_normal_invgamma_update(
    observations, prior: NormalInverseGamma, sigma2: float, rng
) -> tuple[float, float]:
    """Draw (mu, sigma2) from their full conditionals given normal data.

    mu | sigma2, data is normal; sigma2 | mu, data is inverse-gamma.
    ``sigma2`` is the current variance entering the mu update. With no
    observations both draws come from the prior.
    """
    x = np.asarray(observations, dtype=float)
    n = x.shape[0]
    prec = 1.0 / prior.mean_var + n / sigma2
    mean = (prior.mean_loc / prior.mean_var + (x.sum() / sigma2 if n else 0.0)) / prec
    mu_new = rng.normal(mean, np.sqrt(1.0 / prec))
    shape = prior.shape + 0.5 * n
    scale = prior.scale + 0.5 * float(((x - mu_new) ** 2).sum()) if n else prior.scale
    sigma2_new = scale / rng.gamma(shape, 1.0)
    return float(mu_new), float(sigma2_new)
