"""Inferential outputs from post-processed archives: latent-density
estimates, DP measure samples, percentiles, WAIC, and error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, ndtr

from .archive import SampleArchive
from .errors import ValidationError
from .model import (
    ItemParametersIRT,
    ModelKind,
    ResponseMatrix,
    cell_log_likelihood_irt,
)
from .priors import NormalInverseGamma

DEFAULT_GRID_POINTS = 512
DEFAULT_TRUNCATION = 1e-3


@dataclass(frozen=True)
class DensityEstimate:
    """Pointwise posterior mean density with 95% credible bands."""

    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if not (np.diff(self.grid) > 0).all():
            raise ValidationError("density grid must be strictly increasing")
        if (self.mean < 0).any() or (self.lower < 0).any():
            raise ValidationError("densities must be nonnegative")

    def integral(self) -> float:
        return float(np.trapezoid(self.mean, self.grid))


@dataclass(frozen=True)
class MeasureSample:
    """One truncated draw of the DP mixing measure."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        if (self.weights < 0).any():
            raise ValidationError("stick weights must be nonnegative")
        if not self.weights.sum() <= 1.0 + 1e-12:
            raise ValidationError("stick weights must sum to at most one")
        if (self.variances <= 0).any():
            raise ValidationError("atom variances must be positive")

    @property
    def truncation_level(self) -> int:
        return self.weights.shape[0]


def default_grid(archive: SampleArchive, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Equally spaced grid spanning the posterior-mean abilities plus margin."""
    _, eta = archive.block("eta")
    means = eta.mean(axis=0)
    return np.linspace(means.min() - 2.0, means.max() + 2.0, points)


def _normal_pdf_grid(grid, mean, var):
    return np.exp(-0.5 * (grid - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def _bands(curves):
    return (
        curves.mean(axis=0),
        np.quantile(curves, 0.025, axis=0),
        np.quantile(curves, 0.975, axis=0),
    )


def parametric_density_estimate(mu_draws, var_draws, grid) -> DensityEstimate:
    """Average of normal pdfs over posterior draws of (mu, sigma^2)."""
    mu = np.asarray(mu_draws, dtype=float)
    var = np.asarray(var_draws, dtype=float)
    if mu.size == 0:
        raise ValidationError("no posterior draws supplied")
    if (var <= 0).any():
        raise ValidationError("variance draws must be positive")
    grid = np.asarray(grid, dtype=float)
    curves = _normal_pdf_grid(grid[None, :], mu[:, None], var[:, None])
    mean, lower, upper = _bands(curves)
    return DensityEstimate(grid=grid, mean=mean, lower=lower, upper=upper)


def crp_predictive_density_curves(archive: SampleArchive, grid) -> np.ndarray:
    """Per-draw conditional predictive densities of the DP mixture.

    Each draw contributes sum_k n_k/(alpha+N) N(eta; atom_k) plus
    alpha/(alpha+N) under the fresh base-measure atom recorded with the
    draw.
    """
    if not archive.is_semiparametric:
        raise ValidationError("archive has no CRP draws")
    grid = np.asarray(grid, dtype=float)
    n = archive.meta["n_individuals"]
    alphas = archive.column("alpha")
    new_mu = archive.column("new_cluster_mean")
    new_var = archive.column("new_cluster_var")
    curves = np.empty((archive.n_draws, grid.shape[0]))
    clusters = archive.clusters
    draw_idx = clusters[:, 0].astype(int)
    order = np.argsort(draw_idx, kind="stable")
    sorted_rows = clusters[order]
    bounds = np.searchsorted(sorted_rows[:, 0], np.arange(archive.n_draws + 1))
    for t in range(archive.n_draws):
        rows = sorted_rows[bounds[t] : bounds[t + 1]]
        if rows.shape[0] == 0:
            raise ValidationError(f"no cluster atoms recorded for draw {t}")
        counts = rows[:, 2]
        if counts.sum() != n:
            raise ValidationError("cluster occupancy does not add up to N")
        total = alphas[t] + n
        curve = (counts[:, None] / total * _normal_pdf_grid(grid[None, :], rows[:, 3][:, None], rows[:, 4][:, None])).sum(axis=0)
        curve += alphas[t] / total * _normal_pdf_grid(grid, new_mu[t], new_var[t])
        curves[t] = curve
    return curves


def crp_predictive_density_estimate(archive: SampleArchive, grid) -> DensityEstimate:
    curves = crp_predictive_density_curves(archive, grid)
    mean, lower, upper = _bands(curves)
    return DensityEstimate(grid=np.asarray(grid, dtype=float), mean=mean, lower=lower, upper=upper)


def density_estimate(archive: SampleArchive, grid=None) -> DensityEstimate:
    """Dispatch to the parametric or DP-predictive density estimator."""
    if grid is None:
        grid = default_grid(archive)
    if archive.is_semiparametric:
        return crp_predictive_density_estimate(archive, grid)
    return parametric_density_estimate(
        archive.column("mu_eta"), archive.column("sigma2_eta"), grid
    )


def posterior_mean_ability_kde(archive: SampleArchive, grid) -> np.ndarray:
    """Kernel density of posterior-mean abilities; comparison curve only
    (it ignores the uncertainty the pointwise estimators carry)."""
    from scipy.stats import gaussian_kde

    _, eta = archive.block("eta")
    return gaussian_kde(eta.mean(axis=0))(np.asarray(grid, dtype=float))


def sample_dp_measure(
    counts,
    means,
    variances,
    alpha: float,
    base_measure: NormalInverseGamma,
    rng,
    truncation_mass: float = DEFAULT_TRUNCATION,
    transform=None,
) -> MeasureSample:
    """Stick-breaking draw of the DP posterior given one clustering draw.

    Conditional on the partition and atoms, the mixing measure is a DP with
    total mass alpha + N around the weighted empirical/base mixture; sticks
    are broken until the leftover mass drops below ``truncation_mass``, so
    the truncation level varies draw to draw.
    """
    if not 0.0 < truncation_mass < 1.0:
        raise ValidationError("truncation mass must lie in (0, 1)")
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    total = alpha + n
    log_remaining = 0.0
    raw = []
    while log_remaining > math.log(truncation_mass):
        v = rng.beta(1.0, total)
        raw.append(math.exp(log_remaining) * v)
        log_remaining += math.log1p(-v)
    weights = np.asarray(raw)
    k = weights.shape[0]
    probs = np.concatenate((counts, [alpha])) / total
    picks = rng.choice(probs.shape[0], size=k, p=probs)
    mu = np.empty(k)
    var = np.empty(k)
    fresh = picks == counts.shape[0]
    n_fresh = int(fresh.sum())
    if n_fresh:
        mu_f, var_f = base_measure.sample(rng, size=n_fresh)
        if transform is not None:
            # fresh atoms are drawn on the sampling scale, then mapped by
            # the draw's identifiability record like the occupied atoms were
            mu_f = (mu_f - transform.shift) / transform.scale
            var_f = var_f / transform.scale**2
        mu[fresh], var[fresh] = mu_f, var_f
    occupied = ~fresh
    mu[occupied] = np.asarray(means, dtype=float)[picks[occupied]]
    var[occupied] = np.asarray(variances, dtype=float)[picks[occupied]]
    return MeasureSample(weights=weights, means=mu, variances=var)


def sample_dp_measure_from_state(
    state,
    base_measure: NormalInverseGamma,
    rng,
    truncation_mass: float = DEFAULT_TRUNCATION,
) -> MeasureSample:
    """Measure draw from a live CRP state (counts/atoms/concentration)."""
    return sample_dp_measure(
        state.counts, state.means, state.variances, state.alpha, base_measure, rng, truncation_mass
    )


def measure_samples_from_archive(
    archive: SampleArchive,
    rng,
    truncation_mass: float = DEFAULT_TRUNCATION,
    draw_indices=None,
) -> tuple[np.ndarray, list[MeasureSample]]:
    """DP measure draws for the selected archive draws (defaults to all)."""
    if not archive.is_semiparametric:
        raise ValidationError("archive has no CRP draws")
    g0 = _base_measure_from_meta(archive)
    alphas = archive.column("alpha")
    if draw_indices is None:
        draw_indices = np.arange(archive.n_draws)
    records = None
    if archive.meta.get("parameterization") == "base":
        from .identify import TransformRecord

        scale_col = archive.column("transform_scale")
        shift_col = archive.column("transform_shift")
        records = [
            TransformRecord(scale=float(s), shift=float(b))
            for s, b in zip(scale_col, shift_col)
        ]
    samples = []
    for t in draw_indices:
        rows = archive.clusters_for_draw(int(t))
        samples.append(
            sample_dp_measure(
                rows[:, 2],
                rows[:, 3],
                rows[:, 4],
                float(alphas[t]),
                g0,
                rng,
                truncation_mass,
                transform=None if records is None else records[int(t)],
            )
        )
    return np.asarray(draw_indices), samples


def _base_measure_from_meta(archive: SampleArchive) -> NormalInverseGamma:
    try:
        loc, var, shape, scale = archive.meta["priors"]["ability"]["base_measure"]
    except (KeyError, TypeError) as exc:
        raise ValidationError("archive meta lacks the base-measure parameters") from exc
    return NormalInverseGamma(mean_loc=loc, mean_var=var, shape=shape, scale=scale)


@dataclass(frozen=True)
class PercentileEstimate:
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def percentile_estimates(eta_draws, measures=None, mu_draws=None, var_draws=None) -> PercentileEstimate:
    """Posterior percentiles of each individual within the latent distribution.

    Semiparametric: p_j^(t) = sum_l w_l Phi((eta_j - mu_l)/sigma_l) under the
    measure draw; parametric: Phi((eta_j - mu)/sigma). Summaries are the
    posterior mean and a central 95% interval across draws.
    """
    eta = np.asarray(eta_draws, dtype=float)
    if measures is not None:
        if len(measures) != eta.shape[0]:
            raise ValidationError("measure draws and ability draws are misaligned")
        p = np.empty_like(eta)
        for t, m in enumerate(measures):
            z = (eta[t][:, None] - m.means[None, :]) / np.sqrt(m.variances)[None, :]
            p[t] = ndtr(z) @ m.weights
    else:
        mu = np.asarray(mu_draws, dtype=float)[:, None]
        sd = np.sqrt(np.asarray(var_draws, dtype=float))[:, None]
        if mu.shape[0] != eta.shape[0]:
            raise ValidationError("parameter draws and ability draws are misaligned")
        p = ndtr((eta - mu) / sd)
    return PercentileEstimate(
        mean=p.mean(axis=0),
        lower=np.quantile(p, 0.025, axis=0),
        upper=np.quantile(p, 0.975, axis=0),
    )


@dataclass(frozen=True)
class WaicResult:
    waic: float
    lppd: float
    p_waic: float


def waic(pointwise_draws) -> WaicResult:
    """WAIC from a draws x observations matrix of log-likelihood terms.

    lppd sums log mean exp over draws (max-shifted); the effective number
    of parameters sums the per-observation variances across draws.
    """
    ll = np.asarray(pointwise_draws, dtype=float)
    if ll.ndim != 2 or ll.shape[0] < 2:
        raise ValidationError("need a draws x observations matrix with at least two draws")
    if not np.isfinite(ll).all():
        raise ValidationError("log-likelihood draws must be finite")
    lppd = float((logsumexp(ll, axis=0) - math.log(ll.shape[0])).sum())
    p_waic = float(ll.var(axis=0, ddof=1).sum())
    return WaicResult(waic=-2.0 * (lppd - p_waic), lppd=lppd, p_waic=p_waic)


def waic_from_archive(
    archive: SampleArchive, data: ResponseMatrix, chunk_size: int = 256
) -> WaicResult:
    """Streaming WAIC over an archive without materializing all draws.

    Two passes over the draws: the first finds per-cell maxima for a
    stable log-mean-exp, the second accumulates the shifted exponentials
    and the variance terms.
    """
    if archive.n_draws < 2:
        raise ValidationError("need at least two draws")
    lam_names, lam = archive.block("lambda")
    _, beta = archive.block("beta")
    if beta.shape[1] == 0:
        raise ValidationError("WAIC needs difficulty columns; post-process SI archives first")
    ups_names, ups = archive.block("upsilon")
    _, eta = archive.block("eta")
    kind = ModelKind(archive.meta["strategy"]["kind"])
    obs = data.observed

    def chunk_terms(sl):
        out = []
        for t in range(sl.start, sl.stop):
            items = ItemParametersIRT(
                discrimination=lam[t],
                difficulty=beta[t],
                guessing=ups[t] if ups_names else None,
            )
            logits = items.discrimination[None, :] * (eta[t][:, None] - items.difficulty[None, :])
            terms = cell_log_likelihood_irt(logits, data.values, items.guessing)
            out.append(terms[obs])
        return np.asarray(out)

    n_draws = archive.n_draws
    n_obs = int(obs.sum())
    best = np.full(n_obs, -np.inf)
    for start in range(0, n_draws, chunk_size):
        block = chunk_terms(slice(start, min(start + chunk_size, n_draws)))
        best = np.maximum(best, block.max(axis=0))
    sum_exp = np.zeros(n_obs)
    total = np.zeros(n_obs)
    total_sq = np.zeros(n_obs)
    for start in range(0, n_draws, chunk_size):
        block = chunk_terms(slice(start, min(start + chunk_size, n_draws)))
        sum_exp += np.exp(block - best[None, :]).sum(axis=0)
        total += block.sum(axis=0)
        total_sq += (block**2).sum(axis=0)
    lppd = float((best + np.log(sum_exp) - math.log(n_draws)).sum())
    var = (total_sq - total**2 / n_draws) / (n_draws - 1)
    p_waic = float(var.sum())
    return WaicResult(waic=-2.0 * (lppd - p_waic), lppd=lppd, p_waic=p_waic)


def error_metrics(estimates, truth) -> tuple[float, float]:
    """(MAE, MSE) of point estimates against the known truth."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ValidationError("estimate and truth vectors must have the same length")
    delta = est - tru
    return float(np.abs(delta).mean()), float((delta**2).mean())
