"""Identifiability machinery: in-model sum-to-zero reparameterization and
post-hoc rescaling of unconstrained draws to the base parameterization.

The base parameterization is the IRT form with sum(log lambda) = 0 and
sum(beta) = 0. Post-processing applies, per draw, the unique scale/shift
that moves a draw onto that manifold while leaving every logit (and hence
the likelihood) unchanged. The per-draw transform is recorded so latent
densities sampled on the working scale can be mapped across later.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import SampleArchive
from .errors import ValidationError
from .model import Parameterization


@dataclass(frozen=True)
class TransformRecord:
    """Per-draw rescaling: lambda* = s lambda, eta* = (eta - shift)/s."""

    scale: float
    shift: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValidationError("transform scale must be positive")


def apply_item_constraints(discrimination, location):
    """Map auxiliary item parameters onto the sum-to-zero manifold.

    log lambda and the location (difficulty or intercept) are centered at
    their means; outputs satisfy the zero-sum constraints exactly.
    """
    lam = np.asarray(discrimination, dtype=float)
    if not (lam > 0).all():
        raise ValidationError("discriminations must be positive")
    log_lam = np.log(lam)
    loc = np.asarray(location, dtype=float)
    return np.exp(log_lam - log_lam.mean()), loc - loc.mean()


def transform_irt_draw(lam, beta, eta, record: TransformRecord):
    """Apply a scale/shift record to an IRT-form draw (logits invariant)."""
    s, b = record.scale, record.shift
    return s * lam, (beta - b) / s, (eta - b) / s


def postprocess_irt(lam, beta, eta):
    """Rescale one IRT-parameterized draw onto the base parameterization.

    s = exp{-mean(log lambda)} and b = mean(beta) solve the constraint
    system: lambda* = s lambda has log-sum zero and beta* = (beta - b)/s
    sums to zero, with abilities shifted the same way.
    """
    lam = np.asarray(lam, dtype=float)
    beta = np.asarray(beta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not (lam > 0).all():
        raise ValidationError("discriminations must be positive")
    record = TransformRecord(scale=float(np.exp(-np.log(lam).mean())), shift=float(beta.mean()))
    lam_c, beta_c, eta_c = transform_irt_draw(lam, beta, eta, record)
    return lam_c, beta_c, eta_c, record


def postprocess_si(lam, gamma, eta):
    """Rescale one slope-intercept draw onto the (IRT-form) base parameterization.

    First center the SI draw (scale s from the log slopes, shift
    c = sum(gamma)/sum(lambda)), then convert the centered intercepts to
    difficulties and center those; the composition is a single scale/shift
    on the abilities, returned as the record.
    """
    lam = np.asarray(lam, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not (lam > 0).all():
        raise ValidationError("slopes must be positive")
    s = float(np.exp(-np.log(lam).mean()))
    c = float(gamma.sum() / lam.sum())
    lam_t = s * lam
    gamma_t = gamma - lam * c
    beta_t = -gamma_t / lam_t
    b_t = float(beta_t.mean())
    record = TransformRecord(scale=s, shift=s * b_t - c)
    lam_c = lam_t
    beta_c = beta_t - b_t
    eta_c = (eta + c) / s - b_t
    return lam_c, beta_c, eta_c, record


def rescale_density(grid, density, record: TransformRecord):
    """Change of variables for a latent density estimated on the working scale.

    Returns the transformed grid (eta - shift)/scale and the density values
    multiplied by the Jacobian ``scale``; total mass is conserved exactly.
    """
    density = np.asarray(density, dtype=float)
    if (density < 0).any():
        raise ValidationError("density values must be nonnegative")
    grid = np.asarray(grid, dtype=float)
    return (grid - record.shift) / record.scale, density * record.scale


def _transform_atoms(means, variances, record: TransformRecord):
    s, b = record.scale, record.shift
    return (np.asarray(means) - b) / s, np.asarray(variances) / s**2


def postprocess_archive(archive: SampleArchive) -> SampleArchive:
    """Map every draw of an archive onto the base parameterization.

    Output columns follow the IRT naming (lambda/beta/eta), with the
    per-draw TransformRecord appended as transform_scale / transform_shift.
    Parametric ability-model draws and DP cluster atoms (including the
    fresh atom) are shifted and rescaled the same way so density estimation
    composes with the record.
    """
    parameterization = Parameterization(archive.meta["parameterization"])
    lam_names, lam = archive.block("lambda")
    loc_prefix = "beta" if parameterization is Parameterization.IRT else "gamma"
    _, loc = archive.block(loc_prefix)
    eta_names, eta = archive.block("eta")
    if not lam_names or not eta_names:
        raise ValidationError("archive lacks item or ability columns")
    n_draws, n_items = lam.shape

    lam_out = np.empty_like(lam)
    beta_out = np.empty_like(loc)
    eta_out = np.empty_like(eta)
    scale = np.empty(n_draws)
    shift = np.empty(n_draws)
    post = postprocess_irt if parameterization is Parameterization.IRT else postprocess_si
    for t in range(n_draws):
        lam_out[t], beta_out[t], eta_out[t], record = post(lam[t], loc[t], eta[t])
        scale[t], shift[t] = record.scale, record.shift

    columns = lam_names + [f"beta_{i + 1}" for i in range(n_items)]
    parts = [lam_out, beta_out]
    ups_names, ups = archive.block("upsilon")
    if ups_names:
        columns += ups_names
        parts.append(ups)  # guessing is scale/shift invariant
    columns += eta_names
    parts.append(eta_out)

    clusters = None
    if archive.is_semiparametric:
        for name in ("alpha", "n_clusters"):
            columns.append(name)
            parts.append(archive.column(name)[:, None])
        new_mu, new_var = archive.column("new_cluster_mean"), archive.column("new_cluster_var")
        new_mu = (new_mu - shift) / scale
        new_var = new_var / scale**2
        columns += ["new_cluster_mean", "new_cluster_var"]
        parts += [new_mu[:, None], new_var[:, None]]
        clusters = archive.clusters.copy()
        t_idx = clusters[:, 0].astype(int)
        clusters[:, 3] = (clusters[:, 3] - shift[t_idx]) / scale[t_idx]
        clusters[:, 4] = clusters[:, 4] / scale[t_idx] ** 2
    else:
        mu = (archive.column("mu_eta") - shift) / scale
        var = archive.column("sigma2_eta") / scale**2
        columns += ["mu_eta", "sigma2_eta"]
        parts += [mu[:, None], var[:, None]]

    columns += ["transform_scale", "transform_shift"]
    parts += [scale[:, None], shift[:, None]]

    meta = dict(archive.meta)
    meta["parameterization"] = "base"
    meta["source_parameterization"] = archive.meta["parameterization"]
    return SampleArchive(
        columns=columns,
        draws=np.hstack(parts),
        meta=meta,
        labels=None if archive.labels is None else archive.labels.copy(),
        clusters=clusters,
    )
