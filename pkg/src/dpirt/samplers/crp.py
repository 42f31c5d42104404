"""Collapsed Chinese-restaurant-process updates for the DP mixture of normals.

Cluster labels are resampled from their exact full conditional: occupied
clusters are weighted by count times the normal kernel, a new cluster by
concentration times the marginal kernel density under the base measure.
That marginal has no closed form for an independent Normal x InvGamma base
measure, so it is evaluated by fixed-node quadrature; fresh atoms are drawn
exactly by rejection. Atoms are stored densely and labels remapped on
deletion, so the atom arrays never grow beyond the number of occupied
clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ValidationError
from ..priors import NormalInverseGamma
from .conjugate import conjugate_normal_invgamma_update

_LOG_2PI = math.log(2.0 * math.pi)
_REJECTION_CAP = 100_000


class BaseMeasureMarginal:
    """Quadrature evaluation of the kernel marginal under G0.

    m(eta) = Int N(eta; m0, s2_0 + v) InvGamma(v; shape, scale) dv, computed
    with Gauss-Legendre nodes in log-variance space. Nodes and weights are
    fixed per base measure, so evaluation is a single weighted sum.
    """

    def __init__(self, g0: NormalInverseGamma, n_nodes: int = 256,
                 var_lo: float = 1e-10, var_hi: float = 1e12):
        self.g0 = g0
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        lo, hi = math.log(var_lo * g0.scale), math.log(var_hi * g0.scale)
        u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        v = np.exp(u)
        log_ig = (
            g0.shape * math.log(g0.scale)
            - math.lgamma(g0.shape)
            - (g0.shape + 1.0) * u
            - g0.scale / v
        )
        # extra factor v from dv = v du
        self.total_var = g0.mean_var + v
        self.weights = w * 0.5 * (hi - lo) * np.exp(log_ig + u)

    def pdf(self, eta) -> np.ndarray | float:
        eta = np.asarray(eta, dtype=float)
        d2 = (eta[..., None] - self.g0.mean_loc) ** 2
        kernels = np.exp(-0.5 * d2 / self.total_var) / np.sqrt(2.0 * np.pi * self.total_var)
        out = kernels @ self.weights
        return float(out) if out.ndim == 0 else out

    def logpdf(self, eta):
        return np.log(self.pdf(eta))


@lru_cache(maxsize=8)
def marginal_for(g0: NormalInverseGamma) -> BaseMeasureMarginal:
    return BaseMeasureMarginal(g0)


@dataclass
class CRPState:
    """Cluster labels, occupied-cluster atoms, occupancy counts, concentration."""

    labels: np.ndarray
    counts: list[int]
    means: list[float]
    variances: list[float]
    alpha: float

    @classmethod
    def single_cluster(cls, n: int, alpha: float, mean: float = 0.0, variance: float = 1.0):
        return cls(
            labels=np.zeros(n, dtype=np.int64),
            counts=[n],
            means=[mean],
            variances=[variance],
            alpha=alpha,
        )

    @property
    def n_clusters(self) -> int:
        return len(self.counts)

    @property
    def n_individuals(self) -> int:
        return self.labels.shape[0]

    def validate(self) -> None:
        counts = np.bincount(self.labels, minlength=self.n_clusters)
        if len(counts) != self.n_clusters or not (counts == np.asarray(self.counts)).all():
            raise ValidationError("cluster occupancy counts are inconsistent with the labels")
        if min(self.counts) < 1:
            raise ValidationError("every occupied cluster needs at least one member")
        if len(self.means) != self.n_clusters or len(self.variances) != self.n_clusters:
            raise ValidationError("atom storage out of sync with cluster count")
        if min(self.variances) <= 0:
            raise ValidationError("cluster variances must be positive")
        if self.alpha <= 0:
            raise ValidationError("concentration must be positive")


def _remove_from_cluster(state: CRPState, j: int) -> None:
    k = int(state.labels[j])
    state.counts[k] -= 1
    if state.counts[k] < 0:
        raise ValidationError("corrupted occupancy counts")
    if state.counts[k] == 0:
        last = state.n_clusters - 1
        if k != last:
            state.counts[k] = state.counts[last]
            state.means[k] = state.means[last]
            state.variances[k] = state.variances[last]
            state.labels[state.labels == last] = k
        state.counts.pop()
        state.means.pop()
        state.variances.pop()
    state.labels[j] = -1


def sample_new_atom(eta_j: float, g0: NormalInverseGamma, rng) -> tuple[float, float]:
    """Draw an atom from p(mu, v | eta_j) under G0 by exact rejection.

    v is proposed from its InvGamma prior and accepted against the envelope
    max_v N(eta; m0, s2_0 + v), attained at total variance max(d^2, s2_0);
    mu then has a closed-form normal full conditional.
    """
    d2 = (eta_j - g0.mean_loc) ** 2
    t_opt = max(d2, g0.mean_var)
    log_envelope = -0.5 * (_LOG_2PI + math.log(t_opt) + d2 / t_opt)
    for _ in range(_REJECTION_CAP):
        v = g0.scale / rng.gamma(g0.shape, 1.0)
        t = g0.mean_var + v
        log_f = -0.5 * (_LOG_2PI + math.log(t) + d2 / t)
        if math.log(rng.random()) < log_f - log_envelope:
            break
    else:
        raise RuntimeError("rejection sampler for the new-cluster variance did not accept")
    post_var = 1.0 / (1.0 / g0.mean_var + 1.0 / v)
    post_mean = post_var * (g0.mean_loc / g0.mean_var + eta_j / v)
    mu = rng.normal(post_mean, math.sqrt(post_var))
    return float(mu), float(v)


def crp_assignment_update(
    j: int,
    state: CRPState,
    eta_j: float,
    base_measure: NormalInverseGamma,
    rng,
    marginal_value: float | None = None,
) -> CRPState:
    """Resample individual j's cluster label from its full conditional.

    Removes j (deleting its cluster if emptied), then reassigns with weight
    count * N(eta_j; atom) for each occupied cluster and
    alpha * m(eta_j) for a new one. Mutates and returns ``state``.

    ``marginal_value`` short-circuits the quadrature when m(eta_j) was
    precomputed for a whole sweep.
    """
    if not math.isfinite(eta_j):
        raise ValidationError("ability must be finite for a CRP update")
    _remove_from_cluster(state, j)
    if marginal_value is None:
        marginal_value = marginal_for(base_measure).pdf(eta_j)
    counts, means, variances = state.counts, state.means, state.variances
    logw = [
        math.log(counts[k])
        - 0.5 * (_LOG_2PI + math.log(variances[k]) + (eta_j - means[k]) ** 2 / variances[k])
        for k in range(len(counts))
    ]
    logw.append(math.log(state.alpha) + math.log(marginal_value))
    top = max(logw)
    weights = [math.exp(lw - top) for lw in logw]
    u = rng.random() * math.fsum(weights)
    acc = 0.0
    choice = len(weights) - 1
    for k, wk in enumerate(weights):
        acc += wk
        if u < acc:
            choice = k
            break
    if choice == len(counts):
        mu, var = sample_new_atom(eta_j, base_measure, rng)
        counts.append(1)
        means.append(mu)
        variances.append(var)
    else:
        counts[choice] += 1
    state.labels[j] = choice
    return state


def crp_label_sweep(state: CRPState, abilities, base_measure, rng) -> CRPState:
    """One full pass of label updates; marginals precomputed for the sweep."""
    marginal_values = marginal_for(base_measure).pdf(abilities)
    for j in range(state.n_individuals):
        crp_assignment_update(
            j, state, float(abilities[j]), base_measure, rng,
            marginal_value=float(marginal_values[j]),
        )
    return state


def update_cluster_atoms(state: CRPState, abilities, base_measure, rng) -> None:
    """Conjugate refresh of every occupied cluster's (mean, variance) atom."""
    eta = np.asarray(abilities, dtype=float)
    for k in range(state.n_clusters):
        members = eta[state.labels == k]
        mu, var = conjugate_normal_invgamma_update(
            members, base_measure, state.variances[k], rng
        )
        state.means[k] = mu
        state.variances[k] = var


def escobar_west_alpha_update(
    alpha: float, n_clusters: int, n: int, gamma_prior: tuple[float, float], rng
) -> float:
    """Auxiliary-variable Gibbs update of the DP concentration.

    Draws the auxiliary Beta(alpha + 1, n) variable, then alpha from the
    implied two-component Gamma mixture.
    """
    shape, rate = gamma_prior
    if shape <= 0 or rate <= 0:
        raise ValidationError("Gamma prior parameters must be positive")
    if not 1 <= n_clusters <= n:
        raise ValidationError("cluster count must lie in [1, n]")
    aux = rng.beta(alpha + 1.0, n)
    post_rate = rate - math.log(aux)
    odds = (shape + n_clusters - 1.0) / (n * post_rate)
    post_shape = shape + n_clusters
    if rng.random() >= odds / (1.0 + odds):
        post_shape -= 1.0
    return float(rng.gamma(post_shape, 1.0 / post_rate))
