"""Single-chain MCMC driver assembling the strategy matrix kernels.

Sweep order within an iteration: abilities -> item parameters -> ability
model state (for the CRP block: labels -> atoms -> concentration).
Conditionally independent scalar blocks are updated as simultaneous
vectorized adaptive-MH sweeps, which is the same kernel law as cycling
through them one at a time. Adaptation stops at the end of burn-in so the
sampling phase is a fixed kernel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..archive import SampleArchive
from ..errors import ValidationError
from ..model import ModelKind, Parameterization, ResponseMatrix, cell_log_likelihood_irt
from ..priors import Priors
from ..rng import substream
from .adaptive import AcceptanceTracker, AdaptiveMHState
from .conjugate import conjugate_normal_invgamma_update
from .crp import CRPState, crp_label_sweep, escobar_west_alpha_update, update_cluster_atoms
from .strategy import AbilityModel, Algorithm, ConstraintMode, StrategyConfig


@dataclass
class ChainState:
    """All latent quantities of one chain; item parameters live on the
    sampling scale (log discrimination, location, logit guessing)."""

    log_lam: np.ndarray
    loc: np.ndarray
    eta: np.ndarray
    logit_ups: np.ndarray | None = None
    mu_eta: float = 0.0
    sigma2_eta: float = 1.0
    crp: CRPState | None = None
    iteration: int = 0


class _Likelihood:
    """Cached response arrays plus sum helpers for one dataset."""

    def __init__(self, data: ResponseMatrix, kind: ModelKind, parameterization: Parameterization):
        self.y = data.values.astype(float)
        self.obs = data.observed.astype(float)
        self.kind = kind
        self.parameterization = parameterization

    def cell_terms(self, log_lam, loc, logit_ups, eta):
        lam = np.exp(log_lam)
        if self.parameterization is Parameterization.IRT:
            logits = lam[None, :] * (eta[:, None] - loc[None, :])
        else:
            logits = eta[:, None] * lam[None, :] + loc[None, :]
        guessing = expit(logit_ups)[None, :] if logit_ups is not None else None
        return cell_log_likelihood_irt(logits, self.y, guessing) * self.obs

    def by_individual(self, *params):
        return self.cell_terms(*params).sum(axis=1)

    def by_item(self, *params):
        return self.cell_terms(*params).sum(axis=0)

    def total(self, *params):
        return float(self.cell_terms(*params).sum())


def _normal_logpdf(x, mean, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def _init_abilities(data: ResponseMatrix) -> np.ndarray:
    # add-half smoothed raw-score logits keep all-0/all-1 respondents finite
    correct = (data.values * data.observed).sum(axis=1)
    answered = data.observed.sum(axis=1)
    p = (correct + 0.5) / (answered + 1.0)
    eta = np.log(p / (1.0 - p))
    sd = eta.std()
    return (eta - eta.mean()) / (sd if sd > 0 else 1.0)


@dataclass
class _Samplers:
    eta: AdaptiveMHState
    log_lam: AdaptiveMHState
    loc: AdaptiveMHState
    ups: AdaptiveMHState | None
    pair: AdaptiveMHState | None

    def freeze(self):
        for state in (self.eta, self.log_lam, self.loc, self.ups, self.pair):
            if state is not None:
                state.freeze()


def _vector_mh(current, cond_fn, state, tracker, rng):
    """Simultaneous RW-MH over a block with per-coordinate conditionals."""
    ld_cur = cond_fn(current)
    proposal = current + state.scale * rng.standard_normal(current.shape[0])
    accept = np.log(rng.random(current.shape[0])) < cond_fn(proposal) - ld_cur
    state.record(accept)
    tracker.record(accept)
    return np.where(accept, proposal, current)


def centered_pair_proposal(log_lam, gamma, eta_bar, step):
    """Joint slope/intercept proposal centered at the current ability mean.

    A log-scale random-walk step on the slope pairs with the deterministic
    intercept shift gamma* = gamma + eta_bar (lambda - lambda*), which keeps
    lambda* eta_bar + gamma* equal to lambda eta_bar + gamma exactly. The
    map (log lambda, gamma) -> (log lambda*, gamma*) has unit Jacobian, so
    the pair is accepted on the likelihood and prior ratios alone.
    """
    log_lam = np.asarray(log_lam, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    log_lam_new = log_lam + np.asarray(step, dtype=float)
    gamma_new = gamma + eta_bar * (np.exp(log_lam) - np.exp(log_lam_new))
    return log_lam_new, gamma_new


class _Chain:
    def __init__(self, data, strategy, priors, seed):
        self.data = data
        self.strategy = strategy
        self.priors = priors
        self.rng = substream(seed, "chain")
        self.lik = _Likelihood(data, strategy.kind, strategy.parameterization)
        self.n = data.n_individuals
        self.i = data.n_items
        ups0 = None
        if strategy.kind is ModelKind.THREE_PL:
            a, b = priors.items.guessing_shape
            ups0 = np.full(self.i, math.log(a / b))
        self.state = ChainState(
            log_lam=np.zeros(self.i),
            loc=np.zeros(self.i),
            eta=_init_abilities(data),
            logit_ups=ups0,
        )
        if strategy.ability_model is AbilityModel.SEMIPARAMETRIC:
            alpha0 = priors.ability.concentration.initial_value()
            self.state.crp = CRPState.single_cluster(self.n, alpha0)
        self.samplers = _Samplers(
            eta=AdaptiveMHState.for_targets(self.n),
            log_lam=AdaptiveMHState.for_targets(self.i),
            loc=AdaptiveMHState.for_targets(self.i),
            ups=AdaptiveMHState.for_targets(self.i) if ups0 is not None else None,
            pair=AdaptiveMHState.for_targets(self.i)
            if strategy.algorithm is Algorithm.CENTERED
            else None,
        )
        self.trackers = {
            name: AcceptanceTracker()
            for name in ("abilities", "discrimination", "location", "guessing", "centered_pairs")
        }
        self.update_discrimination = strategy.kind is not ModelKind.ONE_PL
        if strategy.constraint is ConstraintMode.ITEMS:
            self.total_ll = self.lik.total(*self._constrained_params())

    # -- parameter views ---------------------------------------------------

    def _constrained_params(self):
        """Model-scale item parameters under in-model sum-to-zero constraints."""
        st = self.state
        log_lam = st.log_lam - st.log_lam.mean() if self.update_discrimination else st.log_lam
        return log_lam, st.loc - st.loc.mean(), st.logit_ups, st.eta

    def model_item_params(self):
        if self.strategy.constraint is ConstraintMode.ITEMS:
            log_lam, loc, _, _ = self._constrained_params()
            return log_lam, loc
        return self.state.log_lam, self.state.loc

    # -- ability block -----------------------------------------------------

    def _eta_prior_terms(self, eta):
        st = self.state
        if self.strategy.ability_model is AbilityModel.SEMIPARAMETRIC:
            mu = np.asarray(st.crp.means)[st.crp.labels]
            var = np.asarray(st.crp.variances)[st.crp.labels]
            return _normal_logpdf(eta, mu, var)
        if self.strategy.constraint is ConstraintMode.ABILITIES:
            return _normal_logpdf(eta, 0.0, 1.0)
        return _normal_logpdf(eta, st.mu_eta, st.sigma2_eta)

    def update_abilities(self):
        st = self.state
        log_lam, loc = self.model_item_params()

        def cond(eta):
            return self.lik.by_individual(log_lam, loc, st.logit_ups, eta) + self._eta_prior_terms(eta)

        st.eta = _vector_mh(st.eta, cond, self.samplers.eta, self.trackers["abilities"], self.rng)
        if self.strategy.constraint is ConstraintMode.ITEMS:
            self.total_ll = self.lik.total(*self._constrained_params())

    # -- item block ----------------------------------------------------------

    def update_items(self):
        if self.strategy.constraint is ConstraintMode.ITEMS:
            self._update_items_constrained()
        elif self.strategy.algorithm is Algorithm.CENTERED:
            self._update_items_centered()
        else:
            self._update_items_plain()
        if self.samplers.ups is not None:
            self._update_guessing()

    def _update_items_plain(self):
        st, prior = self.state, self.priors.items
        if self.update_discrimination:

            def cond_lam(u):
                return self.lik.by_item(u, st.loc, st.logit_ups, st.eta) + _normal_logpdf(
                    u, prior.mean_log_discrimination, prior.var_log_discrimination
                )

            st.log_lam = _vector_mh(
                st.log_lam, cond_lam, self.samplers.log_lam, self.trackers["discrimination"], self.rng
            )
        loc_var = (
            prior.var_difficulty
            if self.strategy.parameterization is Parameterization.IRT
            else prior.var_intercept
        )

        def cond_loc(loc):
            return self.lik.by_item(st.log_lam, loc, st.logit_ups, st.eta) + _normal_logpdf(
                loc, 0.0, loc_var
            )

        st.loc = _vector_mh(st.loc, cond_loc, self.samplers.loc, self.trackers["location"], self.rng)

    def _update_items_centered(self):
        """Joint (log lambda, gamma) proposal centered at the current ability mean.

        gamma* = gamma + eta_bar (lambda - lambda*) keeps the logit surface
        fixed at eta = eta_bar; the map has unit Jacobian in (log lambda,
        gamma) coordinates, so only the prior and likelihood ratios enter.
        The plain scalar sampler for gamma still runs afterwards.
        """
        st, prior = self.state, self.priors.items
        sampler = self.samplers.pair
        eta_bar = float(st.eta.mean())
        u_prop, gamma_prop = centered_pair_proposal(
            st.log_lam, st.loc, eta_bar, sampler.scale * self.rng.standard_normal(self.i)
        )

        def pair_logdens(u, gamma):
            return (
                self.lik.by_item(u, gamma, st.logit_ups, st.eta)
                + _normal_logpdf(u, prior.mean_log_discrimination, prior.var_log_discrimination)
                + _normal_logpdf(gamma, 0.0, prior.var_intercept)
            )

        ratio = pair_logdens(u_prop, gamma_prop) - pair_logdens(st.log_lam, st.loc)
        accept = np.log(self.rng.random(self.i)) < ratio
        sampler.record(accept)
        self.trackers["centered_pairs"].record(accept)
        st.log_lam = np.where(accept, u_prop, st.log_lam)
        st.loc = np.where(accept, gamma_prop, st.loc)

        def cond_loc(loc):
            return self.lik.by_item(st.log_lam, loc, st.logit_ups, st.eta) + _normal_logpdf(
                loc, 0.0, prior.var_intercept
            )

        st.loc = _vector_mh(st.loc, cond_loc, self.samplers.loc, self.trackers["location"], self.rng)

    def _update_items_constrained(self):
        """Scalar sweeps over the auxiliary parameters behind the constraints.

        Every proposal shifts the block mean, touching all items at once, so
        each update re-evaluates the full likelihood; this is the documented
        cost of the in-model constraint strategy.
        """
        st, prior = self.state, self.priors.items
        loc_var = (
            prior.var_difficulty
            if self.strategy.parameterization is Parameterization.IRT
            else prior.var_intercept
        )
        if self.update_discrimination:
            accept_lam = np.zeros(self.i, dtype=bool)
            scales = self.samplers.log_lam.scale
            for i in range(self.i):
                cur = st.log_lam[i]
                prop = cur + scales[i] * self.rng.standard_normal()
                st.log_lam[i] = prop
                ll_prop = self.lik.total(*self._constrained_params())
                log_ratio = (
                    ll_prop
                    - self.total_ll
                    + _normal_logpdf(prop, prior.mean_log_discrimination, prior.var_log_discrimination)
                    - _normal_logpdf(cur, prior.mean_log_discrimination, prior.var_log_discrimination)
                )
                if math.log(self.rng.random()) < log_ratio:
                    accept_lam[i] = True
                    self.total_ll = ll_prop
                else:
                    st.log_lam[i] = cur
            self.samplers.log_lam.record(accept_lam)
            self.trackers["discrimination"].record(accept_lam)
        accept_loc = np.zeros(self.i, dtype=bool)
        scales = self.samplers.loc.scale
        for i in range(self.i):
            cur = st.loc[i]
            prop = cur + scales[i] * self.rng.standard_normal()
            st.loc[i] = prop
            ll_prop = self.lik.total(*self._constrained_params())
            log_ratio = (
                ll_prop
                - self.total_ll
                + _normal_logpdf(prop, 0.0, loc_var)
                - _normal_logpdf(cur, 0.0, loc_var)
            )
            if math.log(self.rng.random()) < log_ratio:
                accept_loc[i] = True
                self.total_ll = ll_prop
            else:
                st.loc[i] = cur
        self.samplers.loc.record(accept_loc)
        self.trackers["location"].record(accept_loc)

    def _update_guessing(self):
        st = self.state
        a, b = self.priors.items.guessing_shape
        log_lam, loc = self.model_item_params()

        def cond_ups(t):
            # Beta prior mapped to the logit scale (Jacobian folded in)
            prior = a * np.log(expit(t)) + b * np.log(expit(-t))
            return self.lik.by_item(log_lam, loc, t, st.eta) + prior

        st.logit_ups = _vector_mh(
            st.logit_ups, cond_ups, self.samplers.ups, self.trackers["guessing"], self.rng
        )
        if self.strategy.constraint is ConstraintMode.ITEMS:
            self.total_ll = self.lik.total(*self._constrained_params())

    # -- ability-model block -------------------------------------------------

    def update_ability_model(self, debug=False):
        st = self.state
        if self.strategy.ability_model is AbilityModel.SEMIPARAMETRIC:
            g0 = self.priors.ability.base_measure
            crp_label_sweep(st.crp, st.eta, g0, self.rng)
            update_cluster_atoms(st.crp, st.eta, g0, self.rng)
            conc = self.priors.ability.concentration
            if not conc.is_fixed:
                st.crp.alpha = escobar_west_alpha_update(
                    st.crp.alpha, st.crp.n_clusters, self.n, (conc.shape, conc.rate), self.rng
                )
            if debug:
                st.crp.validate()
        elif self.strategy.constraint is not ConstraintMode.ABILITIES:
            st.mu_eta, st.sigma2_eta = conjugate_normal_invgamma_update(
                st.eta, self.priors.ability.hyper, st.sigma2_eta, self.rng
            )

    def sweep(self, debug=False):
        self.update_abilities()
        self.update_items()
        self.update_ability_model(debug=debug)
        self.state.iteration += 1


def _archive_columns(strategy: StrategyConfig, n: int, n_items: int) -> list[str]:
    cols = [f"lambda_{i + 1}" for i in range(n_items)]
    loc_name = "beta" if strategy.parameterization is Parameterization.IRT else "gamma"
    cols += [f"{loc_name}_{i + 1}" for i in range(n_items)]
    if strategy.kind is ModelKind.THREE_PL:
        cols += [f"upsilon_{i + 1}" for i in range(n_items)]
    cols += [f"eta_{j + 1}" for j in range(n)]
    if strategy.ability_model is AbilityModel.SEMIPARAMETRIC:
        cols += ["alpha", "n_clusters", "new_cluster_mean", "new_cluster_var"]
    else:
        cols += ["mu_eta", "sigma2_eta"]
    return cols


def run_chain(
    data: ResponseMatrix,
    strategy: StrategyConfig,
    priors: Priors | None = None,
    n_iterations: int = 50_000,
    n_burnin: int = 5_000,
    seed: int = 0,
    debug: bool = False,
) -> SampleArchive:
    """Run one MCMC chain and return its post-burn-in sample archive.

    The archive records every monitored scalar per kept draw, the per-phase
    wall-clock split (burn-in vs sampling), acceptance rates, and the
    strategy descriptor. Identical inputs and seed reproduce the archive
    bit for bit.
    """
    if priors is None:
        priors = Priors()
    if not 0 <= n_burnin < n_iterations:
        raise ValidationError("burn-in must be shorter than the total iteration count")
    chain = _Chain(data, strategy, priors, seed)
    n, n_items = data.n_individuals, data.n_items
    semiparametric = strategy.ability_model is AbilityModel.SEMIPARAMETRIC
    columns = _archive_columns(strategy, n, n_items)
    n_keep = n_iterations - n_burnin
    draws = np.empty((n_keep, len(columns)))
    labels = np.empty((n_keep, n), dtype=np.int64) if semiparametric else None
    cluster_rows: list[tuple] = []

    t0 = time.perf_counter()
    for _ in range(n_burnin):
        chain.sweep(debug=debug)
    t1 = time.perf_counter()
    chain.samplers.freeze()

    g0 = priors.ability.base_measure
    for t in range(n_keep):
        chain.sweep(debug=debug)
        st = chain.state
        log_lam, loc = chain.model_item_params()
        row = [np.exp(log_lam), loc]
        if st.logit_ups is not None:
            row.append(expit(st.logit_ups))
        row.append(st.eta)
        if semiparametric:
            # one fresh G0 atom per draw feeds the predictive density estimate
            new_mu, new_var = g0.sample(chain.rng)
            row.append([st.crp.alpha, float(st.crp.n_clusters), new_mu, new_var])
            labels[t] = st.crp.labels
            for k in range(st.crp.n_clusters):
                cluster_rows.append(
                    (t, k, st.crp.counts[k], st.crp.means[k], st.crp.variances[k])
                )
        else:
            row.append([st.mu_eta, st.sigma2_eta])
        draws[t] = np.concatenate(row)
    t2 = time.perf_counter()

    meta = {
        "strategy": strategy.describe(),
        "label": strategy.label,
        "seed": seed,
        "n_iterations": n_iterations,
        "n_burnin": n_burnin,
        "n_draws": n_keep,
        "n_individuals": n,
        "n_items": n_items,
        "item_names": list(data.item_names),
        "parameterization": strategy.parameterization.value,
        "timings": {
            "burnin_seconds": t1 - t0,
            "sampling_seconds": t2 - t1,
            "total_seconds": t2 - t0,
        },
        "acceptance_rates": {
            name: tracker.rate
            for name, tracker in chain.trackers.items()
            if tracker.proposed > 0
        },
        "priors": {
            "items": {
                "mean_log_discrimination": priors.items.mean_log_discrimination,
                "var_log_discrimination": priors.items.var_log_discrimination,
                "var_difficulty": priors.items.var_difficulty,
                "var_intercept": priors.items.var_intercept,
                "guessing_shape": list(priors.items.guessing_shape),
            },
            "ability": {
                "hyper": [g.mean_loc, g.mean_var, g.shape, g.scale]
                if (g := priors.ability.hyper)
                else None,
                "base_measure": [g0.mean_loc, g0.mean_var, g0.shape, g0.scale],
                "concentration": {
                    "fixed": priors.ability.concentration.fixed,
                    "shape": priors.ability.concentration.shape,
                    "rate": priors.ability.concentration.rate,
                },
            },
        },
    }
    clusters = (
        np.array(cluster_rows, dtype=float) if semiparametric else None
    )
    return SampleArchive(columns=columns, draws=draws, meta=meta, labels=labels, clusters=clusters)
