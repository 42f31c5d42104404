"""Adaptive random-walk Metropolis-Hastings with Shaby-Wells scale tuning.

One state object tracks a vector of scalar targets; each target carries its
own log proposal scale. Scales adapt every ``interval`` steps toward a 0.44
acceptance rate and can be frozen so the post-burn-in kernel is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

TARGET_ACCEPTANCE = 0.44
ADAPT_INTERVAL = 200
_ADAPT_EXPONENT = 0.8


@dataclass
class AdaptiveMHState:
    """Per-target log proposal scales plus acceptance bookkeeping."""

    log_scale: np.ndarray
    accepted: np.ndarray
    steps: int = 0
    times_adapted: int = 0
    interval: int = ADAPT_INTERVAL
    target_rate: float = TARGET_ACCEPTANCE
    frozen: bool = False

    @classmethod
    def for_targets(cls, n_targets: int, initial_scale: float = 1.0, **kwargs) -> "AdaptiveMHState":
        if initial_scale <= 0:
            raise ValidationError("initial proposal scale must be positive")
        return cls(
            log_scale=np.full(n_targets, np.log(initial_scale)),
            accepted=np.zeros(n_targets),
            **kwargs,
        )

    @property
    def scale(self) -> np.ndarray:
        return np.exp(self.log_scale)

    def record(self, accepted) -> None:
        """Record one sweep's acceptances and adapt at interval boundaries."""
        self.accepted += accepted
        self.steps += 1
        if self.steps % self.interval == 0 and not self.frozen:
            self.times_adapted += 1
            gamma = 10.0 / (self.times_adapted + 3.0) ** _ADAPT_EXPONENT
            rate = self.accepted / self.interval
            self.log_scale += gamma * (rate - self.target_rate)
            self.accepted[:] = 0.0

    def freeze(self) -> None:
        self.frozen = True


@dataclass
class AcceptanceTracker:
    """Running acceptance-rate average for reporting."""

    accepted: float = 0.0
    proposed: float = 0.0

    def record(self, accepted) -> None:
        acc = np.asarray(accepted)
        self.accepted += float(acc.sum())
        self.proposed += float(acc.size)

    @property
    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


def vector_rw_mh_step(log_density, current, state: AdaptiveMHState, rng):
    """Simultaneous RW-MH update of conditionally independent scalar targets.

    ``log_density`` maps a full vector to the vector of per-target conditional
    log densities (each coordinate's density must not depend on the others).
    Returns (new vector, acceptance flags).
    """
    current = np.asarray(current, dtype=float)
    ld_cur = np.asarray(log_density(current), dtype=float)
    if not np.isfinite(ld_cur).all():
        raise ValidationError("log density is not finite at the current state")
    proposal = current + state.scale * rng.standard_normal(current.shape[0])
    ld_prop = np.asarray(log_density(proposal), dtype=float)
    accept = np.log(rng.random(current.shape[0])) < ld_prop - ld_cur
    state.record(accept)
    return np.where(accept, proposal, current), accept


def adaptive_rw_mh_step(target_log_density, current: float, state: AdaptiveMHState, rng):
    """One adaptive RW-MH step on a scalar target; returns (value, accepted)."""
    if state.log_scale.shape[0] != 1:
        raise ValidationError("scalar step requires a single-target state")
    new, accept = vector_rw_mh_step(
        lambda v: np.array([target_log_density(v[0])]), np.array([current]), state, rng
    )
    return float(new[0]), bool(accept[0])
