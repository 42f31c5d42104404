"""Synthetic scenarios: unimodal, bimodal and multimodal ability distributions.

Item truth uses Uniform(0.5, 1.5) discriminations centered on the log scale
and difficulties equally spaced in (-3, 3); abilities come from the
scenario's closed-form mixture (the multimodal one includes a skew-normal
component sampled via its delta representation).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError
from .model import ModelKind, ResponseMatrix, success_probability
from .rng import substream

SCENARIO_NAMES = ("unimodal", "bimodal", "multimodal")


@dataclass(frozen=True)
class Scenario:
    name: str
    n_individuals: int
    n_items: int
    seed: int = 0

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValidationError(f"unknown scenario {self.name!r}; pick one of {SCENARIO_NAMES}")
        if self.n_individuals < 2 or self.n_items < 2:
            raise ValidationError("need at least two individuals and two items")


@dataclass(frozen=True)
class GroundTruth:
    """True parameters behind a synthetic dataset (items centered as generated)."""

    scenario: str
    discrimination: np.ndarray
    difficulty: np.ndarray
    abilities: np.ndarray
    discrimination_uncentered: np.ndarray
    guessing: np.ndarray | None = None

    def to_csv(self, path) -> None:
        fmt = lambda v: format(float(v), ".17g")  # noqa: E731
        buf = io.StringIO()
        buf.write("name,value\n")
        for i, (lam, raw, beta) in enumerate(
            zip(self.discrimination, self.discrimination_uncentered, self.difficulty), start=1
        ):
            buf.write(f"lambda_{i},{fmt(lam)}\n")
            buf.write(f"lambda_raw_{i},{fmt(raw)}\n")
            buf.write(f"beta_{i},{fmt(beta)}\n")
        if self.guessing is not None:
            for i, ups in enumerate(self.guessing, start=1):
                buf.write(f"upsilon_{i},{fmt(ups)}\n")
        for j, eta in enumerate(self.abilities, start=1):
            buf.write(f"eta_{j},{fmt(eta)}\n")
        buf.write(f"scenario,{self.scenario}\n")
        Path(path).write_text(buf.getvalue())

    @classmethod
    def from_csv(cls, path) -> "GroundTruth":
        values: dict[str, str] = {}
        for line in Path(path).read_text().splitlines()[1:]:
            if line.strip():
                name, value = line.split(",", 1)
                values[name] = value

        def block(prefix):
            out = []
            i = 1
            while f"{prefix}_{i}" in values:
                out.append(float(values[f"{prefix}_{i}"]))
                i += 1
            return np.asarray(out)

        ups = block("upsilon")
        return cls(
            scenario=values.get("scenario", "unimodal"),
            discrimination=block("lambda"),
            difficulty=block("beta"),
            abilities=block("eta"),
            discrimination_uncentered=block("lambda_raw"),
            guessing=ups if ups.size else None,
        )


def sample_skew_normal(location, scale, shape, size, rng) -> np.ndarray:
    """Skew-normal draws via the delta representation.

    delta = shape/sqrt(1+shape^2); z = delta|u0| + sqrt(1-delta^2) u1 for
    independent standard normals u0, u1; the draw is location + scale*z.
    """
    if scale <= 0:
        raise ValidationError("skew-normal scale must be positive")
    delta = shape / math.sqrt(1.0 + shape**2)
    u0 = rng.standard_normal(size)
    u1 = rng.standard_normal(size)
    z = delta * np.abs(u0) + math.sqrt(1.0 - delta**2) * u1
    return location + scale * z


def skew_normal_pdf(x, location, scale, shape) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - location) / scale
    return 2.0 / scale * np.exp(-0.5 * z**2) / math.sqrt(2.0 * math.pi) * ndtr(shape * z)


def skew_normal_mean(location, scale, shape) -> float:
    delta = shape / math.sqrt(1.0 + shape**2)
    return location + scale * delta * math.sqrt(2.0 / math.pi)


_MULTIMODAL = (
    (0.2, ("normal", -2.0, 1.0)),
    (0.4, ("normal", 0.0, 0.5)),
    (0.4, ("skew", 3.0, 1.0, -3.0)),
)


def scenario_density(name: str, grid) -> np.ndarray:
    """Closed-form pdf of the scenario's true ability distribution."""
    grid = np.asarray(grid, dtype=float)
    if name == "unimodal":
        return np.exp(-0.5 * (grid / 1.25) ** 2) / (1.25 * math.sqrt(2 * math.pi))
    if name == "bimodal":
        out = np.zeros_like(grid)
        for mean in (-2.0, 2.0):
            out += 0.5 * np.exp(-0.5 * ((grid - mean) / 1.25) ** 2) / (1.25 * math.sqrt(2 * math.pi))
        return out
    if name == "multimodal":
        out = np.zeros_like(grid)
        for weight, spec in _MULTIMODAL:
            if spec[0] == "normal":
                _, mean, sd = spec
                out += weight * np.exp(-0.5 * ((grid - mean) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            else:
                _, loc, scale, shape = spec
                out += weight * skew_normal_pdf(grid, loc, scale, shape)
        return out
    raise ValidationError(f"unknown scenario {name!r}")


def simulate_items(n_items: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(centered discriminations, difficulties, uncentered discriminations).

    Discriminations are Uniform(0.5, 1.5) draws log-centered to product one;
    difficulties are beta_i = -3 + 6 i/(I+1), symmetric in (-3, 3) so they
    sum to zero by construction.
    """
    if n_items < 2:
        raise ValidationError("need at least two items")
    rng = substream(seed, "items")
    raw = rng.uniform(0.5, 1.5, size=n_items)
    lam = np.exp(np.log(raw) - np.log(raw).mean())
    beta = -3.0 + 6.0 * np.arange(1, n_items + 1) / (n_items + 1)
    return lam, beta, raw


def simulate_abilities(scenario_name: str, n: int, seed: int) -> np.ndarray:
    if n < 2:
        raise ValidationError("need at least two individuals")
    rng = substream(seed, "abilities")
    if scenario_name == "unimodal":
        return rng.normal(0.0, 1.25, size=n)
    if scenario_name == "bimodal":
        means = np.where(rng.random(n) < 0.5, -2.0, 2.0)
        return rng.normal(means, 1.25)
    if scenario_name == "multimodal":
        weights = [w for w, _ in _MULTIMODAL]
        component = rng.choice(len(_MULTIMODAL), size=n, p=weights)
        out = np.empty(n)
        for k, (_, spec) in enumerate(_MULTIMODAL):
            mask = component == k
            if spec[0] == "normal":
                out[mask] = rng.normal(spec[1], spec[2], size=int(mask.sum()))
            else:
                out[mask] = sample_skew_normal(spec[1], spec[2], spec[3], int(mask.sum()), rng)
        return out
    raise ValidationError(f"unknown scenario {scenario_name!r}")


def simulate_truth(scenario: Scenario) -> GroundTruth:
    lam, beta, raw = simulate_items(scenario.n_items, scenario.seed)
    eta = simulate_abilities(scenario.name, scenario.n_individuals, scenario.seed)
    return GroundTruth(
        scenario=scenario.name,
        discrimination=lam,
        difficulty=beta,
        abilities=eta,
        discrimination_uncentered=raw,
    )


def simulate_responses(truth: GroundTruth, kind=ModelKind.TWO_PL, seed: int = 0) -> ResponseMatrix:
    """Independent Bernoulli responses; synthetic data carry no missingness."""
    kind = ModelKind(kind)
    rng = substream(seed, "responses")
    lam = np.ones_like(truth.discrimination) if kind is ModelKind.ONE_PL else truth.discrimination
    if kind is ModelKind.THREE_PL and truth.guessing is None:
        raise ValidationError("3PL responses need guessing truth")
    pi = success_probability(
        kind,
        lam[None, :],
        truth.difficulty[None, :],
        truth.abilities[:, None],
        truth.guessing[None, :] if kind is ModelKind.THREE_PL else None,
    )
    values = (rng.random(pi.shape) < pi).astype(np.int8)
    return ResponseMatrix(
        values=values,
        observed=np.ones_like(values, dtype=bool),
        item_names=tuple(f"item_{i + 1}" for i in range(pi.shape[1])),
    )
