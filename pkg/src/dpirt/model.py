"""Data model and likelihoods for binary logistic IRT (1PL/2PL/3PL).

Two equivalent parameterizations of the log-odds are supported:
the IRT form lambda_i * (eta_j - beta_i) and the slope-intercept (SI)
form lambda_i * eta_j + gamma_i, related by gamma_i = -lambda_i * beta_i.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import expit, log_expit

from .errors import ValidationError

# Probabilities are clamped to [PROB_FLOOR, PROB_CEIL] inside log terms so a
# saturated logit can never produce -inf during adaptation.
PROB_FLOOR = 1e-300
PROB_CEIL = 1.0 - 1e-16
LOG_PROB_FLOOR = float(np.log(PROB_FLOOR))

MISSING_TOKENS = {"NA", "na", "NaN", "nan", ""}


class ModelKind(str, Enum):
    ONE_PL = "1pl"
    TWO_PL = "2pl"
    THREE_PL = "3pl"


class Parameterization(str, Enum):
    IRT = "irt"
    SI = "si"


@dataclass(frozen=True)
class ResponseMatrix:
    """N x I binary responses with missingness.

    ``values`` holds 0/1 (content at unobserved cells is ignored) and
    ``observed`` flags the non-missing cells. Every individual and every
    item must have at least one observed response.
    """

    values: np.ndarray
    observed: np.ndarray
    item_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int8)
        observed = np.asarray(self.observed, dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", observed)
        if values.ndim != 2 or values.shape != observed.shape:
            raise ValidationError("responses and observation mask must be matching 2-d arrays")
        if len(self.item_names) != values.shape[1]:
            raise ValidationError(
                f"{len(self.item_names)} item names for {values.shape[1]} columns"
            )
        if not np.isin(values[observed], (0, 1)).all():
            raise ValidationError("observed responses must be 0 or 1")
        if not observed.any(axis=1).all():
            raise ValidationError("every individual needs at least one observed response")
        if not observed.any(axis=0).all():
            raise ValidationError("every item needs at least one observed response")

    @property
    def n_individuals(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_responses(cls, responses, item_names=None) -> "ResponseMatrix":
        """Build from an array with NaN marking missing cells."""
        arr = np.asarray(responses, dtype=float)
        observed = ~np.isnan(arr)
        values = np.where(observed, arr, 0).astype(np.int8)
        if item_names is None:
            item_names = tuple(f"item_{i + 1}" for i in range(arr.shape[1]))
        return cls(values=values, observed=observed, item_names=tuple(item_names))

    @classmethod
    def from_csv(cls, path) -> "ResponseMatrix":
        """Read a header row of item names then 0/1/NA rows."""
        try:
            text = Path(path).read_text()
        except FileNotFoundError:
            raise ValidationError(f"response file {path} does not exist") from None
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 2:
            raise ValidationError(f"{path}: need a header row and at least one individual")
        names = tuple(tok.strip() for tok in lines[0].split(","))
        rows = []
        masks = []
        for lineno, line in enumerate(lines[1:], start=2):
            toks = [tok.strip() for tok in line.split(",")]
            if len(toks) != len(names):
                raise ValidationError(f"{path}:{lineno}: expected {len(names)} fields, got {len(toks)}")
            row = np.zeros(len(names), dtype=np.int8)
            mask = np.zeros(len(names), dtype=bool)
            for i, tok in enumerate(toks):
                if tok in ("0", "1"):
                    row[i] = int(tok)
                    mask[i] = True
                elif tok in MISSING_TOKENS:
                    mask[i] = False
                else:
                    raise ValidationError(f"{path}:{lineno}: invalid response token {tok!r}")
            rows.append(row)
            masks.append(mask)
        return cls(values=np.array(rows), observed=np.array(masks), item_names=names)

    def to_csv(self, path) -> None:
        buf = io.StringIO()
        buf.write(",".join(self.item_names) + "\n")
        for row, mask in zip(self.values, self.observed):
            buf.write(",".join(str(int(v)) if m else "NA" for v, m in zip(row, mask)) + "\n")
        Path(path).write_text(buf.getvalue())


def _as_positive(arr, name):
    arr = np.asarray(arr, dtype=float)
    if not (arr > 0).all():
        raise ValidationError(f"{name} must be strictly positive")
    return arr


@dataclass(frozen=True)
class ItemParametersIRT:
    """Per-item discrimination/difficulty (+ optional guessing)."""

    discrimination: np.ndarray
    difficulty: np.ndarray
    guessing: np.ndarray | None = None

    def __post_init__(self):
        lam = _as_positive(self.discrimination, "discrimination")
        beta = np.asarray(self.difficulty, dtype=float)
        if lam.shape != beta.shape:
            raise ValidationError("discrimination and difficulty must be the same length")
        object.__setattr__(self, "discrimination", lam)
        object.__setattr__(self, "difficulty", beta)
        if self.guessing is not None:
            ups = np.asarray(self.guessing, dtype=float)
            if ups.shape != lam.shape:
                raise ValidationError("guessing must be the same length as discrimination")
            if not ((ups > 0) & (ups < 1)).all():
                raise ValidationError("guessing parameters must lie in (0, 1)")
            object.__setattr__(self, "guessing", ups)

    @property
    def n_items(self) -> int:
        return self.discrimination.shape[0]


@dataclass(frozen=True)
class ItemParametersSI:
    """Per-item slope/intercept; intercept = -slope * difficulty."""

    slope: np.ndarray
    intercept: np.ndarray
    guessing: np.ndarray | None = None

    def __post_init__(self):
        lam = _as_positive(self.slope, "slope")
        gamma = np.asarray(self.intercept, dtype=float)
        if lam.shape != gamma.shape:
            raise ValidationError("slope and intercept must be the same length")
        object.__setattr__(self, "slope", lam)
        object.__setattr__(self, "intercept", gamma)
        if self.guessing is not None:
            ups = np.asarray(self.guessing, dtype=float)
            if not ((ups > 0) & (ups < 1)).all():
                raise ValidationError("guessing parameters must lie in (0, 1)")
            object.__setattr__(self, "guessing", ups)

    @property
    def n_items(self) -> int:
        return self.slope.shape[0]


def si_to_irt(items: ItemParametersSI) -> ItemParametersIRT:
    """Map slope-intercept parameters to IRT form (beta = -gamma/lambda)."""
    return ItemParametersIRT(
        discrimination=items.slope,
        difficulty=-items.intercept / items.slope,
        guessing=items.guessing,
    )


def irt_to_si(items: ItemParametersIRT) -> ItemParametersSI:
    """Map IRT parameters to slope-intercept form (gamma = -lambda*beta)."""
    return ItemParametersSI(
        slope=items.discrimination,
        intercept=-items.discrimination * items.difficulty,
        guessing=items.guessing,
    )


def _check_kind(kind, discrimination, guessing):
    kind = ModelKind(kind)
    if kind is ModelKind.ONE_PL and not np.allclose(discrimination, 1.0):
        raise ValidationError("1PL requires every discrimination to equal 1")
    if kind is ModelKind.THREE_PL and guessing is None:
        raise ValidationError("3PL requires guessing parameters")
    return kind


def success_probability(kind, discrimination, difficulty, ability, guessing=None):
    """P(correct) under the selected model; broadcasts over its arguments.

    2PL: expit{lambda * (eta - beta)}; 3PL adds a guessing floor
    upsilon + (1 - upsilon) * expit{...}. Saturates to (0, 1) rather than
    ever returning exactly 0 or 1.
    """
    lam = _as_positive(discrimination, "discrimination")
    kind = _check_kind(kind, lam, guessing)
    x = lam * (np.asarray(ability, dtype=float) - np.asarray(difficulty, dtype=float))
    p = expit(x)
    if kind is ModelKind.THREE_PL:
        ups = np.asarray(guessing, dtype=float)
        if not ((ups > 0) & (ups < 1)).all():
            raise ValidationError("guessing parameters must lie in (0, 1)")
        p = ups + (1.0 - ups) * p
    return np.clip(p, PROB_FLOOR, PROB_CEIL)


def _logit_matrix(items: ItemParametersIRT, abilities) -> np.ndarray:
    eta = np.asarray(abilities, dtype=float)
    return items.discrimination[None, :] * (eta[:, None] - items.difficulty[None, :])


def cell_log_likelihood_irt(logits, values, guessing=None):
    """Per-cell Bernoulli log-likelihood terms from a logit matrix.

    Uses log-expit identities so large |logit| never cancels or overflows;
    the probability floor keeps terms finite even at infinite logits.
    """
    y = np.asarray(values, dtype=float)
    if guessing is None:
        term = y * log_expit(logits) + (1.0 - y) * log_expit(-logits)
    else:
        ups = np.asarray(guessing, dtype=float)
        p = ups + (1.0 - ups) * expit(logits)
        term = y * np.log(np.clip(p, PROB_FLOOR, PROB_CEIL))
        term += (1.0 - y) * (np.log1p(-ups) + log_expit(-logits))
    return np.maximum(term, LOG_PROB_FLOOR)


def pointwise_log_likelihood(data: ResponseMatrix, kind, items: ItemParametersIRT, abilities):
    """N x I matrix of per-observation log-densities, NaN at missing cells."""
    kind = _check_kind(kind, items.discrimination, items.guessing)
    eta = np.asarray(abilities, dtype=float)
    if items.n_items != data.n_items or eta.shape[0] != data.n_individuals:
        raise ValidationError("item/ability dimensions do not match the data")
    guessing = items.guessing if kind is ModelKind.THREE_PL else None
    terms = cell_log_likelihood_irt(_logit_matrix(items, eta), data.values, guessing)
    return np.where(data.observed, terms, np.nan)


def log_likelihood(data: ResponseMatrix, kind, items: ItemParametersIRT, abilities) -> float:
    """Joint log-likelihood over the observed cells (local independence)."""
    terms = pointwise_log_likelihood(data, kind, items, abilities)
    return float(np.nansum(terms))
