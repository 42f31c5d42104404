"""Effective-sample-size diagnostics and efficiency-per-second reports.

Univariate ESS uses the batch-means long-run variance; the multivariate
version is the determinant-ratio estimator (sample covariance against the
multivariate batch-means covariance), reduced through log-determinants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr

from .archive import SampleArchive
from .errors import ValidationError

MIN_CHAIN_LENGTH = 100


def _batch_means(x: np.ndarray, batch_size: int) -> np.ndarray:
    n_batches = x.shape[0] // batch_size
    trimmed = x[: n_batches * batch_size]
    return trimmed.reshape(n_batches, batch_size, *x.shape[1:]).mean(axis=1)


def univariate_ess(chain) -> float:
    """Batch-means ESS of a scalar chain (batch size floor(sqrt(n))).

    A constant chain is reported as fully mixed (ESS = n) with a warning.
    """
    x = np.asarray(chain, dtype=float)
    if x.ndim != 1:
        raise ValidationError("univariate ESS expects a 1-d chain")
    n = x.shape[0]
    if n < MIN_CHAIN_LENGTH:
        raise ValidationError(f"need at least {MIN_CHAIN_LENGTH} draws")
    var = x.var(ddof=1)
    if var == 0.0:
        warnings.warn("constant chain; reporting ESS = n", stacklevel=2)
        return float(n)
    b = int(math.isqrt(n))
    means = _batch_means(x, b)
    long_run = b * means.var(ddof=1)
    return float(n * var / long_run)


def _drop_constant_columns(x, names):
    keep = x.var(axis=0, ddof=1) > 0
    dropped = [names[i] for i in np.flatnonzero(~keep)]
    return x[:, keep], [names[i] for i in np.flatnonzero(keep)], dropped


def _drop_collinear_columns(x, names):
    """Greedy pivoted-QR style pruning of linearly dependent columns."""
    centered = x - x.mean(axis=0)
    _, r, piv = qr(centered, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(centered.shape) * np.finfo(float).eps
    rank = int((diag > tol).sum())
    keep = np.sort(piv[:rank])
    dropped = [names[i] for i in sorted(set(range(x.shape[1])) - set(keep.tolist()))]
    return x[:, keep], [names[i] for i in keep], dropped


def multivariate_ess(draws, names=None, report: dict | None = None) -> float:
    """Multivariate ESS: n * (det Lambda / det Sigma)^(1/p).

    Lambda is the sample covariance, Sigma the multivariate batch-means
    long-run covariance (batch size floor(sqrt(n))). Constant and collinear
    columns are dropped (recorded in ``report``); the batch count must
    exceed the retained dimension for Sigma to be full rank.
    """
    x = np.atleast_2d(np.asarray(draws, dtype=float))
    if x.ndim != 2:
        raise ValidationError("multivariate ESS expects an n x p draw matrix")
    n, p = x.shape
    names = list(names) if names is not None else [f"col_{i}" for i in range(p)]
    if n < max(MIN_CHAIN_LENGTH, 10 * p):
        raise ValidationError(f"need at least max(100, 10p) = {max(MIN_CHAIN_LENGTH, 10 * p)} draws for p = {p}")
    x, names, const = _drop_constant_columns(x, names)
    if const:
        warnings.warn(f"dropping constant columns: {const}", stacklevel=2)
    x, names, collinear = _drop_collinear_columns(x, names)
    if collinear:
        warnings.warn(f"dropping collinear columns: {collinear}", stacklevel=2)
    if report is not None:
        report["dropped_constant"] = const
        report["dropped_collinear"] = collinear
        report["columns_used"] = names
    p = x.shape[1]
    if p == 0:
        raise ValidationError("no non-degenerate columns left")
    b = int(math.isqrt(n))
    if n // b <= p:
        raise ValidationError(
            f"batch count {n // b} must exceed the dimension {p}; thin the selection or lengthen the chain"
        )
    lam = np.cov(x, rowvar=False, ddof=1).reshape(p, p)
    means = _batch_means(x, b)
    sigma = b * np.cov(means, rowvar=False, ddof=1).reshape(p, p)
    sign_l, logdet_l = np.linalg.slogdet(lam)
    sign_s, logdet_s = np.linalg.slogdet(sigma)
    if sign_l <= 0 or sign_s <= 0:
        raise ValidationError("covariance estimate is singular even after pruning")
    return float(n * math.exp((logdet_l - logdet_s) / p))


@dataclass(frozen=True)
class EfficiencyReport:
    """mESS per second for one archive under both timing conventions."""

    label: str
    mess: float
    univariate: dict
    sampling_seconds: float
    total_seconds: float
    mess_per_sampling_second: float
    mess_per_total_second: float
    columns_used: list = field(default_factory=list)
    dropped: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "mess": self.mess,
            "univariate_ess": self.univariate,
            "sampling_seconds": self.sampling_seconds,
            "total_seconds": self.total_seconds,
            "mess_per_sampling_second": self.mess_per_sampling_second,
            "mess_per_total_second": self.mess_per_total_second,
            "columns_used": self.columns_used,
            "dropped": self.dropped,
        }


def common_parameter_columns(archive: SampleArchive, max_abilities: int | None = None) -> list[str]:
    """Item-parameter and ability columns shared by every strategy."""
    lam = archive.block("lambda")[0]
    beta = archive.block("beta")[0]
    gamma = archive.block("gamma")[0]
    eta = archive.block("eta")[0]
    if max_abilities is not None:
        eta = eta[:max_abilities]
    return list(lam) + list(beta) + list(gamma) + list(eta)


def efficiency_report(archive: SampleArchive, selection=None) -> EfficiencyReport:
    """mESS over the selected columns plus efficiency per second.

    ``selection`` is a list of column names; it defaults to all common
    parameters (item parameters and abilities) of a base-parameterization
    archive. Cluster labels and transform records never enter.
    """
    timings = archive.meta.get("timings") or {}
    if "sampling_seconds" not in timings or "total_seconds" not in timings:
        raise ValidationError("archive meta lacks timing information")
    if selection is None:
        selection = common_parameter_columns(archive)
    idx = [archive.columns.index(c) for c in selection if c in archive.columns]
    if len(idx) != len(selection):
        missing = sorted(set(selection) - set(archive.columns))
        raise ValidationError(f"selection includes unknown columns: {missing}")
    draws = archive.draws[:, idx]
    report: dict = {}
    mess = multivariate_ess(draws, names=selection, report=report)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        uni = {
            name: univariate_ess(draws[:, k])
            for k, name in enumerate(selection)
            if name in report["columns_used"]
        }
    sampling = float(timings["sampling_seconds"])
    total = float(timings["total_seconds"])
    if sampling <= 0 or total <= 0:
        raise ValidationError("timings must be positive")
    return EfficiencyReport(
        label=archive.meta.get("label", "archive"),
        mess=mess,
        univariate=uni,
        sampling_seconds=sampling,
        total_seconds=total,
        mess_per_sampling_second=mess / sampling,
        mess_per_total_second=mess / total,
        columns_used=report["columns_used"],
        dropped={
            "constant": report["dropped_constant"],
            "collinear": report["dropped_collinear"],
        },
    )
