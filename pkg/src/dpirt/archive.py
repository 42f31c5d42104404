"""Columnar on-disk format for post-burn-in MCMC draws.

An archive directory holds samples.csv (one column per monitored scalar),
samples_meta.json (strategy descriptor, seed, timings, acceptance rates), and for
semiparametric chains labels.csv (cluster labels per draw) plus
clusters.csv (per-draw occupied-cluster atoms). Draw files are written
with deterministic formatting so identical runs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

CLUSTER_FIELDS = ("draw", "cluster", "count", "mean", "variance")


def _fmt(value: float) -> str:
    return format(value, ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


@dataclass
class SampleArchive:
    columns: list[str]
    draws: np.ndarray
    meta: dict
    labels: np.ndarray | None = None
    clusters: np.ndarray | None = None

    def __post_init__(self):
        if self.draws.ndim != 2 or self.draws.shape[1] != len(self.columns):
            raise ValidationError("draw matrix does not match the column list")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def is_semiparametric(self) -> bool:
        return self.labels is not None

    def column(self, name: str) -> np.ndarray:
        try:
            return self.draws[:, self.columns.index(name)]
        except ValueError:
            raise ValidationError(f"archive has no column {name!r}") from None

    def block(self, prefix: str) -> tuple[list[str], np.ndarray]:
        """Columns named ``<prefix>_<k>`` in file order."""
        names = [c for c in self.columns if c.startswith(prefix + "_") and c[len(prefix) + 1 :].isdigit()]
        if not names:
            return [], np.empty((self.n_draws, 0))
        idx = [self.columns.index(c) for c in names]
        return names, self.draws[:, idx]

    def clusters_for_draw(self, t: int) -> np.ndarray:
        """Rows (draw, cluster, count, mean, variance) of draw t."""
        if self.clusters is None:
            raise ValidationError("archive has no cluster atoms")
        rows = self.clusters[self.clusters[:, 0] == t]
        if rows.shape[0] == 0:
            raise ValidationError(f"no cluster atoms recorded for draw {t}")
        return rows

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        _write_csv(
            directory / "samples.csv",
            self.columns,
            (map(_fmt, row) for row in self.draws),
        )
        with open(directory / "samples_meta.json", "w") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if self.labels is not None:
            _write_csv(
                directory / "labels.csv",
                [f"z_{j + 1}" for j in range(self.labels.shape[1])],
                ((str(int(v)) for v in row) for row in self.labels),
            )
        if self.clusters is not None:
            _write_csv(
                directory / "clusters.csv",
                list(CLUSTER_FIELDS),
                (
                    [str(int(r[0])), str(int(r[1])), str(int(r[2])), _fmt(r[3]), _fmt(r[4])]
                    for r in self.clusters
                ),
            )
        return directory

    @classmethod
    def load(cls, directory) -> "SampleArchive":
        directory = Path(directory)
        samples = directory / "samples.csv"
        if not samples.exists():
            raise ValidationError(f"{directory} is not a sample archive (samples.csv missing)")
        with open(samples) as fh:
            columns = fh.readline().strip().split(",")
        draws = np.loadtxt(samples, delimiter=",", skiprows=1, ndmin=2)
        with open(directory / "samples_meta.json") as fh:
            meta = json.load(fh)
        labels = clusters = None
        if (directory / "labels.csv").exists():
            labels = np.loadtxt(directory / "labels.csv", delimiter=",", skiprows=1, ndmin=2).astype(
                np.int64
            )
        if (directory / "clusters.csv").exists():
            clusters = np.loadtxt(directory / "clusters.csv", delimiter=",", skiprows=1, ndmin=2)
        return cls(columns=columns, draws=draws, meta=meta, labels=labels, clusters=clusters)
