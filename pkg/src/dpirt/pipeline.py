"""End-to-end experiment pipeline and its TOML configuration.

A bundle directory holds the resolved config, the synthetic truth and data
(or a pointer to real data), and per-strategy subdirectories with the raw
archive, its base-parameterization version, density and percentile tables,
and a metrics report. A factorial sweep over individuals/items writes one
sub-bundle per cell.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .archive import SampleArchive
from .diagnostics import common_parameter_columns, efficiency_report
from .errors import ValidationError
from .identify import postprocess_archive
from .inference import (
    density_estimate,
    error_metrics,
    measure_samples_from_archive,
    percentile_estimates,
    posterior_mean_ability_kde,
    waic_from_archive,
)
from .model import ResponseMatrix
from .priors import (
    AbilityPriorConfig,
    ConcentrationPrior,
    ItemPriorConfig,
    NormalInverseGamma,
    Priors,
)
from .rng import substream
from .samplers import StrategyConfig, run_chain
from .scenarios import GroundTruth, Scenario, scenario_density, simulate_responses, simulate_truth

DEFAULT_ITERATIONS = 50_000
DEFAULT_BURNIN = 5_000
DESK_SCALE_ITERATIONS = 10_000
DESK_SCALE_BURNIN = 1_000


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid TOML: {exc}") from exc


def priors_from_config(cfg: dict) -> Priors:
    """Build the prior bundle from the [priors] table (all keys optional)."""
    section = dict(cfg.get("priors", {}))
    items = ItemPriorConfig(
        mean_log_discrimination=section.pop("mean_log_discrimination", 0.0),
        var_log_discrimination=section.pop("var_log_discrimination", 0.5),
        var_difficulty=section.pop("var_difficulty", 3.0),
        var_intercept=section.pop("var_intercept", 3.0),
        guessing_shape=(
            section.pop("guessing_a", 2.0),
            section.pop("guessing_b", 8.0),
        ),
    )
    hyper = NormalInverseGamma(
        mean_loc=section.pop("hyper_mean_loc", 0.0),
        mean_var=section.pop("hyper_mean_var", 3.0),
        shape=section.pop("hyper_shape", 2.01),
        scale=section.pop("hyper_scale", 1.01),
    )
    base = NormalInverseGamma(
        mean_loc=section.pop("base_mean_loc", 0.0),
        mean_var=section.pop("base_mean_var", 3.0),
        shape=section.pop("base_shape", 2.01),
        scale=section.pop("base_scale", 1.01),
    )
    concentration = ConcentrationPrior(
        fixed=section.pop("concentration_fixed", None),
        shape=section.pop("concentration_shape", 2.0),
        rate=section.pop("concentration_rate", 4.0),
    )
    if section:
        raise ValidationError(f"unknown prior keys: {sorted(section)}")
    return Priors(
        items=items,
        ability=AbilityPriorConfig(hyper=hyper, base_measure=base, concentration=concentration),
    )


@dataclass
class PipelineConfig:
    seed: int
    strategies: list[StrategyConfig]
    priors: Priors
    iterations: int
    burnin: int
    scenario: Scenario | None = None
    data_path: str | None = None
    density_points: int = 512
    measure_draws: int = 400
    debug: bool = False
    sweep: list[tuple[int, int]] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, cfg: dict, seed_override=None, desk_scale=False) -> "PipelineConfig":
        seed = seed_override if seed_override is not None else cfg.get("seed", 0)
        strategies = [StrategyConfig.from_dict(s) for s in cfg.get("strategy", [])]
        if not strategies:
            raise ValidationError("config declares no strategies")
        labels = [s.label for s in strategies]
        if len(set(labels)) != len(labels):
            raise ValidationError("duplicate strategies in config")
        mcmc = cfg.get("mcmc", {})
        iterations = mcmc.get("iterations", DESK_SCALE_ITERATIONS if desk_scale else DEFAULT_ITERATIONS)
        burnin = mcmc.get("burnin", DESK_SCALE_BURNIN if desk_scale else DEFAULT_BURNIN)
        if desk_scale:
            iterations, burnin = DESK_SCALE_ITERATIONS, DESK_SCALE_BURNIN
        scenario = None
        data_path = None
        if "data" in cfg:
            data_path = cfg["data"].get("path")
            if not data_path:
                raise ValidationError("[data] table needs a path")
        elif "scenario" in cfg:
            sc = cfg["scenario"]
            try:
                scenario = Scenario(
                    name=sc["name"],
                    n_individuals=int(sc["n_individuals"]),
                    n_items=int(sc["n_items"]),
                    seed=seed,
                )
            except KeyError as exc:
                raise ValidationError(f"[scenario] table lacks {exc}") from None
        else:
            raise ValidationError("config needs a [scenario] or [data] table")
        sweep = []
        if "sweep" in cfg:
            ns = cfg["sweep"].get("n_individuals", [])
            its = cfg["sweep"].get("n_items", [])
            if scenario is None:
                raise ValidationError("factorial sweeps need a [scenario] table")
            sweep = [(int(n), int(i)) for n in ns for i in its]
        out = cfg.get("output", {})
        return cls(
            seed=seed,
            strategies=strategies,
            priors=priors_from_config(cfg),
            iterations=int(iterations),
            burnin=int(burnin),
            scenario=scenario,
            data_path=data_path,
            density_points=int(out.get("density_points", 512)),
            measure_draws=int(out.get("measure_draws", 400)),
            debug=bool(cfg.get("mcmc", {}).get("debug", False)),
            sweep=sweep,
            raw=cfg,
        )


def write_density_csv(path, estimate, kde=None, true_pdf=None):
    cols = ["grid", "mean", "lower", "upper"]
    parts = [estimate.grid, estimate.mean, estimate.lower, estimate.upper]
    if kde is not None:
        cols.append("kde_point_estimates")
        parts.append(kde)
    if true_pdf is not None:
        cols.append("true_density")
        parts.append(true_pdf)
    body = np.column_stack(parts)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in body:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def write_percentiles_csv(path, est):
    with open(path, "w") as fh:
        fh.write("individual,mean,lower,upper\n")
        for j, (m, lo, hi) in enumerate(zip(est.mean, est.lower, est.upper), start=1):
            fh.write(f"{j},{m:.17g},{lo:.17g},{hi:.17g}\n")


def compute_percentiles(base: SampleArchive, seed: int, measure_draws: int = 400):
    """Percentile summaries from a base-parameterization archive."""
    _, eta = base.block("eta")
    if base.is_semiparametric:
        rng = substream(seed, "measure")
        n_draws = base.n_draws
        k = min(measure_draws, n_draws)
        idx = np.unique(np.linspace(0, n_draws - 1, k).astype(int))
        idx, measures = measure_samples_from_archive(base, rng, draw_indices=idx)
        return percentile_estimates(eta[idx], measures=measures)
    return percentile_estimates(
        eta, mu_draws=base.column("mu_eta"), var_draws=base.column("sigma2_eta")
    )


def strategy_report(
    base: SampleArchive, data: ResponseMatrix, truth: GroundTruth | None
) -> dict:
    """Metrics bundle for one fitted strategy (WAIC, errors, timings)."""
    w = waic_from_archive(base, data)
    report = {
        "label": base.meta.get("label"),
        "strategy": base.meta.get("strategy"),
        "waic": {"waic": w.waic, "lppd": w.lppd, "p_waic": w.p_waic},
        "timings": base.meta.get("timings"),
        "acceptance_rates": base.meta.get("acceptance_rates"),
    }
    if truth is not None:
        _, lam = base.block("lambda")
        _, beta = base.block("beta")
        _, eta = base.block("eta")
        errors = {}
        for group, est, tru in (
            ("difficulty", beta.mean(axis=0), truth.difficulty),
            ("discrimination", lam.mean(axis=0), truth.discrimination),
            ("ability", eta.mean(axis=0), truth.abilities),
        ):
            mae, mse = error_metrics(est, tru)
            errors[group] = {"mae": mae, "mse": mse}
        report["errors"] = errors
    return report


def run_strategy(
    data: ResponseMatrix,
    strategy: StrategyConfig,
    priors: Priors,
    iterations: int,
    burnin: int,
    seed: int,
    out_dir: Path,
    truth: GroundTruth | None = None,
    density_points: int = 512,
    measure_draws: int = 400,
    debug: bool = False,
) -> dict:
    """Fit, post-process, and summarize one strategy into ``out_dir``."""
    out_dir = Path(out_dir)
    archive = run_chain(
        data, strategy, priors, n_iterations=iterations, n_burnin=burnin, seed=seed, debug=debug
    )
    archive.save(out_dir)
    base = postprocess_archive(archive)
    base.save(out_dir / "base")
    grid_src = base.block("eta")[1].mean(axis=0)
    grid = np.linspace(grid_src.min() - 2.0, grid_src.max() + 2.0, density_points)
    estimate = density_estimate(base, grid)
    kde = posterior_mean_ability_kde(base, grid)
    true_pdf = scenario_density(truth.scenario, grid) if truth is not None else None
    write_density_csv(out_dir / "density.csv", estimate, kde=kde, true_pdf=true_pdf)
    write_percentiles_csv(
        out_dir / "percentiles.csv",
        compute_percentiles(base, seed=seed, measure_draws=measure_draws),
    )
    report = strategy_report(base, data, truth)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _run_single_bundle(config: PipelineConfig, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.scenario is not None:
        truth = simulate_truth(config.scenario)
        data = simulate_responses(truth, kind=config.strategies[0].kind, seed=config.seed)
        truth.to_csv(out_dir / "truth.csv")
        data.to_csv(out_dir / "data.csv")
    else:
        truth = None
        data = ResponseMatrix.from_csv(config.data_path)
        data.to_csv(out_dir / "data.csv")
    reports = {}
    for strategy in config.strategies:
        reports[strategy.label] = run_strategy(
            data,
            strategy,
            config.priors,
            config.iterations,
            config.burnin,
            config.seed,
            out_dir / strategy.label,
            truth=truth,
            density_points=config.density_points,
            measure_draws=config.measure_draws,
            debug=config.debug,
        )
    diagnostics = []
    for strategy in config.strategies:
        base = SampleArchive.load(out_dir / strategy.label / "base")
        selection = common_parameter_columns(base, max_abilities=ability_budget(base))
        diagnostics.append(efficiency_report(base, selection).to_dict())
    with open(out_dir / "diagnostics.json", "w") as fh:
        json.dump(diagnostics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "diagnostics.csv", "w") as fh:
        fh.write("label,mess,sampling_seconds,total_seconds,mess_per_sampling_second,mess_per_total_second\n")
        for entry in diagnostics:
            fh.write(
                "{label},{mess:.17g},{sampling_seconds:.17g},{total_seconds:.17g},"
                "{mess_per_sampling_second:.17g},{mess_per_total_second:.17g}\n".format(**entry)
            )
    bundle_report = {"strategies": reports, "diagnostics": diagnostics}
    with open(out_dir / "config.json", "w") as fh:
        json.dump(
            {
                "seed": config.seed,
                "iterations": config.iterations,
                "burnin": config.burnin,
                "strategies": [s.describe() for s in config.strategies],
                "scenario": None
                if config.scenario is None
                else {
                    "name": config.scenario.name,
                    "n_individuals": config.scenario.n_individuals,
                    "n_items": config.scenario.n_items,
                },
                "data_path": config.data_path,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return bundle_report


def ability_budget(archive: SampleArchive) -> int | None:
    """Cap the ability columns so the batch count stays above the dimension."""
    n_draws = archive.n_draws
    batches = n_draws // int(np.sqrt(n_draws))
    n_item_cols = len(archive.block("lambda")[0]) + len(archive.block("beta")[0])
    budget = batches - n_item_cols - 2
    n_eta = len(archive.block("eta")[0])
    if budget < n_eta:
        return max(budget, 0)
    return None


def run_pipeline(config: PipelineConfig, out_dir) -> dict:
    """Execute every stage for every strategy; factorial sweeps fan out."""
    out_dir = Path(out_dir)
    if not config.sweep:
        return _run_single_bundle(config, out_dir)
    results = {}
    for n, i in config.sweep:
        sub = PipelineConfig(
            seed=config.seed,
            strategies=config.strategies,
            priors=config.priors,
            iterations=config.iterations,
            burnin=config.burnin,
            scenario=Scenario(
                name=config.scenario.name, n_individuals=n, n_items=i, seed=config.seed
            ),
            density_points=config.density_points,
            measure_draws=config.measure_draws,
            debug=config.debug,
        )
        results[f"n{n}_i{i}"] = _run_single_bundle(sub, out_dir / f"n{n}_i{i}")
    return results
