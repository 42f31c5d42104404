"""Command-line interface.

Subcommands: simulate, fit, postprocess, density, percentiles, waic,
diagnose, prior-check, report, pipeline. Every subcommand accepts --seed
and --config. Exit codes: 0 success, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .archive import SampleArchive
from .diagnostics import common_parameter_columns, efficiency_report
from .errors import ValidationError
from .identify import postprocess_archive
from .inference import density_estimate, posterior_mean_ability_kde, waic_from_archive
from .model import ResponseMatrix
from .pipeline import (
    PipelineConfig,
    ability_budget,
    compute_percentiles,
    load_config,
    priors_from_config,
    run_pipeline,
    strategy_report,
    write_density_csv,
    write_percentiles_csv,
)
from .priors import Priors, simulate_prior_predictive
from .samplers import StrategyConfig, run_chain
from .scenarios import GroundTruth, Scenario, simulate_responses, simulate_truth


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="master seed for this command")
    parser.add_argument("--config", type=str, default=None, help="TOML config file")


def _priors(args) -> Priors:
    if args.config:
        return priors_from_config(load_config(args.config))
    return Priors()


def _cmd_simulate(args):
    scenario = Scenario(args.scenario, args.n_individuals, args.n_items, seed=args.seed)
    truth = simulate_truth(scenario)
    data = simulate_responses(truth, kind=args.kind, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth.to_csv(out / "truth.csv")
    data.to_csv(out / "data.csv")
    print(f"wrote {out / 'truth.csv'} and {out / 'data.csv'}")


def _strategy_from_args(args) -> StrategyConfig:
    return StrategyConfig.from_dict(
        {
            "kind": args.kind,
            "parameterization": args.parameterization,
            "constraint": args.constraint,
            "algorithm": args.algorithm,
            "ability_model": args.ability_model,
        }
    )


def _cmd_fit(args):
    data = ResponseMatrix.from_csv(args.data)
    archive = run_chain(
        data,
        _strategy_from_args(args),
        _priors(args),
        n_iterations=args.iterations,
        n_burnin=args.burnin,
        seed=args.seed,
        debug=args.debug,
    )
    archive.save(args.out)
    print(f"wrote archive to {args.out}")


def _cmd_postprocess(args):
    base = postprocess_archive(SampleArchive.load(args.archive))
    base.save(args.out)
    print(f"wrote base-parameterization archive to {args.out}")


def _require_base(archive: SampleArchive, what: str) -> SampleArchive:
    if archive.meta.get("parameterization") != "base":
        raise ValidationError(f"{what} expects a post-processed (base-parameterization) archive")
    return archive


def _cmd_density(args):
    archive = _require_base(SampleArchive.load(args.archive), "density")
    if args.grid_min is not None and args.grid_max is not None:
        grid = np.linspace(args.grid_min, args.grid_max, args.points)
    else:
        means = archive.block("eta")[1].mean(axis=0)
        grid = np.linspace(means.min() - 2.0, means.max() + 2.0, args.points)
    estimate = density_estimate(archive, grid)
    kde = posterior_mean_ability_kde(archive, grid)
    write_density_csv(args.out, estimate, kde=kde)
    print(f"wrote {args.out}")


def _cmd_percentiles(args):
    archive = _require_base(SampleArchive.load(args.archive), "percentiles")
    est = compute_percentiles(archive, seed=args.seed, measure_draws=args.measure_draws)
    write_percentiles_csv(args.out, est)
    print(f"wrote {args.out}")


def _cmd_waic(args):
    archive = SampleArchive.load(args.archive)
    if archive.meta.get("parameterization") not in ("base", "irt"):
        raise ValidationError("waic needs an IRT-form or post-processed archive")
    data = ResponseMatrix.from_csv(args.data)
    result = waic_from_archive(archive, data)
    payload = {"waic": result.waic, "lppd": result.lppd, "p_waic": result.p_waic}
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


def _cmd_diagnose(args):
    entries = []
    for directory in args.archives:
        archive = SampleArchive.load(directory)
        selection = common_parameter_columns(archive, max_abilities=ability_budget(archive))
        entries.append(efficiency_report(archive, selection).to_dict())
    Path(args.out).write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(
                "label,mess,sampling_seconds,total_seconds,"
                "mess_per_sampling_second,mess_per_total_second\n"
            )
            for entry in entries:
                fh.write(
                    "{label},{mess:.17g},{sampling_seconds:.17g},{total_seconds:.17g},"
                    "{mess_per_sampling_second:.17g},{mess_per_total_second:.17g}\n".format(**entry)
                )
    print(f"wrote {args.out}")


def _cmd_prior_check(args):
    priors = _priors(args)
    pi = simulate_prior_predictive(
        args.kind,
        priors.items,
        priors.ability,
        args.draws,
        args.seed,
        ability_model=args.ability_model,
        parameterization=args.parameterization,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "prior_predictive.csv", "w") as fh:
        fh.write("pi\n")
        for v in pi:
            fh.write(format(v, ".17g") + "\n")
    deciles = {f"q{int(q * 100)}": float(np.quantile(pi, q)) for q in np.arange(0.1, 0.91, 0.1)}
    summary = {
        "mean": float(pi.mean()),
        "variance": float(pi.var()),
        "deciles": deciles,
        "reference": {"distribution": "Beta(0.5, 0.5)", "mean": 0.5, "variance": 0.125},
        "n_draws": int(args.draws),
    }
    (out / "prior_predictive.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'prior_predictive.csv'} and {out / 'prior_predictive.json'}")


def _cmd_report(args):
    bundle = Path(args.bundle)
    data = ResponseMatrix.from_csv(bundle / "data.csv")
    truth_path = bundle / "truth.csv"
    truth = GroundTruth.from_csv(truth_path) if truth_path.exists() else None
    reports = {}
    for sub in sorted(bundle.iterdir()):
        if (sub / "base" / "samples.csv").exists():
            base = SampleArchive.load(sub / "base")
            reports[sub.name] = strategy_report(base, data, truth)
    if not reports:
        raise ValidationError(f"{bundle} holds no fitted strategies")
    Path(args.out).write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


def _cmd_pipeline(args):
    if not args.config:
        raise ValidationError("pipeline requires --config")
    cfg = PipelineConfig.from_dict(
        load_config(args.config),
        seed_override=args.seed if args.seed_given else None,
        desk_scale=args.desk_scale,
    )
    run_pipeline(cfg, args.out)
    print(f"wrote bundle to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpirt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scenario dataset")
    p.add_argument("--scenario", required=True, choices=("unimodal", "bimodal", "multimodal"))
    p.add_argument("--n-individuals", type=int, required=True)
    p.add_argument("--n-items", type=int, required=True)
    p.add_argument("--kind", default="2pl", choices=("1pl", "2pl"))
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="run one MCMC strategy on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", default="2pl", choices=("1pl", "2pl", "3pl"))
    p.add_argument("--parameterization", default="irt", choices=("irt", "si"))
    p.add_argument("--constraint", default="none", choices=("none", "items", "abilities"))
    p.add_argument("--algorithm", default="mh", choices=("mh", "centered"))
    p.add_argument("--ability-model", default="parametric", choices=("parametric", "semiparametric"))
    p.add_argument("--iterations", type=int, default=50_000)
    p.add_argument("--burnin", type=int, default=5_000)
    p.add_argument("--debug", action="store_true", help="validate CRP invariants every sweep")
    _add_common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("postprocess", help="rescale an archive to the base parameterization")
    p.add_argument("--archive", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("density", help="latent-density estimate from a base archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--grid-min", type=float, default=None)
    p.add_argument("--grid-max", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("percentiles", help="per-individual percentile estimates")
    p.add_argument("--archive", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--measure-draws", type=int, default=400)
    _add_common(p)
    p.set_defaults(func=_cmd_percentiles)

    p = sub.add_parser("waic", help="WAIC of an archive against its data")
    p.add_argument("--archive", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_waic)

    p = sub.add_parser("diagnose", help="efficiency reports for one or more archives")
    p.add_argument("--archives", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("prior-check", help="prior-predictive sample of pi with summary")
    p.add_argument("--out", required=True)
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--kind", default="2pl", choices=("1pl", "2pl", "3pl"))
    p.add_argument("--ability-model", default="parametric", choices=("parametric", "semiparametric"))
    p.add_argument("--parameterization", default="irt", choices=("irt", "si"))
    _add_common(p)
    p.set_defaults(func=_cmd_prior_check)

    p = sub.add_parser("report", help="metrics bundle for a fitted pipeline bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("pipeline", help="full experiment pipeline from a config file")
    p.add_argument("--out", required=True)
    p.add_argument("--desk-scale", action="store_true", help="10k iterations / 1k burn-in preset")
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report runtime failures as exit 3
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
