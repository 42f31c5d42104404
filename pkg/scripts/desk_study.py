"""Desk-scale replication of the simulation study.

Fits the parametric and semiparametric 2PL to a unimodal and a bimodal
scenario, then prints the recovery/WAIC/efficiency comparison tables.
Full-scale settings (N=2000, I=15, 50k iterations) are a --full flag away
but take hours; the desk preset finishes in minutes.
"""

import argparse
from pathlib import Path

from dpirt.pipeline import PipelineConfig, run_pipeline


def build_config(scenario: str, n: int, i: int, iterations: int, burnin: int, seed: int) -> dict:
    return {
        "seed": seed,
        "scenario": {"name": scenario, "n_individuals": n, "n_items": i},
        "mcmc": {"iterations": iterations, "burnin": burnin},
        "strategy": [
            {
                "kind": "2pl",
                "parameterization": "irt",
                "constraint": "none",
                "algorithm": "mh",
                "ability_model": "parametric",
            },
            {
                "kind": "2pl",
                "parameterization": "irt",
                "constraint": "none",
                "algorithm": "mh",
                "ability_model": "semiparametric",
            },
        ],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="desk_study_output")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--full", action="store_true", help="paper-scale settings (slow)")
    args = parser.parse_args()

    n, i = (2000, 15) if args.full else (500, 10)
    iterations, burnin = (50_000, 5_000) if args.full else (10_000, 1_000)

    for scenario in ("unimodal", "bimodal"):
        out = Path(args.out) / scenario
        cfg = PipelineConfig.from_dict(
            build_config(scenario, n, i, iterations, burnin, args.seed)
        )
        report = run_pipeline(cfg, out)
        print(f"== {scenario} (N={n}, I={i}) ==")
        for label, entry in report["strategies"].items():
            err = entry["errors"]
            print(
                f"  {label:45s} WAIC {entry['waic']['waic']:10.1f}"
                f"  MAE(beta) {err['difficulty']['mae']:.4f}"
                f"  MAE(lambda) {err['discrimination']['mae']:.4f}"
                f"  MAE(eta) {err['ability']['mae']:.4f}"
            )
        for diag in report["diagnostics"]:
            print(
                f"  {diag['label']:45s} mESS {diag['mess']:8.0f}"
                f"  per total second {diag['mess_per_total_second']:8.2f}"
            )
    print(f"bundles written under {args.out}/")


if __name__ == "__main__":
    main()
