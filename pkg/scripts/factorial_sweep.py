"""Factorial sensitivity sweep over dataset size.

Runs one scenario across the I x N factorial grid and collects the
efficiency table for the requested strategies. Desk-scale by default;
the grid of the full study (N in {1000, 5000}, I in {10, 30}) is the
--full preset.
"""

import argparse

from dpirt.pipeline import PipelineConfig, run_pipeline


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default="bimodal")
    parser.add_argument("--out", default="factorial_output")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--full", action="store_true")
    args = parser.parse_args()

    if args.full:
        ns, items, iterations, burnin = [1000, 5000], [10, 30], 50_000, 5_000
    else:
        ns, items, iterations, burnin = [200, 400], [5, 10], 4_000, 800

    cfg = PipelineConfig.from_dict(
        {
            "seed": args.seed,
            "scenario": {"name": args.scenario, "n_individuals": ns[0], "n_items": items[0]},
            "mcmc": {"iterations": iterations, "burnin": burnin},
            "sweep": {"n_individuals": ns, "n_items": items},
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
                    "constraint": "items",
                    "algorithm": "mh",
                    "ability_model": "parametric",
                },
            ],
        }
    )
    results = run_pipeline(cfg, args.out)
    print(f"{'cell':12s} {'strategy':42s} {'mESS/s(total)':>14s}")
    for cell, report in results.items():
        for diag in report["diagnostics"]:
            print(f"{cell:12s} {diag['label']:42s} {diag['mess_per_total_second']:14.2f}")
    print(f"bundles written under {args.out}/")


if __name__ == "__main__":
    main()
