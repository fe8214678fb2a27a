"""Recovery versus sample size: m0=1, 20 restarts, theta=10, p_geom=0.5."""

import argparse
import csv
from pathlib import Path

from monodnf.anneal import AnnealConfig
from monodnf.data import SimSpec
from monodnf.evaluation import recovery_experiment
from monodnf.posterior import PriorConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 250, 500])
    ap.add_argument("--datasets", type=int, default=10)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--restarts", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/recovery_by_size.csv"))
    args = ap.parse_args()

    prior = PriorConfig(theta=10.0, p_geom=0.5)
    acfg = AnnealConfig(steps=args.steps, m0=1, restarts=args.restarts)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "pi0", "pi1", "m", "sum_k", "term1", "term2", "both"])
        for n in args.sizes:
            spec = SimSpec(n, 100, (2, 2), 0.1, 0.9, seed=args.seed + n)
            rep = recovery_experiment(spec, prior, acfg, args.datasets, seed=args.seed + n, jobs=args.jobs)
            ex = rep.term_rates()
            row = [n, round(rep.mean("pi0"), 2), round(rep.mean("pi1"), 2), round(rep.mean("m"), 1),
                   round(rep.mean("sum_k"), 1), ex[0], ex[1], rep.all_recovered()]
            w.writerow(row)
            print(*row, sep="\t")


if __name__ == "__main__":
    main()
