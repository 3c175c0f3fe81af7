"""Write a sample CSV and two population specs for trying the CLI."""

import argparse
import csv
from pathlib import Path

import numpy as np

from designreg import (
    BernoulliCauses,
    BernoulliSampling,
    BinaryPotentialOutcomes,
    CompleteRandomization,
    FinitePopulation,
    FixedSizeSRS,
    IndependentAssignment,
    LinearPotentialOutcomes,
)
from designreg.io import dumps, population_to_dict
from designreg.population import intercept_only


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default="example_inputs")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    n = 500
    w = rng.normal(size=n)
    z = np.column_stack([np.ones(n), w])
    treated = (rng.random(n) < 0.5 + 0.15 * np.tanh(w)).astype(int)
    y = 1.0 + 0.5 * w + (1.0 + w) * treated + rng.normal(size=n)
    with open(out / "sample.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "treated", "w"])
        writer.writerows(zip(np.round(y, 6), treated, np.round(w, 6)))

    sim = FinitePopulation(
        LinearPotentialOutcomes(1.0 + w, z @ [1.0, 0.5] + rng.normal(size=n)),
        z,
        BernoulliSampling(0.4),
        IndependentAssignment(BernoulliCauses(0.5 + 0.15 * np.tanh(w))),
    )
    (out / "simulate.json").write_text(dumps(population_to_dict(sim)))

    small = FinitePopulation(
        BinaryPotentialOutcomes(np.round(rng.normal(1, 1, 10), 3), np.round(rng.normal(0, 1, 10), 3)),
        intercept_only(10),
        FixedSizeSRS(6),
        CompleteRandomization(5),
    )
    (out / "enumerate.json").write_text(dumps(population_to_dict(small)))
    print(f"wrote sample.csv, simulate.json, enumerate.json to {out}/")


if __name__ == "__main__":
    main()
