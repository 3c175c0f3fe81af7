"""Exact enumeration on a small binary population.

Prints, for every (N1, N0) cell, the exact variance of the difference in
means, its two decompositions and the closed-form components.
"""

import argparse

import numpy as np

from designreg import BinaryPotentialOutcomes, CompleteRandomization, FixedSizeSRS
from designreg.lab import enumerate_exact


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--y1", type=float, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--y0", type=float, nargs="+", default=[0, 0, 0, 2])
    ap.add_argument("--sample-size", type=int, default=2)
    ap.add_argument("--treated", type=int, default=2)
    args = ap.parse_args()

    pop = BinaryPotentialOutcomes(np.array(args.y1), np.array(args.y0))
    rep = enumerate_exact(pop, FixedSizeSRS(args.sample_size), CompleteRandomization(args.treated))
    print(f"population n={rep.n}, sample N={rep.N}, treated n1={rep.n1}, pairs enumerated={rep.pairs}")
    header = "N1  N0  prob    var(est)   E[V|x]+V(descr)   E[V|r]+V(causal,sample)   V_total"
    print(header)
    for c in rep.cells:
        if c.excluded:
            print(f"{c.N1:<3} {c.N0:<3} excluded (an empty arm)")
            continue
        print(
            f"{c.N1:<3} {c.N0:<3} {c.probability:<7.4f} {c.var_theta_hat:<10.6g} "
            f"{c.mean_var_given_x + c.var_theta_descr:<17.6g} "
            f"{c.mean_var_given_r + c.var_theta_causal_sample:<25.6g} {c.v_total:.6g}"
        )


if __name__ == "__main__":
    main()
