"""Expected miner revenue per block slot at the largest feasible h, with n = ceil(lambda0 k).

    python3 scripts/revenue_k_scaling.py --lambda0 2.0 --ks 1 2 3
"""

import argparse
import math
from pathlib import Path

from tfm_lab.cli import atomic_write, table_csv
from tfm_lab.dists import uniform, variation_constant
from tfm_lab.hsearch import h_star_estimate, revenue_study
from tfm_lab.mech_core import MechanismParams
from tfm_lab.ssp_k import threshold_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambda0", type=float, default=2.0)
    ap.add_argument("--ks", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/revenue_k.csv")
    args = ap.parse_args()

    tc = threshold_constants(args.lambda0)
    dist = uniform()
    c = variation_constant(dist)
    print(f"lambda0={args.lambda0}  m={tc.m_sharp:.4f}  D={tc.D_value:.4f}  f={tc.f_value:.3e}")

    rows = []
    for k in args.ks:
        n = math.ceil(args.lambda0 * k)
        rep = h_star_estimate(MechanismParams(n=n, k=k, m=tc.m_sharp, c=c), dist, seed=args.seed,
                              revenue_samples=0)
        (row,) = revenue_study([{"n": n, "k": k, "h": rep.h_star, "c": c}], dist, args.samples, args.seed)
        rows.append(row)
        print(f"k={k}  n={n}  h*={rep.h_star:.5f}  E[r]={row['estimate']:.5f} +/- {row['se']:.1e}"
              f"  E[r]/k={row['ratio']:.5f}")
    atomic_write(Path(args.out), table_csv(["n", "k", "h", "c", "estimate", "se", "formula", "ratio"], rows))


if __name__ == "__main__":
    main()
