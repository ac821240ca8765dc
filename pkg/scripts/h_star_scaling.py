"""Largest feasible perturbation scale across market sizes.

Writes two CSV tables: h* n / c for k = 1 (m = 1) over n, and h* n / (k c) at
n = 2k (m = m_#(2)) over k.

    python3 scripts/h_star_scaling.py --out results/h_star
"""

import argparse
from pathlib import Path

from tfm_lab.cli import atomic_write, table_csv
from tfm_lab.dists import ValuationDistribution, variation_constant
from tfm_lab.hsearch import h_star_estimate
from tfm_lab.mech_core import MechanismParams
from tfm_lab.ssp_k import m_sharp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[5, 10, 20, 40, 80])
    ap.add_argument("--ks", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--dist", default="uniform", choices=["uniform", "truncated-power"])
    ap.add_argument("--alpha", type=float, default=1.0, help="exponent for truncated-power")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=10_000)
    ap.add_argument("--out", default="results/h_star")
    args = ap.parse_args()

    dist = ValuationDistribution(args.dist, (args.alpha,) if args.dist == "truncated-power" else ())
    c = variation_constant(dist)
    out = Path(args.out)

    rows = []
    for n in args.ns:
        rep = h_star_estimate(MechanismParams(n=n, m=1.0, c=c), dist, seed=args.seed,
                              search_budget=args.budget, revenue_samples=50_000)
        rows.append({"n": n, "k": 1, "m": 1.0, "c": c, "h_star": rep.h_star, "scaled": rep.h_star * n / c,
                     "binding": rep.binding, "revenue": rep.revenue_at_h_star[0]})
        print(f"n={n:4d}  h*={rep.h_star:.6f}  h*n/c={rep.h_star * n / c:.4f}  ({rep.binding} binds)")
    atomic_write(out / "n_scaling.csv", table_csv(list(rows[0]), rows))

    ms = m_sharp(2.0)
    rows = []
    for k in args.ks:
        n = 2 * k
        rep = h_star_estimate(MechanismParams(n=n, k=k, m=ms, c=c), dist, seed=args.seed,
                              search_budget=args.budget, revenue_samples=50_000)
        scaled = rep.h_star * n / (k * c)
        rows.append({"n": n, "k": k, "m": ms, "c": c, "h_star": rep.h_star, "scaled": scaled,
                     "binding": rep.binding, "revenue": rep.revenue_at_h_star[0]})
        print(f"k={k}  n={n}  h*={rep.h_star:.6f}  h*n/(kc)={scaled:.4f}")
    atomic_write(out / "k_scaling.csv", table_csv(list(rows[0]), rows))


if __name__ == "__main__":
    main()
