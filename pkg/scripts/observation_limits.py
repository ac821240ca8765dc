"""Temperature limits of the logit rule: second price as m grows, free uniform lottery as m shrinks.

    python3 scripts/observation_limits.py
"""

import argparse
from pathlib import Path

import numpy as np

from tfm_lab.cli import atomic_write, table_csv
from tfm_lab.ssp_k1 import alloc_k1, pay_k1_all


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bids", type=float, nargs="+", default=[0.9, 0.7, 0.4])
    ap.add_argument("--out", default="results/limits.csv")
    args = ap.parse_args()

    b = np.asarray(args.bids)
    order = np.argsort(-b)
    top, second = order[0], b[order[1]]
    rows = []
    for m in np.logspace(-6, 3, 19):
        a = alloc_k1(b, m)
        p = pay_k1_all(b, m)
        rows.append({"m": m, "top_allocation": a[top], "top_payment": p[top],
                     "gap_to_second_bid": abs(p[top] - second), "max_payment": np.abs(p).max(),
                     "max_gap_to_uniform": np.abs(a - 1 / b.size).max()})
        print(f"m={m:9.3g}  a_top={a[top]:.6f}  p_top={p[top]:.6f}  |p_top - b_(2)|={abs(p[top] - second):.2e}")
    atomic_write(Path(args.out), table_csv(list(rows[0]), rows))


if __name__ == "__main__":
    main()
