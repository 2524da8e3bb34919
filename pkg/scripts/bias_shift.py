"""KS unfairness of every method while one bias knob is swept (others held at base_T)."""
import argparse
from pathlib import Path

from fairlin.experiments import run_bias_shift
from fairlin.io import write_rows_csv

VALUES = {
    "t_y": [0, 2, 4, 8, 10],
    "t_mean": [0, 1, 2, 3, 4],
    "t_std": [0, 1, 2, 3, 4],
    "t_corr": [0, 0.25, 0.5, 0.75, 1],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--knobs", nargs="+", default=list(VALUES), choices=list(VALUES))
    ap.add_argument("--base-T", type=float, nargs=4, default=(10, 2, 2, 0.7))
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/bias_shift.csv")
    args = ap.parse_args()

    rows = []
    for knob in args.knobs:
        res = run_bias_shift(knob, VALUES[knob], base_T=tuple(args.base_T), n=args.n, runs=args.runs,
                             seed=args.seed)
        agg = res.aggregate()
        rows.extend(agg)
        for method in ("base", "unaware", "cs22", "fs23", "fair"):
            ks = [r["ks_unfairness_mean"] for r in agg if r["method"] == method]
            print(f"{knob:7s} {method:8s} " + " ".join(f"{v:.3f}" for v in ks))
    write_rows_csv(Path(args.out), rows)


if __name__ == "__main__":
    main()
