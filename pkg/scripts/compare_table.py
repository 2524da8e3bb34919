"""Method comparison table (mean and std over runs) for a CSV dataset or synthetic data.

For a real dataset pass ``--data file.csv --schema schema.json`` where the
schema JSON names the feature, sensitive and target columns.
"""
import argparse
from pathlib import Path

from fairlin import SynthConfig
from fairlin.experiments import run_comparison, run_synthetic
from fairlin.io import Schema, load_csv, write_rows_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data")
    ap.add_argument("--schema")
    ap.add_argument("--T", type=float, nargs=4, default=(10, 2, 2, 0.7))
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/compare.csv")
    args = ap.parse_args()

    if args.data:
        schema = Schema.load(args.schema) if args.schema else Schema()
        res = run_comparison(load_csv(args.data, schema), eps_grid=args.eps, seed=args.seed, runs=args.runs)
    else:
        t_y, t_mean, t_std, t_corr = args.T
        cfg = SynthConfig(t_y=t_y, t_mean=t_mean, t_std=t_std, t_corr=t_corr, seed=args.seed)
        res = run_synthetic(cfg, eps_grid=args.eps, runs=args.runs)
    rows = res.aggregate()
    write_rows_csv(Path(args.out), rows)
    print(f"{'method':18s} {'GWR2':>16s} {'RMSE':>16s} {'KS':>16s}")
    for r in rows:
        name = r["method"] if r["method"] != "fair" else f"fair(eps={r['epsilon']:g})"
        cells = [f"{r[f + '_mean']:.3f} ± {r[f + '_std']:.3f}" for f in ("gwr2", "rmse", "ks_unfairness")]
        print(f"{name:18s} " + " ".join(f"{c:>16s}" for c in cells))


if __name__ == "__main__":
    main()
