"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .base_model import BaseLinearModel, fit_ols, predict
from .errors import DataError, FairlinError
from .experiments import (
    DEFAULT_SPLIT,
    KNOBS,
    METRIC_FIELDS,
    coefficient_shift_report,
    config_hash,
    dataset_digest,
    run_comparison,
    run_synthetic,
)
from .fair_predictor import FairPredictor, build_fair_predictor, fair_predict, group_coefficients
from .group_stats import estimate_group_stats
from .io import (
    AuditDocument,
    Schema,
    read_csv,
    read_json,
    write_dataset_csv,
    write_json,
    write_rows_csv,
)
from .metrics import equality_conditions_check, evaluate, gap_identity_check
from .synth import GENERATOR_VERSION, SynthConfig, generate
from .unfairness import feature_decomposition, unfairness_gaussian

ROW_COLUMNS = ("config_hash", "knob", "knob_value", "run", "seed", "method", "epsilon") + METRIC_FIELDS


def parse_eps_grid(text: str) -> list[float]:
    """``start:end:count`` inclusive at both ends, or a comma-separated list."""
    if ":" in text:
        try:
            start, end, count = text.split(":")
            start, end, count = float(start), float(end), int(count)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected start:end:count") from None
        if count < 1:
            raise argparse.ArgumentTypeError("grid count must be >= 1")
        if count == 1:
            return [start]
        return [start + (end - start) * i / (count - 1) for i in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None


def _split(text: str):
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad split {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("split needs three fractions")
    return parts


def _load(args):
    schema = Schema.load(args.schema) if getattr(args, "schema", None) else Schema()
    try:
        data, dropped = read_csv(args.data, schema, getattr(args, "drop_bad_rows", False))
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {exc.filename}") from None
    if dropped:
        print(f"dropped {dropped} bad rows", file=sys.stderr)
    return data, schema, dropped


def _read_doc(path):
    try:
        return read_json(path)
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {exc.filename}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def _base_from_doc(doc) -> BaseLinearModel:
    if doc.get("kind") != "base_model":
        raise DataError("expected a model file written by `fit`")
    return BaseLinearModel.from_dict(doc["model"])


def _check_features(doc, data):
    names = doc.get("feature_names")
    if names is not None and list(names) != list(data.feature_names):
        raise DataError(f"model features {names} do not match data columns {list(data.feature_names)}")


def cmd_gen(args):
    cfg = SynthConfig(d=args.d, n=args.n, tau=args.tau, t_y=args.ty, t_mean=args.tmean,
                      t_std=args.tstd, t_corr=args.tcorr, noise_std=args.noise, seed=args.seed)
    data, truth = generate(cfg)
    out = Path(args.out)
    h = config_hash(cfg.to_dict())
    write_dataset_csv(out / "data.csv", data)
    write_json(out / "ground_truth.json",
               {"kind": "ground_truth", "tool_version": __version__, "config_hash": h, **truth.to_dict()})
    write_json(out / "schema.json", {**Schema(list(data.feature_names)).to_dict(),
                                     "tool_version": __version__, "config_hash": h})
    return 0


def cmd_fit(args):
    data, schema, _ = _load(args)
    model = fit_ols(data, aware=args.aware, ridge=args.ridge)
    h = config_hash({"data": dataset_digest(data), "aware": args.aware, "ridge": args.ridge})
    write_json(args.out, {
        "kind": "base_model", "tool_version": __version__, "config_hash": h,
        "feature_names": list(data.feature_names), "schema": schema.to_dict(),
        "ridge": args.ridge, "model": model.to_dict(),
    })
    return 0


def cmd_audit(args):
    data, _, _ = _load(args)
    mdoc = _read_doc(args.model)
    model = _base_from_doc(mdoc)
    _check_features(mdoc, data)
    stats = estimate_group_stats(data, reg=args.reg)
    fit = evaluate(predict(model, data.X, data.S), data)
    doc = AuditDocument(
        model=model,
        feature_names=data.feature_names,
        group_stats=stats,
        fit=fit,
        unfairness=unfairness_gaussian(model, stats),
        features=feature_decomposition(model, stats, data.feature_names),
        equality=equality_conditions_check(model, stats, data, args.assoc_threshold,
                                           args.discrepancy_threshold),
        gap=gap_identity_check(fit),
        config_hash=config_hash({"data": dataset_digest(data), "model": mdoc["config_hash"],
                                 "reg": args.reg}),
    )
    write_json(args.out, doc.to_dict())
    if args.plot_data:
        plot = Path(args.plot_data)
        u = doc.unfairness
        write_rows_csv(plot / "decomposition.csv", [
            {"term": k, "value": getattr(u, k)}
            for k in ("direct_mean", "indirect_mean", "interaction", "indirect_structural",
                      "fmd", "smd", "total")
        ])
        write_rows_csv(plot / "feature_contributions.csv", doc.features.rows())
        fp = build_fair_predictor(model, stats, args.eps)
        write_rows_csv(plot / "coefficient_shift.csv",
                       coefficient_shift_report(model, fp, data.feature_names),
                       ["term", "group", "base", "fair", "delta", "scale"])
    return 0


def cmd_repair(args):
    data, _, _ = _load(args)
    mdoc = _read_doc(args.model)
    model = _base_from_doc(mdoc)
    _check_features(mdoc, data)
    stats = estimate_group_stats(data, reg=args.reg)
    fp = build_fair_predictor(model, stats, args.eps)
    coeffs = None if (fp.all_degenerate and fp.sqrt_eps < 1.0) else group_coefficients(fp).to_dict()
    write_json(args.out, {
        "kind": "fair_predictor", "tool_version": __version__,
        "config_hash": config_hash({"data": dataset_digest(data), "model": mdoc["config_hash"],
                                    "eps": args.eps, "reg": args.reg}),
        "feature_names": list(data.feature_names),
        "predictor": fp.to_dict(),
        "coefficients": coeffs,
    })
    return 0


def cmd_score(args):
    data, _, _ = _load(args)
    doc = _read_doc(args.model)
    _check_features(doc, data)
    if doc.get("kind") == "fair_predictor":
        fp = FairPredictor.from_dict(doc["predictor"])
        if tuple(fp.stats.labels) != tuple(data.labels):
            raise DataError(f"group labels {data.labels} differ from predictor's {fp.stats.labels}")
        pred = fair_predict(fp, data.X, data.S)
    else:
        pred = predict(_base_from_doc(doc), data.X, data.S)
    rows = [{"row": i, "group": data.labels[s - 1], "prediction": float(v)}
            for i, (s, v) in enumerate(zip(data.S.tolist(), np.atleast_1d(pred)))]
    write_rows_csv(args.out, rows, ["row", "group", "prediction"])
    return 0


def _synth_config(path, overrides) -> SynthConfig:
    doc = _read_doc(path)
    cfg = doc.get("config", doc)
    known = {f.name for f in fields(SynthConfig)}
    cfg = {k: v for k, v in cfg.items() if k in known}
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return SynthConfig(**cfg)


def _write_sweep(out: Path, result, extra_name=None):
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(out / "rows.csv", result.rows, ROW_COLUMNS)
    summary = result.aggregate()
    cols = ["knob", "knob_value", "method", "epsilon", "runs"]
    cols += [f"{f}_{s}" for f in METRIC_FIELDS for s in ("mean", "std")]
    write_rows_csv(out / (extra_name or "summary.csv"), summary, cols)
    write_json(out / "sweep.json", {"kind": "sweep", **result.meta, "rows": result.rows,
                                    "summary": summary})
    return summary


def cmd_sweep(args):
    if args.synth_config:
        cfg = _synth_config(args.synth_config, {"seed": args.seed, "n": args.n})
        result = run_synthetic(cfg, args.split, args.eps_grid, args.runs, args.knob,
                               args.values, freeze_population=not args.no_freeze_population)
    else:
        if args.knob:
            raise DataError("--knob needs --synth-config")
        data, _, _ = _load(args)
        result = run_comparison(data, args.split, args.eps_grid, args.seed or 0, args.runs)
    _write_sweep(Path(args.out), result)
    return 0


def cmd_compare(args):
    if args.synth_config:
        cfg = _synth_config(args.synth_config, {"seed": args.seed, "n": args.n})
        result = run_synthetic(cfg, args.split, [args.eps], args.runs)
    else:
        data, _, _ = _load(args)
        result = run_comparison(data, args.split, [args.eps], args.seed or 0, args.runs)
    out = Path(args.out)
    summary = _write_sweep(out, result)
    table = []
    for row in summary:
        entry = {"method": row["method"] if row["method"] != "fair" else f"fair(eps={row['epsilon']})"}
        for f in ("gwr2", "rmse", "ks_unfairness", "gaussian_unfairness"):
            m, s = row[f + "_mean"], row[f + "_std"]
            entry[f] = f"{m:.3g} ± {s:.2g}"
            entry[f + "_mean"], entry[f + "_std"] = m, s
        table.append(entry)
    write_rows_csv(out / "table.csv", table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fairlin", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fairlin {__version__}")
    ap.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-errors", action="store_true", default=argparse.SUPPRESS)

    def data_args(p, required=True):
        p.add_argument("--data", required=required, help="input CSV")
        p.add_argument("--schema", help="JSON with features / sensitive / target column names")
        p.add_argument("--drop-bad-rows", action="store_true")

    p = sub.add_parser("gen", parents=[common], help="write a synthetic dataset and its ground truth")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--ty", type=float, default=0.0)
    p.add_argument("--tmean", type=float, default=0.0)
    p.add_argument("--tstd", type=float, default=0.0)
    p.add_argument("--tcorr", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=0.6)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", parents=[common], help="fit the base linear model")
    data_args(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--aware", dest="aware", action="store_true", default=True)
    g.add_argument("--unaware", dest="aware", action="store_false")
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("audit", parents=[common], help="decompose the unfairness of a fitted model")
    data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data", help="directory for decomposition / coefficient-shift CSVs")
    p.add_argument("--eps", type=float, default=0.0, help="epsilon of the coefficient-shift report")
    p.add_argument("--reg", type=float, default=0.0)
    p.add_argument("--assoc-threshold", type=float, default=2.0)
    p.add_argument("--discrepancy-threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("repair", parents=[common], help="build the epsilon-fair predictor")
    data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--reg", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("score", parents=[common], help="predict with a base or fair model file")
    data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    for name, func, helptext in (("sweep", cmd_sweep, "epsilon / bias-shift sweep"),
                                 ("compare", cmd_compare, "method comparison table")):
        p = sub.add_parser(name, help=helptext, parents=[common])
        data_args(p, required=False)
        p.add_argument("--synth-config", help="SynthConfig JSON or a ground_truth.json from `gen`")
        p.add_argument("--n", type=int, help="override synthetic sample count")
        p.add_argument("--runs", type=int, default=50)
        p.add_argument("--seed", type=int)
        p.add_argument("--split", type=_split, default=DEFAULT_SPLIT)
        p.add_argument("--out", required=True)
        if name == "sweep":
            p.add_argument("--eps-grid", type=parse_eps_grid, default=parse_eps_grid("0:1:11"))
            p.add_argument("--knob", choices=KNOBS)
            p.add_argument("--values", type=parse_eps_grid)
            p.add_argument("--no-freeze-population", action="store_true")
        else:
            p.add_argument("--eps", type=float, default=0.0)
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) in ("sweep", "compare"):
        if bool(args.data) == bool(args.synth_config):
            print("fairlin: error: give exactly one of --data and --synth-config", file=sys.stderr)
            return 2
        if getattr(args, "knob", None) and not args.values:
            print("fairlin: error: --knob needs --values", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except FairlinError as exc:
        return _fail(args, exc.to_dict(), exc.exit_code)
    except (ValueError, OSError) as exc:
        return _fail(args, {"error": type(exc).__name__, "message": str(exc)}, 3)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(args, {"error": type(exc).__name__, "message": str(exc)}, 4)


def _fail(args, payload, code):
    if args.json_errors:
        print(json.dumps({**payload, "exit_code": code}), file=sys.stderr)
    else:
        print(f"fairlin: {payload['error']}: {payload['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
