"""Benchmark protocol: method comparisons, epsilon frontiers and bias-shift sweeps.

Each run splits the data into train / test / unlabeled parts. Models are fit
on train, group statistics for every post-processing method come from the
unlabeled part (features and S only), and all metrics are measured on test.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .base_model import fit_groupwise, fit_ols, predict
from .errors import SplitTooSmall
from .fair_predictor import (
    build_fair_predictor,
    fair_predict,
    fs23_coefficients,
    group_coefficients,
    predict_cs22,
    predict_fs23,
)
from .group_stats import Dataset, estimate_group_stats
from .metrics import evaluate
from .synth import GENERATOR_VERSION, SynthConfig, generate
from .unfairness import groupwise_unfairness, split_by_group, unfairness_gaussian, unfairness_ks

METHODS = ("base", "unaware", "cs22", "fs23", "fair")
KNOBS = ("t_y", "t_mean", "t_std", "t_corr")
METRIC_FIELDS = (
    "mse", "rmse", "gwr2", "r2_global", "ks_unfairness", "gaussian_unfairness", "fmd", "smd",
    "direct_mean", "indirect_mean", "interaction", "indirect_structural",
)
DEFAULT_SPLIT = (0.5, 0.25, 0.25)


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer, np.floating)):
        return o.item()
    raise TypeError(type(o))


def dataset_digest(data: Dataset) -> str:
    h = hashlib.sha256()
    for a in (data.X, data.S, data.Y):
        h.update(np.ascontiguousarray(a).tobytes())
    h.update(repr((data.labels, data.feature_names)).encode())
    return h.hexdigest()[:16]


def max_workers() -> int:
    """Worker cap from FAIRLIN_THREADS (0 or unset means one per CPU)."""
    try:
        n = int(os.environ.get("FAIRLIN_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def extend(self, rows):
        self.rows.extend(rows)

    def aggregate(self, keys=("knob", "knob_value", "method", "epsilon")) -> list[dict]:
        """Mean and std over runs of every metric, per key combination.

        Sums use ``math.fsum`` so the result does not depend on run order.
        """
        groups: dict = {}
        for row in self.rows:
            groups.setdefault(tuple(row[k] for k in keys), []).append(row)
        out = []
        for key in sorted(groups, key=_sort_key):
            rows = groups[key]
            agg = dict(zip(keys, key))
            agg["runs"] = len(rows)
            for f in METRIC_FIELDS:
                vals = [r[f] for r in rows if r[f] is not None]
                if not vals:
                    agg[f + "_mean"] = agg[f + "_std"] = None
                    continue
                mean = math.fsum(vals) / len(vals)
                ddof = 1 if len(vals) > 1 else 0
                var = math.fsum((v - mean) ** 2 for v in vals) / max(len(vals) - ddof, 1)
                agg[f + "_mean"], agg[f + "_std"] = mean, math.sqrt(var)
            out.append(agg)
        return out

    def select(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]


def _sort_key(key):
    def part(v):
        if v is None:
            return (0, 0.0, "")
        if isinstance(v, str):
            return (1, float(METHODS.index(v)) if v in METHODS else 0.0, v)
        return (2, float(v), "")
    return tuple(part(v) for v in key)


def split_indices(n: int, split=DEFAULT_SPLIT, seed: int = 0):
    split = tuple(float(f) for f in split)
    if len(split) != 3 or min(split) <= 0 or abs(sum(split) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must be three positive numbers summing to 1, got {split}")
    perm = np.random.Generator(np.random.Philox(seed)).permutation(n)
    n_train = int(round(split[0] * n))
    n_test = int(round(split[1] * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_test]), np.sort(perm[n_train + n_test:])


def _check_split(data: Dataset, idx, name: str):
    counts = np.bincount(data.S[idx], minlength=data.M + 1)[1:]
    if counts.min() < 2:
        k = int(np.argmin(counts)) + 1
        raise SplitTooSmall(f"{name} split has {counts.min()} rows of group {k}; need >= 2")


def _row(method, eps, test, pred, slopes, intercepts, stats, terms=None):
    fit = evaluate(pred, test)
    fmd, smd = groupwise_unfairness(slopes, intercepts, stats)
    row = {
        "method": method,
        "epsilon": eps,
        "mse": fit.mse,
        "rmse": math.sqrt(fit.mse),
        "gwr2": fit.gwr2,
        "r2_global": fit.r2_global,
        "ks_unfairness": unfairness_ks(split_by_group(pred, test.S, test.M)),
        "gaussian_unfairness": fmd + smd,
        "fmd": fmd,
        "smd": smd,
    }
    for k in ("direct_mean", "indirect_mean", "interaction", "indirect_structural"):
        row[k] = None if terms is None else terms[k]
    return row


def compare_once(data: Dataset, split=DEFAULT_SPLIT, eps_grid=(0.0,), seed: int = 0) -> list[dict]:
    """Fit, post-process and evaluate every method on one random split."""
    tr, te, un = split_indices(data.n, split, seed)
    for idx, name in ((tr, "train"), (te, "test"), (un, "unlabeled")):
        _check_split(data, idx, name)
    train, test, unlabeled = data.subset(tr), data.subset(te), data.subset(un)
    stats = estimate_group_stats(unlabeled)
    codes = stats.codes

    base = fit_ols(train, aware=True)
    unaware = fit_ols(train, aware=False)
    cs22 = fit_groupwise(train, shared_slope=True)
    fs23 = fit_groupwise(train, shared_slope=False)

    rows = []
    base_terms = unfairness_gaussian(base, stats).to_dict()
    for name, model in (("base", base), ("unaware", unaware)):
        terms = base_terms if name == "base" else unfairness_gaussian(model, stats).to_dict()
        rows.append(_row(name, None, test, predict(model, test.X, test.S),
                         np.tile(model.beta, (stats.M, 1)), model.gamma * codes + model.beta0,
                         stats, terms))

    cs_int = stats.p @ cs22.intercept_per_group
    rows.append(_row("cs22", None, test, predict_cs22(cs22, stats.p, test.X),
                     cs22.beta_per_group, np.full(stats.M, cs_int), stats))
    fs_slopes, fs_int = fs23_coefficients(fs23, stats)
    rows.append(_row("fs23", None, test, predict_fs23(fs23, stats, test.X, test.S),
                     fs_slopes, fs_int, stats))

    for eps in eps_grid:
        fp = build_fair_predictor(base, stats, eps)
        gc = group_coefficients(fp)
        # group means and stds of the fair score scale by sqrt(eps), so every
        # variance term of the base decomposition scales by eps
        terms = {k: eps * v for k, v in base_terms.items()}
        rows.append(_row("fair", float(eps), test, fair_predict(fp, test.X, test.S),
                         gc.beta_eps, gc.intercept_eps, stats, terms))
    return rows


def _run_seed(seed: int, *parts) -> int:
    return int(np.random.SeedSequence([seed, *parts]).generate_state(1, dtype=np.uint64)[0])


def _parallel(fn, items):
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_comparison(data: Dataset, split=DEFAULT_SPLIT, eps_grid=(0.0, 1.0), seed: int = 0,
                   runs: int = 50) -> SweepResult:
    """Repeat ``compare_once`` over ``runs`` random splits of a fixed dataset."""
    eps_grid = [float(e) for e in eps_grid]
    if any(not 0.0 <= e <= 1.0 for e in eps_grid):
        raise ValueError("eps_grid values must lie in [0, 1]")
    cfg = {"source": dataset_digest(data), "split": list(split), "eps_grid": eps_grid,
           "seed": seed, "runs": runs}
    h = config_hash(cfg)

    def one(r):
        s = _run_seed(seed, r)
        rows = compare_once(data, split, eps_grid, s)
        for row in rows:
            row.update(config_hash=h, run=r, seed=s, knob=None, knob_value=None)
        return rows

    result = SweepResult(meta={"tool_version": __version__, "config_hash": h,
                               "generator": GENERATOR_VERSION, **cfg})
    for rows in _parallel(one, list(range(runs))):
        result.extend(rows)
    return result


def run_synthetic(cfg: SynthConfig, split=DEFAULT_SPLIT, eps_grid=(0.0, 1.0), runs: int = 50,
                  knob=None, knob_values=None, freeze_population: bool = True) -> SweepResult:
    """Regenerate synthetic data per run (and per knob value) and compare methods.

    With ``freeze_population`` the generator seed depends only on the run, so
    every knob value shares the same population parameters and base draws.
    """
    eps_grid = [float(e) for e in eps_grid]
    if knob is not None and knob not in KNOBS:
        raise ValueError(f"knob must be one of {KNOBS}")
    values = [None] if knob is None else [float(v) for v in knob_values]
    meta_cfg = {"synth": cfg.to_dict(), "split": list(split), "eps_grid": eps_grid, "runs": runs,
                "knob": knob, "values": values, "freeze_population": freeze_population}
    h = config_hash(meta_cfg)
    cells = [(r, i) for r in range(runs) for i in range(len(values))]

    def one(cell):
        r, i = cell
        gen_seed = _run_seed(cfg.seed, r) if freeze_population else _run_seed(cfg.seed, r, i)
        c = replace(cfg, seed=gen_seed) if knob is None else replace(cfg, seed=gen_seed, **{knob: values[i]})
        data, _ = generate(c)
        split_seed = _run_seed(cfg.seed, r, i, 1)
        rows = compare_once(data, split, eps_grid, split_seed)
        cell_hash = config_hash({"parent": h, "synth": c.to_dict(), "split_seed": split_seed})
        for row in rows:
            row.update(config_hash=cell_hash, run=r, seed=gen_seed, knob=knob, knob_value=values[i])
        return rows

    result = SweepResult(meta={"tool_version": __version__, "config_hash": h,
                               "generator": GENERATOR_VERSION, **meta_cfg})
    for rows in _parallel(one, cells):
        result.extend(rows)
    return result


def run_bias_shift(knob: str, values, base_T=(0.0, 0.0, 0.0, 0.0), n: int = 20000, runs: int = 50,
                   seed: int = 0, d: int = 5, tau: float = 0.6, noise_std: float = 0.0,
                   split=DEFAULT_SPLIT, eps_grid=(0.0,), freeze_population: bool = True) -> SweepResult:
    t_y, t_mean, t_std, t_corr = base_T
    cfg = SynthConfig(d=d, n=n, tau=tau, t_y=t_y, t_mean=t_mean, t_std=t_std, t_corr=t_corr,
                      noise_std=noise_std, seed=seed)
    for v in values:
        replace(cfg, **{knob: float(v)})  # validates the knob domain
    return run_synthetic(cfg, split, eps_grid, runs, knob, values, freeze_population)


def coefficient_shift_report(base, fp, feature_names=None) -> list[dict]:
    """Base versus fair coefficients, per feature and group.

    The base model has one intercept and a coefficient on S; the fair model
    has no S term and one slope vector and intercept per group.
    """
    gc = group_coefficients(fp)
    st = fp.stats
    names = list(feature_names or [f"x{j + 1}" for j in range(base.d)])
    scale = (fp.sigma_eps / fp.moments.sigma_f).tolist() if not fp.all_degenerate else [1.0] * st.M
    rows = []
    for k in range(st.M):
        g = st.labels[k]
        for j, name in enumerate(names):
            b, f = float(base.beta[j]), float(gc.beta_eps[k, j])
            rows.append({"term": name, "group": g, "base": b, "fair": f, "delta": f - b,
                         "scale": scale[k]})
    rows.append({"term": "S", "group": "all", "base": base.gamma, "fair": 0.0,
                 "delta": -base.gamma, "scale": None})
    for k in range(st.M):
        f = float(gc.intercept_eps[k])
        rows.append({"term": "intercept", "group": st.labels[k], "base": base.beta0, "fair": f,
                     "delta": f - base.beta0, "scale": scale[k]})
    return rows
