"""CSV and JSON interchange.

CSV dialect: comma separated, '.' decimal point, UTF-8, mandatory header row.
Floats are written with ``repr`` (shortest round-trip decimal) so a written
file reloads bit-for-bit. Every file write goes through a temp file and an
atomic rename.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .base_model import BaseLinearModel
from .errors import MissingColumn, NonNumericCell, TooFewGroups
from .group_stats import Dataset, GroupStats, encode_labels
from .metrics import EqualityConditions, FitReport, GapCheck
from .unfairness import FeatureContribution, UnfairnessReport


@dataclass
class Schema:
    features: list | None = None  # None: every column except sensitive and target
    sensitive: str = "s"
    target: str = "y"

    @classmethod
    def load(cls, path) -> "Schema":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(d.get("features"), d.get("sensitive", "s"), d.get("target", "y"))

    def to_dict(self) -> dict:
        return {"features": self.features, "sensitive": self.sensitive, "target": self.target}


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def rows_to_csv(rows, columns=None) -> str:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def write_rows_csv(path, rows, columns=None) -> None:
    atomic_write_text(path, rows_to_csv(rows, columns))


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path, obj) -> None:
    atomic_write_text(path, dumps_json(obj))


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_schema(name: str) -> dict:
    """A JSON schema shipped with the package, e.g. ``load_schema("audit")``."""
    text = resources.files("fairlin").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def _label_value(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def _to_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


def read_csv(path, schema: Schema | None = None, drop_bad_rows: bool = False) -> tuple[Dataset, int]:
    """Load a dataset; returns it with the number of rows dropped."""
    schema = schema or Schema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(f"{path} is empty; a header row is required") from None
        for col in (schema.sensitive, schema.target):
            if col not in header:
                raise MissingColumn(f"column {col!r} not found in {path}")
        features = schema.features
        if features is None:
            features = [h for h in header if h not in (schema.sensitive, schema.target)]
        for col in features:
            if col not in header:
                raise MissingColumn(f"column {col!r} not found in {path}")
        if not features:
            raise MissingColumn("no feature columns")
        fi = [header.index(c) for c in features]
        si, ti = header.index(schema.sensitive), header.index(schema.target)

        X, S, Y = [], [], []
        dropped = 0
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                if len(rec) != len(header):
                    raise NonNumericCell(lineno, "<row>", f"{len(rec)} fields for {len(header)} columns")
                x = []
                for j, c in zip(fi, features):
                    try:
                        x.append(_to_float(rec[j]))
                    except ValueError:
                        raise NonNumericCell(lineno, c, rec[j]) from None
                try:
                    y = _to_float(rec[ti])
                except ValueError:
                    raise NonNumericCell(lineno, schema.target, rec[ti]) from None
                s = rec[si].strip()
                if not s:
                    raise NonNumericCell(lineno, schema.sensitive, rec[si])
            except NonNumericCell:
                if not drop_bad_rows:
                    raise
                dropped += 1
                continue
            X.append(x)
            S.append(s)
            Y.append(y)
    if len(set(S)) < 2:
        raise TooFewGroups(f"sensitive column {schema.sensitive!r} has fewer than 2 distinct values")
    codes, order = encode_labels(S)
    labels = tuple(_label_value(v) for v in order)
    return Dataset(np.array(X, dtype=float), codes, np.array(Y, dtype=float), labels, tuple(features)), dropped


def load_csv(path, schema: Schema | None = None, drop_bad_rows: bool = False) -> Dataset:
    return read_csv(path, schema, drop_bad_rows)[0]


def dataset_to_csv(data: Dataset, sensitive: str = "s", target: str = "y") -> str:
    columns = list(data.feature_names) + [sensitive, target]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    labels = data.labels
    for x, s, y in zip(data.X.tolist(), data.S.tolist(), data.Y.tolist()):
        w.writerow([repr(v) for v in x] + [str(labels[s - 1]), repr(y)])
    return buf.getvalue()


def write_dataset_csv(path, data: Dataset, sensitive: str = "s", target: str = "y") -> None:
    atomic_write_text(path, dataset_to_csv(data, sensitive, target))


def stats_to_dict(stats: GroupStats) -> dict:
    return {
        "labels": list(stats.labels),
        "p": stats.p.tolist(),
        "mu": stats.mu.tolist(),
        "sigma": stats.sigma.tolist(),
        "n_per_group": stats.n_per_group.tolist(),
    }


def stats_from_dict(d: dict) -> GroupStats:
    return GroupStats(np.array(d["p"]), np.array(d["mu"]), np.array(d["sigma"]),
                      np.array(d["n_per_group"]), tuple(d["labels"]))


@dataclass
class AuditDocument:
    model: BaseLinearModel
    feature_names: tuple
    group_stats: GroupStats
    fit: FitReport
    unfairness: UnfairnessReport
    features: FeatureContribution
    equality: EqualityConditions
    gap: GapCheck
    config_hash: str = ""
    tool_version: str = __version__
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": "audit",
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "model": self.model.to_dict(),
            "feature_names": list(self.feature_names),
            "group_stats": stats_to_dict(self.group_stats),
            "fit": self.fit.to_dict(),
            "unfairness": self.unfairness.to_dict(),
            "features": self.features.to_dict(),
            "equality_conditions": self.equality.to_dict(),
            "gap_check": self.gap.to_dict(),
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditDocument":
        return cls(
            model=BaseLinearModel.from_dict(d["model"]),
            feature_names=tuple(d["feature_names"]),
            group_stats=stats_from_dict(d["group_stats"]),
            fit=FitReport.from_dict(d["fit"]),
            unfairness=UnfairnessReport(**d["unfairness"]),
            features=FeatureContribution.from_dict(d["features"]),
            equality=EqualityConditions(**d["equality_conditions"]),
            gap=GapCheck(**d["gap_check"]),
            config_hash=d["config_hash"],
            tool_version=d["tool_version"],
            extra=d.get("extra", {}),
        )

    def serialize(self) -> str:
        return dumps_json(self.to_dict())

    @classmethod
    def parse(cls, text: str) -> "AuditDocument":
        return cls.from_dict(json.loads(text))
