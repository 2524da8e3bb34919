"""Risk, global R^2, group-weighted R^2 and the diagnostics of their gap.

Variances use divisor n (and n_s within groups), matching ``estimate_group_stats``.
"""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroOutcomeVariance


@dataclass(frozen=True)
class FitReport:
    mse: float
    r2_global: float
    r2_per_group: tuple
    gwr2: float
    gap: float
    W_Y: float
    W_R: float
    B_Y: float
    B_R: float
    p: tuple
    var_y_per_group: tuple
    var_r_per_group: tuple

    @property
    def gap_components(self):
        return self.W_Y, self.W_R, self.B_Y, self.B_R

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def _within_between(values, S, M, p):
    means = np.array([values[S == k].mean() for k in range(1, M + 1)])
    variances = np.array([values[S == k].var() for k in range(1, M + 1)])
    within = float(p @ variances)
    between = float(p @ (means - p @ means) ** 2)
    return variances, within, between


def evaluate(predictions, data) -> FitReport:
    f = np.asarray(predictions, dtype=float)
    if f.shape != data.Y.shape:
        raise DimensionMismatch(f"{f.shape[0]} predictions for {data.n} rows")
    Y, S, M = data.Y, data.S, data.M
    counts = np.bincount(S, minlength=M + 1)[1:]
    p = counts / data.n
    R = Y - f
    var_y, W_Y, B_Y = _within_between(Y, S, M, p)
    var_r, W_R, B_R = _within_between(R, S, M, p)
    tol = 1e-12 * (1.0 + Y.var())
    for k in range(M):
        if var_y[k] <= tol:
            raise ZeroOutcomeVariance(k + 1, f"outcome is constant in group {k + 1}")
    r2_s = 1.0 - var_r / var_y
    gwr2 = float(p @ r2_s)
    r2_global = 1.0 - R.var() / Y.var()
    return FitReport(
        mse=float(np.mean(R ** 2)),
        r2_global=float(r2_global),
        r2_per_group=tuple(r2_s.tolist()),
        gwr2=gwr2,
        gap=gwr2 - float(r2_global),
        W_Y=W_Y, W_R=W_R, B_Y=B_Y, B_R=B_R,
        p=tuple(p.tolist()),
        var_y_per_group=tuple(var_y.tolist()),
        var_r_per_group=tuple(var_r.tolist()),
    )


@dataclass(frozen=True)
class GapCheck:
    lhs: float
    rhs: float
    homoscedasticity: float
    heteroscedastic: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _spread(v, p):
    v = np.asarray(v, dtype=float)
    scale = float(np.dot(p, v))
    if scale <= 1e-300:
        return 0.0
    return float((v.max() - v.min()) / scale)


def gap_identity_check(report: FitReport, threshold: float = 0.05) -> GapCheck:
    """Observed gap against ``(W_Y B_R - W_R B_Y) / (W_Y (W_Y + B_Y))``.

    The closed form assumes equal within-group variances of the outcome and
    of the residuals; ``homoscedasticity`` is the largest relative spread of
    those variances, and equality should only be expected when it is ~0.
    """
    W_Y, W_R, B_Y, B_R = report.gap_components
    rhs = (W_Y * B_R - W_R * B_Y) / (W_Y * (W_Y + B_Y))
    score = max(_spread(report.var_y_per_group, report.p), _spread(report.var_r_per_group, report.p))
    return GapCheck(report.gap, float(rhs), score, score > threshold)


@dataclass(frozen=True)
class EqualityConditions:
    unaware: bool
    no_residual_association: bool
    feature_independence: bool
    association_t: float
    max_feature_discrepancy: float

    def to_dict(self) -> dict:
        return asdict(self)


def equality_conditions_check(model, stats, data, assoc_threshold: float = 2.0,
                              discrepancy_threshold: float = 0.05) -> EqualityConditions:
    """Finite-sample diagnostics for when GWR^2 and global R^2 coincide.

    * unaware: the audited model has gamma == 0;
    * no residual association: |t| of S in an OLS of the residuals on (1, X, S);
    * feature independence: largest standardised mean or std discrepancy of a
      feature between any group and the pooled sample.
    """
    from .base_model import predict

    R = data.Y - predict(model, data.X, data.S)
    t = _association_t(data.X, data.S.astype(float), R, data.Y)

    X = data.X
    sd_all = X.std(axis=0)
    sd_all = np.where(sd_all > 0, sd_all, 1.0)
    mean_all = X.mean(axis=0)
    worst = 0.0
    for k in range(stats.M):
        mean_k = stats.mu[k]
        sd_k = np.sqrt(np.maximum(np.diag(stats.sigma[k]), 0.0))
        worst = max(worst,
                    float(np.max(np.abs(mean_k - mean_all) / sd_all)),
                    float(np.max(np.abs(sd_k / sd_all - 1.0))))
    return EqualityConditions(
        unaware=model.gamma == 0.0,
        no_residual_association=abs(t) < assoc_threshold,
        feature_independence=worst < discrepancy_threshold,
        association_t=float(t),
        max_feature_discrepancy=worst,
    )


def _association_t(X, s, R, Y) -> float:
    n = X.shape[0]
    if np.sqrt(np.mean(R ** 2)) <= 1e-10 * max(Y.std(), 1e-300):
        return 0.0
    A = np.column_stack([np.ones(n), X, s])
    coef, *_ = np.linalg.lstsq(A, R, rcond=None)
    resid = R - A @ coef
    dof = max(n - A.shape[1], 1)
    sigma2 = resid @ resid / dof
    cov = sigma2 * np.linalg.pinv(A.T @ A)
    se = np.sqrt(max(cov[-1, -1], 0.0))
    if se == 0.0:
        # perfect fit of the residuals: report the largest finite t so JSON stays valid
        return 0.0 if coef[-1] == 0.0 else math.copysign(sys.float_info.max, coef[-1])
    return float(coef[-1] / se)
