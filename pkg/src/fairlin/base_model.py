"""Base linear models: Y ~ <X, beta> + gamma*S + beta0, and group-wise variants.

For M > 2 the aware model treats the group code as an ordinal regressor
(gamma * s); relabelling groups changes gamma but not fitted values for M = 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, GroupTooSmall, SingularDesign

_RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class BaseLinearModel:
    beta: np.ndarray
    gamma: float = 0.0
    beta0: float = 0.0
    aware: bool = True

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "beta0", float(self.beta0))
        if not self.aware and self.gamma != 0.0:
            raise ValueError("an unaware model must have gamma == 0")
        if not (np.all(np.isfinite(beta)) and np.isfinite(self.gamma) and np.isfinite(self.beta0)):
            raise ValueError("coefficients must be finite")

    @property
    def d(self) -> int:
        return self.beta.shape[0]

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "gamma": self.gamma,
            "beta0": self.beta0,
            "aware": self.aware,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BaseLinearModel":
        return cls(np.array(d["beta"], dtype=float), d["gamma"], d["beta0"], bool(d["aware"]))


@dataclass(frozen=True, eq=False)
class GroupwiseLinearModel:
    beta_per_group: np.ndarray  # (M, d)
    intercept_per_group: np.ndarray  # (M,)
    shared_slope: bool = False

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.beta_per_group, dtype=float))
        c = np.asarray(self.intercept_per_group, dtype=float)
        if b.shape[0] != c.shape[0] or b.shape[0] < 2:
            raise DimensionMismatch("need M >= 2 slope vectors and intercepts")
        b.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "beta_per_group", b)
        object.__setattr__(self, "intercept_per_group", c)

    @property
    def M(self) -> int:
        return self.beta_per_group.shape[0]

    def to_dict(self) -> dict:
        return {
            "beta_per_group": self.beta_per_group.tolist(),
            "intercept_per_group": self.intercept_per_group.tolist(),
            "shared_slope": self.shared_slope,
        }


def _lstsq_qr(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least squares through a reduced QR factorisation with a rank check."""
    if A.shape[1] == 0:
        return np.zeros(0)
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(R))
    if A.shape[0] < A.shape[1] or diag.min() <= _RANK_RTOL * max(diag.max(), 1e-300):
        raise SingularDesign(f"design of shape {A.shape} is rank-deficient")
    return solve_triangular(R, Q.T @ y, lower=False)


def _centered_fit(Z: np.ndarray, y: np.ndarray, ridge: float):
    z_mean = Z.mean(axis=0)
    y_mean = y.mean()
    Zc = Z - z_mean
    yc = y - y_mean
    if ridge > 0:
        k = Z.shape[1]
        Zc = np.vstack([Zc, np.sqrt(ridge) * np.eye(k)])
        yc = np.concatenate([yc, np.zeros(k)])
    coef = _lstsq_qr(Zc, yc)
    return coef, y_mean - z_mean @ coef


def fit_ols(data, aware: bool = True, ridge: float = 0.0) -> BaseLinearModel:
    """Ridge/OLS fit with an unpenalised intercept.

    Minimises ``sum (y - <x, beta> - gamma*s - beta0)^2 + ridge * (|beta|^2 + gamma^2)``
    by QR on the centred design, augmented with ``sqrt(ridge) * I`` rows.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    n = data.n
    if n <= data.d + 2:
        raise SingularDesign(f"need n > d + 2 rows, got n={n}, d={data.d}")
    Z = np.column_stack([data.X, data.S.astype(float)]) if aware else data.X
    coef, beta0 = _centered_fit(Z, data.Y, ridge)
    if aware:
        return BaseLinearModel(coef[:-1], coef[-1], beta0, aware=True)
    return BaseLinearModel(coef, 0.0, beta0, aware=False)


def fit_groupwise(data, shared_slope: bool, intercept: bool = False) -> GroupwiseLinearModel:
    """Group-intercept model (shared slope) or independent per-group OLS.

    The per-group form fits ``Y = <X, beta_s>`` through the origin by default,
    as the FS23 outcome model has no intercept; ``intercept=True`` adds one.
    A group offset the origin fit cannot represent leaks into the slopes,
    which is what makes FS23 degrade under direct bias.
    """
    M, d = data.M, data.d
    counts = np.bincount(data.S, minlength=M + 1)[1:]
    if shared_slope:
        for k, c in enumerate(counts):
            if c < 1:
                raise GroupTooSmall(k + 1)
        onehot = (data.S[:, None] == np.arange(1, M + 1)[None, :]).astype(float)
        coef = _lstsq_qr(np.column_stack([data.X, onehot]), data.Y)
        beta = coef[:d]
        return GroupwiseLinearModel(np.tile(beta, (M, 1)), coef[d:], shared_slope=True)
    betas = np.empty((M, d))
    intercepts = np.empty(M)
    for k in range(M):
        if counts[k] <= d + 2:
            raise GroupTooSmall(k + 1, f"group {k + 1} has {counts[k]} rows; need > d + 2")
        rows = data.S == k + 1
        if intercept:
            betas[k], intercepts[k] = _centered_fit(data.X[rows], data.Y[rows], 0.0)
        else:
            betas[k], intercepts[k] = _lstsq_qr(data.X[rows], data.Y[rows]), 0.0
    return GroupwiseLinearModel(betas, intercepts, shared_slope=False)


def _linear_part(X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    # left-to-right accumulation over features, independent of BLAS blocking
    acc = X[..., 0] * beta[0]
    for j in range(1, beta.shape[0]):
        acc = acc + X[..., j] * beta[j]
    return acc


def predict(model: BaseLinearModel, x, s):
    """``<x, beta> + gamma*s + beta0`` for one row or a batch of rows."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.d:
        raise DimensionMismatch(f"x has {x.shape[-1]} features, model expects {model.d}")
    out = _linear_part(x, model.beta) + model.gamma * np.asarray(s, dtype=float) + model.beta0
    return float(out) if np.ndim(out) == 0 else out
