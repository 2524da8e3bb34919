"""Closed-form epsilon-fair post-processing of a linear model, plus the CS22/FS23 baselines.

The fair predictor standardises the score within each group and re-scales it
with moments interpolated between the group-specific values and their
population averages:

    f_eps(x, s) = sigma_eps[s] * <x - mu[s], beta> / sigma_f[s] + mu_eps[s]
    mu_eps[s]    = (1 - sqrt(eps)) * mu_bar    + sqrt(eps) * mu_f[s]
    sigma_eps[s] = (1 - sqrt(eps)) * sigma_bar + sqrt(eps) * sigma_f[s]
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base_model import BaseLinearModel, GroupwiseLinearModel, predict
from .errors import (
    DegenerateScore,
    DimensionMismatch,
    EpsilonOutOfRange,
    NotSharedSlope,
    UnknownGroup,
    ZeroSlopeGroup,
)
from .group_stats import GroupStats, ScoreMoments, score_moments


@dataclass(frozen=True, eq=False)
class FairPredictor:
    epsilon: float
    base: BaseLinearModel
    stats: GroupStats
    moments: ScoreMoments
    mu_eps: np.ndarray
    sigma_eps: np.ndarray
    sqrt_eps: float
    tol: float

    @property
    def all_degenerate(self) -> bool:
        return bool(np.all(self.moments.sigma_f <= self.tol))

    def to_dict(self) -> dict:
        m = self.moments
        return {
            "epsilon": self.epsilon,
            "base": self.base.to_dict(),
            "labels": list(self.stats.labels),
            "p": self.stats.p.tolist(),
            "mu": self.stats.mu.tolist(),
            "sigma": self.stats.sigma.tolist(),
            "n_per_group": self.stats.n_per_group.tolist(),
            "mu_f": m.mu_f.tolist(),
            "sigma_f": m.sigma_f.tolist(),
            "mu_bar": m.mu_bar,
            "sigma_bar": m.sigma_bar,
            "mu_eps": self.mu_eps.tolist(),
            "sigma_eps": self.sigma_eps.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FairPredictor":
        stats = GroupStats(
            np.array(d["p"]), np.array(d["mu"]), np.array(d["sigma"]),
            np.array(d["n_per_group"]), tuple(d["labels"]),
        )
        return build_fair_predictor(BaseLinearModel.from_dict(d["base"]), stats, d["epsilon"])


@dataclass(frozen=True, eq=False)
class GroupCoefficients:
    beta_eps: np.ndarray  # (M, d)
    intercept_eps: np.ndarray  # (M,)

    def to_dict(self) -> dict:
        return {"beta_eps": self.beta_eps.tolist(), "intercept_eps": self.intercept_eps.tolist()}


def build_fair_predictor(base: BaseLinearModel, stats: GroupStats, epsilon: float) -> FairPredictor:
    epsilon = float(epsilon)
    if not 0.0 <= epsilon <= 1.0:
        raise EpsilonOutOfRange(f"epsilon must lie in [0, 1], got {epsilon}")
    m = score_moments(base, stats)
    r = math.sqrt(epsilon)
    mu_eps = (1.0 - r) * m.mu_bar + r * m.mu_f
    sigma_eps = (1.0 - r) * m.sigma_bar + r * m.sigma_f
    tol = 1e-12 * max(1.0, m.sigma_bar)
    degenerate = m.sigma_f <= tol
    if epsilon < 1.0 and degenerate.any() and not degenerate.all():
        s = int(np.flatnonzero(degenerate)[0]) + 1
        raise DegenerateScore(s, f"score has zero variance in group {s} but not in all groups")
    for a in (mu_eps, sigma_eps):
        a.setflags(write=False)
    return FairPredictor(epsilon, base, stats, m, mu_eps, sigma_eps, r, tol)


def _group_index(s, M: int) -> np.ndarray:
    s_arr = np.asarray(s)
    if np.any(s_arr != np.round(s_arr)) or np.any((s_arr < 1) | (s_arr > M)):
        bad = s_arr[(s_arr < 1) | (s_arr > M) | (s_arr != np.round(s_arr))].ravel()[0]
        raise UnknownGroup(bad.item(), f"unknown group {bad.item()}; expected 1..{M}")
    return s_arr.astype(np.int64) - 1


def fair_predict(fp: FairPredictor, x, s):
    """Evaluate the fair predictor on one row or a batch of rows."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != fp.stats.d:
        raise DimensionMismatch(f"x has {x.shape[-1]} features, predictor expects {fp.stats.d}")
    k = _group_index(s, fp.stats.M)
    if fp.sqrt_eps == 1.0:
        return predict(fp.base, x, k + 1)
    if fp.all_degenerate:
        out = fp.mu_eps[k] + np.zeros(x.shape[:-1])
    else:
        centered = np.einsum("...j,j->...", x - fp.stats.mu[k], fp.base.beta)
        out = fp.sigma_eps[k] * (centered / fp.moments.sigma_f[k]) + fp.mu_eps[k]
    return float(out) if np.ndim(out) == 0 else out


def group_coefficients(fp: FairPredictor) -> GroupCoefficients:
    """Per-group slopes and intercepts of the equivalent group-aware linear model."""
    st, m, beta = fp.stats, fp.moments, fp.base.beta
    if fp.sqrt_eps == 1.0:
        return GroupCoefficients(
            np.tile(beta, (st.M, 1)), fp.base.gamma * st.codes + fp.base.beta0
        )
    degenerate = m.sigma_f <= fp.tol
    if degenerate.any():
        s = int(np.flatnonzero(degenerate)[0]) + 1
        raise DegenerateScore(s, f"no affine form: score variance is zero in group {s}")
    scale = fp.sigma_eps / m.sigma_f
    return GroupCoefficients(scale[:, None] * beta, fp.mu_eps - scale * (st.mu @ beta))


def predict_cs22(gm: GroupwiseLinearModel, p, x, s=None):
    """Shared slope plus the p-weighted average of the group intercepts."""
    b = gm.beta_per_group
    if not np.all(b == b[0]):
        raise NotSharedSlope("CS22 needs one slope vector shared by all groups")
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.einsum("...j,j->...", x, b[0]) + p @ gm.intercept_per_group
    return float(out) if np.ndim(out) == 0 else out


def fs23_coefficients(gm: GroupwiseLinearModel, stats: GroupStats, tol: float = 1e-12):
    """Slopes ``|beta|_avg * beta_s / |beta_s|`` and intercepts of the FS23 predictor."""
    b = gm.beta_per_group
    norms = np.linalg.norm(b, axis=1)
    for k, nk in enumerate(norms):
        if nk <= tol:
            raise ZeroSlopeGroup(k + 1, f"slope vector of group {k + 1} is zero")
    avg_norm = stats.p @ norms
    slopes = (avg_norm / norms)[:, None] * b
    offset = stats.p @ np.einsum("kj,kj->k", b, stats.mu)
    intercepts = offset - np.einsum("kj,kj->k", slopes, stats.mu)
    return slopes, intercepts


def predict_fs23(gm: GroupwiseLinearModel, stats: GroupStats, x, s):
    b = gm.beta_per_group
    norms = np.linalg.norm(b, axis=1)
    for k, nk in enumerate(norms):
        if nk <= 1e-12:
            raise ZeroSlopeGroup(k + 1, f"slope vector of group {k + 1} is zero")
    k = _group_index(s, gm.M)
    x = np.asarray(x, dtype=float)
    avg_norm = stats.p @ norms
    unit = b[k] / norms[k][..., None]
    offset = stats.p @ np.einsum("kj,kj->k", b, stats.mu)
    out = avg_norm * np.einsum("...j,...j->...", unit, x - stats.mu[k]) + offset
    return float(out) if np.ndim(out) == 0 else out
