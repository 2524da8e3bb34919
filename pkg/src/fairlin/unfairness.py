"""Wasserstein-2 unfairness of linear scores and its decompositions.

Moments over groups are taken under the discrete law ``P(S = s) = p_s`` with
the raw codes ``s = 1..M``, so relabelling groups moves mass between the direct
and interaction terms without changing their sum or the total.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyGroup,
    LengthMismatch,
    NegativeSigma,
    ZeroVariance,
)
from .group_stats import GroupStats, score_moments


def _wmean(v, p):
    return float(np.dot(p, v))


def _wcov(a, b, p):
    # shifting by the first entry keeps constant inputs at exactly zero
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = a - a[0], b - b[0]
    return float(np.dot(p, (a - _wmean(a, p)) * (b - _wmean(b, p))))


def _wvar(a, p):
    return _wcov(a, a, p)


def gaussian_w2(mu1: float, sigma1: float, mu2: float, sigma2: float) -> float:
    """Squared W2 distance between N(mu1, sigma1^2) and N(mu2, sigma2^2)."""
    if sigma1 < 0 or sigma2 < 0:
        raise NegativeSigma("standard deviations must be non-negative")
    return (mu1 - mu2) ** 2 + (sigma1 - sigma2) ** 2


def gaussian_barycenter(mus, sigmas, p) -> tuple[float, float]:
    mus, sigmas, p = (np.asarray(a, dtype=float) for a in (mus, sigmas, p))
    if not (mus.shape == sigmas.shape == p.shape) or mus.ndim != 1:
        raise LengthMismatch("mus, sigmas and p must be 1-D of equal length")
    if np.any(sigmas < 0):
        raise NegativeSigma("standard deviations must be non-negative")
    return _wmean(mus, p), _wmean(sigmas, p)


@dataclass(frozen=True)
class UnfairnessReport:
    total: float
    fmd: float
    smd: float
    direct_mean: float
    indirect_mean: float
    interaction: float
    indirect_structural: float

    def to_dict(self) -> dict:
        return asdict(self)


def unfairness_from_moments(mean_by_group, std_by_group, p) -> tuple[float, float]:
    """(FMD, SMD) of Gaussian group laws; their sum is the unfairness."""
    return _wvar(mean_by_group, p), _wvar(std_by_group, p)


def unfairness_gaussian(model, stats: GroupStats) -> UnfairnessReport:
    m = score_moments(model, stats)
    p, codes = stats.p, stats.codes
    fmd, smd = unfairness_from_moments(m.mu_f, m.sigma_f, p)
    feat_mean = stats.mu @ model.beta
    return UnfairnessReport(
        total=fmd + smd,
        fmd=fmd,
        smd=smd,
        direct_mean=model.gamma ** 2 * _wvar(codes, p),
        indirect_mean=_wvar(feat_mean, p),
        interaction=2.0 * model.gamma * _wcov(codes, feat_mean, p),
        indirect_structural=smd,
    )


def groupwise_unfairness(slopes, intercepts, stats: GroupStats) -> tuple[float, float]:
    """(FMD, SMD) of the predictor ``x -> <x, slopes[s]> + intercepts[s]``."""
    slopes = np.asarray(slopes, dtype=float)
    if slopes.shape != (stats.M, stats.d):
        raise DimensionMismatch(f"slopes must have shape {(stats.M, stats.d)}")
    means = np.einsum("kj,kj->k", stats.mu, slopes) + np.asarray(intercepts, dtype=float)
    var = np.einsum("ki,kij,kj->k", slopes, stats.sigma, slopes)
    return unfairness_from_moments(means, np.sqrt(np.maximum(var, 0.0)), stats.p)


def residual_unfairness_check(base, stats: GroupStats, epsilon: float) -> tuple[float, float]:
    """Unfairness of the epsilon-fair predictor, and ``epsilon * U(base)``.

    The first value is assembled from the per-group affine maps of the fair
    predictor; the second only from the base model, so their agreement is a
    real check of the linear scaling law.
    """
    from .fair_predictor import build_fair_predictor, group_coefficients

    fp = build_fair_predictor(base, stats, epsilon)
    gc = group_coefficients(fp)
    fmd, smd = groupwise_unfairness(gc.beta_eps, gc.intercept_eps, stats)
    return fmd + smd, float(epsilon) * unfairness_gaussian(base, stats).total


@dataclass(frozen=True, eq=False)
class FeatureContribution:
    feature_names: tuple
    mean_term: np.ndarray
    structural_term: np.ndarray
    interaction_term: np.ndarray
    cross_mean: float
    cross_structural: float | None  # None when some covariance is not diagonal
    v_bar: float
    diagonal: bool
    approx_total: float  # sum of per-feature approximations
    exact_indirect: float  # U(f) - gamma^2 Var(S)
    taylor_structural: float  # Var(V) / (4 V_bar)
    exact_smd: float
    taylor_abs_error: float
    taylor_rel_error: float
    unattributed_structural: float
    note: str = ""

    def rows(self) -> list[dict]:
        out = []
        for j, name in enumerate(self.feature_names):
            mean, struct, inter = (float(a[j]) for a in
                                   (self.mean_term, self.structural_term, self.interaction_term))
            out.append({
                "feature": name,
                "mean_term": mean,
                "structural_term": struct,
                "interaction_term": inter,
                "approx_contribution": mean + struct + inter,
            })
        return out

    def to_dict(self) -> dict:
        return {
            "rows": self.rows(),
            "cross_mean": self.cross_mean,
            "cross_structural": self.cross_structural,
            "v_bar": self.v_bar,
            "diagonal": self.diagonal,
            "approx_total": self.approx_total,
            "exact_indirect": self.exact_indirect,
            "taylor_structural": self.taylor_structural,
            "exact_smd": self.exact_smd,
            "taylor_abs_error": self.taylor_abs_error,
            "taylor_rel_error": self.taylor_rel_error,
            "unattributed_structural": self.unattributed_structural,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureContribution":
        rows = d["rows"]
        col = lambda k: np.array([r[k] for r in rows], dtype=float)  # noqa: E731
        return cls(
            tuple(r["feature"] for r in rows), col("mean_term"), col("structural_term"),
            col("interaction_term"), d["cross_mean"], d["cross_structural"], d["v_bar"],
            d["diagonal"], d["approx_total"], d["exact_indirect"], d["taylor_structural"],
            d["exact_smd"], d["taylor_abs_error"], d["taylor_rel_error"],
            d["unattributed_structural"], d["note"],
        )


def _is_diagonal(stats: GroupStats, rtol: float = 1e-8) -> bool:
    for cov in stats.sigma:
        diag = np.abs(np.diag(cov)).sum()
        off = np.abs(cov).sum() - diag
        if off > rtol * max(diag, 1e-300):
            return False
    return True


def feature_decomposition(model, stats: GroupStats, feature_names=()) -> FeatureContribution:
    """Per-feature attribution of the indirect unfairness.

    The mean pathway is exact once ``cross_mean`` is added. The structural
    pathway uses a first-order expansion of sqrt around the average score
    variance; its error against the exact SMD is reported, never hidden.
    """
    beta, gamma, p, codes = model.beta, model.gamma, stats.p, stats.codes
    if beta.shape != (stats.d,):
        raise DimensionMismatch(f"model has d={beta.shape[0]}, stats have d={stats.d}")
    d = stats.d
    report = unfairness_gaussian(model, stats)
    V = np.einsum("i,kij,j->k", beta, stats.sigma, beta)
    v_bar = _wmean(V, p)
    if v_bar <= 1e-12 * (1.0 + report.total):
        raise ZeroVariance("average conditional score variance is zero")
    mu = stats.mu
    var_j = np.einsum("kjj->kj", stats.sigma)

    mean_term = np.array([beta[j] ** 2 * _wvar(mu[:, j], p) for j in range(d)])
    structural_term = np.array(
        [beta[j] ** 4 * _wvar(var_j[:, j], p) / (4.0 * v_bar) for j in range(d)]
    )
    interaction_term = np.array([2.0 * gamma * beta[j] * _wcov(codes, mu[:, j], p) for j in range(d)])
    pairs = list(itertools.combinations(range(d), 2))
    cross_mean = float(sum(2.0 * beta[j] * beta[k] * _wcov(mu[:, j], mu[:, k], p) for j, k in pairs))
    diagonal = _is_diagonal(stats)
    if diagonal:
        cross_structural = float(sum(
            2.0 * beta[j] ** 2 * beta[k] ** 2 * _wcov(var_j[:, j], var_j[:, k], p) for j, k in pairs
        )) / (4.0 * v_bar)
        note = ""
    else:
        cross_structural = None
        note = "general-case: structural attribution approximate, covariance disparity unattributed"

    taylor = _wvar(V, p) / (4.0 * v_bar)
    smd = report.smd
    abs_err = abs(taylor - smd)
    rel_err = abs_err / smd if smd > 0 else (0.0 if abs_err == 0 else float("inf"))
    attributed = float(structural_term.sum()) + (cross_structural or 0.0)
    return FeatureContribution(
        feature_names=tuple(feature_names) or tuple(f"x{j + 1}" for j in range(d)),
        mean_term=mean_term,
        structural_term=structural_term,
        interaction_term=interaction_term,
        cross_mean=cross_mean,
        cross_structural=cross_structural,
        v_bar=v_bar,
        diagonal=diagonal,
        approx_total=float((mean_term + structural_term + interaction_term).sum()),
        exact_indirect=report.total - report.direct_mean,
        taylor_structural=taylor,
        exact_smd=smd,
        taylor_abs_error=abs_err,
        taylor_rel_error=rel_err,
        unattributed_structural=smd - attributed,
        note=note,
    )


def ks_two_sample(a, b) -> float:
    """Exact two-sample KS statistic sup |F_a - F_b| by merged sorting."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.shape[0]
    fb = np.searchsorted(b, grid, side="right") / b.shape[0]
    return float(np.max(np.abs(fa - fb)))


def unfairness_ks(scores_by_group) -> float:
    """Largest pairwise KS distance between group score samples."""
    groups = [np.asarray(g, dtype=float) for g in scores_by_group]
    for k, g in enumerate(groups):
        if g.size == 0:
            raise EmptyGroup(k + 1, f"group {k + 1} has no scores")
    best = 0.0
    for a, b in itertools.combinations(groups, 2):
        best = max(best, ks_two_sample(a, b))
    return best


def split_by_group(scores, S, M: int) -> list[np.ndarray]:
    scores = np.asarray(scores)
    return [scores[S == k] for k in range(1, M + 1)]
