"""Datasets, per-group plug-in statistics and conditional moments of linear scores."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, GroupTooSmall, NonFiniteInput, TooFewGroups


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (n, d), group codes ``S`` in 1..M, targets ``Y``.

    ``labels[k]`` is the raw sensitive value that was mapped to code ``k + 1``.
    """

    X: np.ndarray
    S: np.ndarray
    Y: np.ndarray
    labels: tuple = ()
    feature_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        S = np.asarray(self.S)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or S.ndim != 1 or Y.ndim != 1:
            raise DimensionMismatch("X must be 2-D, S and Y 1-D")
        n = X.shape[0]
        if n < 1 or S.shape[0] != n or Y.shape[0] != n:
            raise DimensionMismatch(f"row counts differ: X={n}, S={S.shape[0]}, Y={Y.shape[0]}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(Y)):
            raise NonFiniteInput("X and Y must be finite")
        if not np.all(S == np.round(S)):
            raise DimensionMismatch("S must hold integer group codes")
        S = S.astype(np.int64)
        M = int(S.max())
        if S.min() < 1 or M < 2:
            raise TooFewGroups("need group codes 1..M with M >= 2")
        present = np.bincount(S, minlength=M + 1)[1:]
        if np.any(present == 0):
            missing = [k + 1 for k in np.flatnonzero(present == 0)]
            raise TooFewGroups(f"group codes {missing} have no rows")
        labels = tuple(self.labels) if self.labels else tuple(range(1, M + 1))
        if len(labels) != M:
            raise DimensionMismatch(f"{len(labels)} labels for {M} groups")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionMismatch("feature_names length must equal d")
        for a in (X, S, Y):
            a.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def M(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.S[idx], self.Y[idx], self.labels, self.feature_names)

    def equals(self, other: "Dataset") -> bool:
        """Bitwise equality of all arrays and metadata."""
        return (
            self.labels == other.labels
            and self.feature_names == other.feature_names
            and self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.S, other.S)
            and np.array_equal(self.Y, other.Y)
        )


def encode_labels(raw) -> tuple[np.ndarray, tuple]:
    """Map arbitrary sensitive values to codes 1..M by sorted distinct value.

    Numeric-looking values sort numerically, anything else lexicographically.
    """
    raw = list(raw)
    distinct = set(raw)
    try:
        order = sorted(distinct, key=float)
    except (TypeError, ValueError):
        order = sorted(distinct, key=str)
    code = {v: k + 1 for k, v in enumerate(order)}
    return np.array([code[v] for v in raw], dtype=np.int64), tuple(order)


@dataclass(frozen=True, eq=False)
class GroupStats:
    p: np.ndarray  # (M,)
    mu: np.ndarray  # (M, d)
    sigma: np.ndarray  # (M, d, d)
    n_per_group: np.ndarray  # (M,)
    labels: tuple = ()

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim == 2 and mu.shape[1] == 1:
            sigma = sigma.reshape(-1, 1, 1)
        M = p.shape[0]
        if mu.shape[0] != M or sigma.shape != (M, mu.shape[1], mu.shape[1]):
            raise DimensionMismatch(
                f"inconsistent shapes p={p.shape}, mu={mu.shape}, sigma={sigma.shape}"
            )
        npg = np.asarray(self.n_per_group, dtype=np.int64)
        for a in (p, mu, sigma, npg):
            a.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "n_per_group", npg)
        object.__setattr__(self, "labels", tuple(self.labels) or tuple(range(1, M + 1)))

    @classmethod
    def from_moments(cls, p, mu, sigma, labels=()) -> "GroupStats":
        """Population statistics (no sample behind them)."""
        p = np.asarray(p, dtype=float)
        return cls(p, mu, sigma, np.zeros(p.shape[0], dtype=np.int64), labels)

    @property
    def M(self) -> int:
        return self.p.shape[0]

    @property
    def d(self) -> int:
        return self.mu.shape[1]

    @property
    def codes(self) -> np.ndarray:
        """Integer values s = 1..M that enter a model through gamma * s."""
        return np.arange(1, self.M + 1, dtype=float)

    def is_psd(self, rtol: float = 1e-10) -> bool:
        for cov in self.sigma:
            if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
                return False
            if np.linalg.eigvalsh(cov).min() < -rtol * max(np.trace(cov), 0.0):
                return False
        return True


def estimate_group_stats(data: Dataset, reg: float = 0.0) -> GroupStats:
    """Group proportions, means and divisor-n covariances (plus ``reg * I``)."""
    if reg < 0:
        raise ValueError("reg must be non-negative")
    X, S = data.X, data.S
    M, d = data.M, data.d
    counts = np.bincount(S, minlength=M + 1)[1:]
    for k, c in enumerate(counts):
        if c < 2:
            raise GroupTooSmall(k + 1, f"group {k + 1} has {c} rows; need >= 2")
    p = counts / data.n
    mu = np.empty((M, d))
    sigma = np.empty((M, d, d))
    for k in range(M):
        Xs = X[S == k + 1]
        m = Xs.mean(axis=0)
        C = Xs - m
        cov = C.T @ C / Xs.shape[0]
        cov = 0.5 * (cov + cov.T)
        if reg:
            cov = cov + reg * np.eye(d)
        mu[k], sigma[k] = m, cov
    return GroupStats(p, mu, sigma, counts, data.labels)


@dataclass(frozen=True, eq=False)
class ScoreMoments:
    mu_f: np.ndarray
    sigma_f: np.ndarray
    mu_bar: float
    sigma_bar: float


def score_moments(model, stats: GroupStats) -> ScoreMoments:
    """Group-conditional mean and std of ``<X, beta> + gamma*S + beta0``."""
    beta = np.asarray(model.beta, dtype=float)
    if beta.shape != (stats.d,):
        raise DimensionMismatch(f"model has d={beta.shape[0]}, stats have d={stats.d}")
    mu_f = stats.mu @ beta + model.gamma * stats.codes + model.beta0
    var_f = np.einsum("i,kij,j->k", beta, stats.sigma, beta)
    sigma_f = np.sqrt(np.maximum(var_f, 0.0))
    return ScoreMoments(mu_f, sigma_f, float(stats.p @ mu_f), float(stats.p @ sigma_f))
