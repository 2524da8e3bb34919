"""Two-group synthetic benchmark with independent knobs for each bias source.

Knobs ``T = (t_y, t_mean, t_std, t_corr)``:

* ``t_y``    coefficient of S in the outcome (direct bias);
* ``t_mean`` shift of every feature mean in group 2 (indirect mean bias);
* ``t_std``  group 2 feature stds are ``sigma1 + sqrt(t_std)``;
* ``t_corr`` blends group-specific random correlation matrices with I;
  ``t_corr == 1`` uses the group-1 matrix for both groups.

Random stream (generator ``GENERATOR_VERSION``): Philox-4x64 keyed by
``seed``. Stage k reads from the key's counter space jumped k times
(``Philox(seed).jumped(k)``), so stages never overlap and the amount drawn
in one stage cannot shift another:

0. n standard normals Z; S = 2 where Z > tau, else 1;
1. d uniforms p_j, d binomials Binomial(3, p_j) (group-1 means),
   d uniforms on [0, 2] (group-1 stds), then two d x d standard-normal
   matrices A1, A2 (always drawn);
2. an n x d standard-normal matrix, mapped to X row by row;
3. n standard normals for the outcome noise (always drawn).

Stage 1 depends on neither n nor T, so for a fixed seed the population is
shared by every knob setting and sample size.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import NonPSD
from .group_stats import Dataset, GroupStats

GENERATOR_VERSION = "philox4x64-fairlin-synth-v1"


@dataclass(frozen=True)
class SynthConfig:
    d: int = 5
    n: int = 20000
    tau: float = 0.6
    t_y: float = 0.0
    t_mean: float = 0.0
    t_std: float = 0.0
    t_corr: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.n < 4:
            raise ValueError("n must be >= 4")
        if self.t_std < 0 or self.noise_std < 0:
            raise ValueError("t_std and noise_std must be non-negative")
        if not 0.0 <= self.t_corr <= 1.0:
            raise ValueError("t_corr must lie in [0, 1]")

    @property
    def T(self) -> tuple:
        return (self.t_y, self.t_mean, self.t_std, self.t_corr)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SynthGroundTruth:
    q: float
    mu: np.ndarray  # (2, d)
    sigma: np.ndarray  # (2, d, d)
    rho: np.ndarray  # (2, d, d)
    beta_true: np.ndarray
    gamma_true: float
    beta0_true: float = 0.0
    config: SynthConfig = field(default_factory=SynthConfig)

    @property
    def p(self) -> np.ndarray:
        return np.array([1.0 - self.q, self.q])

    def stats(self) -> GroupStats:
        return GroupStats.from_moments(self.p, self.mu, self.sigma)

    def model(self):
        from .base_model import BaseLinearModel

        return BaseLinearModel(self.beta_true, self.gamma_true, self.beta0_true, aware=True)

    def to_dict(self) -> dict:
        return {
            "generator": GENERATOR_VERSION,
            "config": self.config.to_dict(),
            "q": self.q,
            "p": self.p.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "rho": self.rho.tolist(),
            "beta_true": self.beta_true.tolist(),
            "gamma_true": self.gamma_true,
            "beta0_true": self.beta0_true,
        }


def _correlation(A: np.ndarray) -> np.ndarray:
    G = A.T @ A
    inv_sqrt = 1.0 / np.sqrt(np.diag(G))
    C = G * np.outer(inv_sqrt, inv_sqrt)
    C = 0.5 * (C + C.T)
    np.fill_diagonal(C, 1.0)
    return C


def _matrix_sqrt(S: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(S)
        return V * np.sqrt(np.maximum(w, 0.0))


def generate(cfg: SynthConfig) -> tuple[Dataset, SynthGroundTruth]:
    d, n = cfg.d, cfg.n
    key = np.random.Philox(cfg.seed)
    stage = [np.random.Generator(key.jumped(k)) if k else np.random.Generator(key) for k in range(4)]

    rng = stage[0]
    z = rng.standard_normal(n)
    S = np.where(z > cfg.tau, 2, 1)
    q = float(norm.sf(cfg.tau))

    rng = stage[1]
    p_j = rng.uniform(0.0, 1.0, size=d)
    mu1 = rng.binomial(3, p_j).astype(float)
    sd1 = rng.uniform(0.0, 2.0, size=d)
    A1 = rng.standard_normal((d, d))
    A2 = rng.standard_normal((d, d))

    mu = np.stack([mu1, mu1 + cfg.t_mean])
    sd = np.stack([sd1, sd1 + np.sqrt(cfg.t_std)])
    eye = np.eye(d)
    if cfg.t_corr == 0.0:
        rho = np.stack([eye, eye])
    elif cfg.t_corr == 1.0:
        C1 = _correlation(A1)
        rho = np.stack([C1, C1])
    else:
        rho = np.stack([cfg.t_corr * _correlation(A) + (1.0 - cfg.t_corr) * eye for A in (A1, A2)])
    sigma = np.einsum("ki,kij,kj->kij", sd, rho, sd)
    for k in range(2):
        w = np.linalg.eigvalsh(sigma[k])
        if w.min() < -1e-10 * max(np.trace(sigma[k]), 1e-300):
            raise NonPSD(f"covariance of group {k + 1} is not PSD (min eigenvalue {w.min()})")

    E = stage[2].standard_normal((n, d))
    X = np.empty((n, d))
    for k in range(2):
        rows = S == k + 1
        X[rows] = mu[k] + E[rows] @ _matrix_sqrt(sigma[k]).T
    noise = stage[3].standard_normal(n)

    beta = np.ones(d)
    Y = X.sum(axis=1) + cfg.t_y * S
    if cfg.noise_std:
        Y = Y + cfg.noise_std * noise
    truth = SynthGroundTruth(q, mu, sigma, rho, beta, float(cfg.t_y), 0.0, cfg)
    return Dataset(X, S, Y, labels=(1, 2)), truth


def population_report(gt: SynthGroundTruth):
    """Exact decomposition of the true model under the true group laws."""
    from .unfairness import unfairness_gaussian

    return unfairness_gaussian(gt.model(), gt.stats())
