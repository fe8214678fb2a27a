"""Likelihood, priors and conjugate conditionals of the two-regime Bernoulli model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betaln, gammaln

from .core import Dataset, DnfFunction, SuffStats, build_coverage, suffstats


@dataclass(frozen=True)
class ProbPair:
    pi0: float
    pi1: float

    def __post_init__(self):
        for v in (self.pi0, self.pi1):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"probability {v} outside [0, 1]")


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the hierarchical prior.

    ``theta=None`` gives a flat prior on term size (only the uniform
    within-size factor ``1/C(p, k)`` remains); ``p_geom=None`` a flat prior on
    the number of terms. ``uniform_subsets=True`` drops the size level
    entirely so every subset of variables is equally likely a priori.
    """

    beta0: tuple[float, float] = (1.0, 1.0)
    beta1: tuple[float, float] = (1.0, 1.0)
    theta: float | None = None
    p_geom: float | None = None
    uniform_subsets: bool = False
    enforce_order: bool = False

    def __post_init__(self):
        object.__setattr__(self, "beta0", tuple(float(v) for v in self.beta0))
        object.__setattr__(self, "beta1", tuple(float(v) for v in self.beta1))
        if min(self.beta0 + self.beta1) <= 0:
            raise ValueError("Beta shapes must be positive")
        if self.theta is not None and self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.p_geom is not None and not 0 < self.p_geom < 1:
            raise ValueError("p_geom must lie in (0, 1)")
        if self.uniform_subsets and self.theta is not None:
            raise ValueError("uniform_subsets excludes a Poisson size prior")


@dataclass(frozen=True)
class LogPosterior:
    loglike: float
    logprior_f: float
    logprior_probs: float

    @property
    def total(self) -> float:
        return self.loglike + self.logprior_f + self.logprior_probs


@dataclass(frozen=True)
class MleEstimate:
    pi0: float
    pi1: float
    pi0_degenerate: bool
    pi1_degenerate: bool

    @property
    def probs(self) -> ProbPair:
        return ProbPair(self.pi0, self.pi1)


def _xlogy(x: float, y: float) -> float:
    if x == 0:
        return 0.0
    if y <= 0.0:
        return -math.inf
    return x * math.log(y)


def loglike_counts(n: int, n_p: int, n_m: int, n_pm: int, pi0: float, pi1: float) -> float:
    """Log likelihood from the four counts, with ``0 log 0 = 0``."""
    pos0 = n_p - n_pm
    neg0 = n - n_m - pos0
    return _xlogy(pos0, pi0) + _xlogy(neg0, 1.0 - pi0) + _xlogy(n_pm, pi1) + _xlogy(n_m - n_pm, 1.0 - pi1)


def log_likelihood(s: SuffStats, pp: ProbPair) -> float:
    """Log likelihood of the outcome given the partition and the two rates.

    Algebraically ``n log(1-pi0) + n_pm log(o1/o0) + n_p log(o0) + n_m log(o10)``
    with odds ``o0, o1`` and ``o10 = (1-pi1)/(1-pi0)``; it is evaluated in the
    equivalent count form so boundary probabilities stay finite when the
    corresponding counts are zero.
    """
    return loglike_counts(s.n, s.n_p, s.n_m, s.n_pm, pp.pi0, pp.pi1)


def mle_probs(s: SuffStats) -> MleEstimate:
    """Maximum likelihood rates: positives among unmarked / among marked rows.

    An empty regime leaves its rate unidentified; it is reported as 0 and
    flagged.
    """
    unmarked = s.n - s.n_m
    deg0 = unmarked == 0
    deg1 = s.n_m == 0
    pi0 = 0.0 if deg0 else (s.n_p - s.n_pm) / unmarked
    pi1 = 0.0 if deg1 else s.n_pm / s.n_m
    return MleEstimate(pi0, pi1, deg0, deg1)


@lru_cache(maxsize=None)
def _log_binom_table(p: int) -> np.ndarray:
    k = np.arange(p + 1)
    return gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1)


@lru_cache(maxsize=None)
def _log_size_pmf(theta: float, p: int) -> np.ndarray:
    """Poisson(theta) log pmf truncated and renormalised on {1..p}; -inf at 0."""
    k = np.arange(p + 1)
    logpmf = k * math.log(theta) - theta - gammaln(k + 1)
    logpmf[0] = -np.inf
    if p >= 1:
        logz = np.logaddexp.reduce(logpmf[1:])
        logpmf[1:] -= logz
    return logpmf


@lru_cache(maxsize=None)
def term_log_prior_table(cfg: PriorConfig, p: int) -> tuple[float, ...]:
    """``log P(S | k) + log P(k)`` for a term of each size ``k = 0..p``."""
    if cfg.uniform_subsets:
        return (0.0,) * (p + 1)
    table = -_log_binom_table(p)
    if cfg.theta is not None:
        table = table + _log_size_pmf(float(cfg.theta), p)
    return tuple(float(v) for v in table)


def log_prior_num_terms(m: int, cfg: PriorConfig) -> float:
    if cfg.p_geom is None:
        return 0.0
    if m < 1:
        return -math.inf
    return math.log(cfg.p_geom) + (m - 1) * math.log1p(-cfg.p_geom)


def log_prior_masks(masks, cfg: PriorConfig, p: int) -> float:
    table = term_log_prior_table(cfg, p)
    return sum(table[t.bit_count()] for t in masks) + log_prior_num_terms(len(masks), cfg)


def log_prior_f(f: DnfFunction, cfg: PriorConfig, p: int) -> float:
    """Hierarchical prior: per term ``-log C(p,k) + log P(k)``, plus ``log P(m)``."""
    return log_prior_masks(f.masks, cfg, p)


@lru_cache(maxsize=None)
def _betaln(a: float, b: float) -> float:
    return float(betaln(a, b))


def log_beta_density(x: float, a: float, b: float) -> float:
    if not 0.0 <= x <= 1.0:
        return -math.inf
    if (x == 0.0 and a < 1.0) or (x == 1.0 and b < 1.0):
        return math.inf
    return _xlogy(a - 1.0, x) + _xlogy(b - 1.0, 1.0 - x) - _betaln(a, b)


def log_prior_probs(pp: ProbPair, cfg: PriorConfig) -> float:
    if cfg.enforce_order and pp.pi0 > pp.pi1:
        return -math.inf
    return log_beta_density(pp.pi0, *cfg.beta0) + log_beta_density(pp.pi1, *cfg.beta1)


def log_posterior(f: DnfFunction, pp: ProbPair, d: Dataset, cfg: PriorConfig) -> LogPosterior:
    if f.width != d.p:
        raise ValueError("DNF width does not match dataset")
    s = suffstats(build_coverage(f, d), d)
    return LogPosterior(log_likelihood(s, pp), log_prior_f(f, cfg, d.p), log_prior_probs(pp, cfg))


def gibbs_conditionals(s: SuffStats, cfg: PriorConfig) -> tuple[tuple[float, float], tuple[float, float]]:
    """Beta parameters of the full conditionals of ``pi0`` and ``pi1``."""
    a0, b0 = cfg.beta0
    a1, b1 = cfg.beta1
    pos0 = s.n_p - s.n_pm
    neg0 = (s.n - s.n_m) - pos0
    return (a0 + pos0, b0 + neg0), (a1 + s.n_pm, b1 + s.n_m - s.n_pm)


def draw_probs(
    s: SuffStats, cfg: PriorConfig, rng: np.random.Generator, current: ProbPair | None = None,
    which: str = "both", max_tries: int = 100,
) -> ProbPair:
    """Gibbs draw of one or both rates from their conditionals.

    With ``cfg.enforce_order`` draws violating ``pi0 <= pi1`` are rejected and
    redrawn; after ``max_tries`` failures the current value is kept.
    """
    (a0, b0), (a1, b1) = gibbs_conditionals(s, cfg)
    for _ in range(max_tries):
        pi0 = rng.beta(a0, b0) if which in ("both", "pi0") else current.pi0
        pi1 = rng.beta(a1, b1) if which in ("both", "pi1") else current.pi1
        if not cfg.enforce_order or pi0 <= pi1:
            return ProbPair(float(pi0), float(pi1))
    if current is None:
        raise RuntimeError("could not draw ordered probabilities")
    return current
