"""Metropolis-within-Gibbs sampler for a single conjunction (one marker).

The marker is a ``p``-bit indicator ``xi``. Each sweep draws ``(pi0, pi1)``
from their Beta conditionals, then proposes flipping one uniformly chosen
bit of ``xi`` and accepts with the posterior ratio (the proposal is
symmetric).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, SuffStats, indices_from_mask, term_coverage
from .posterior import PriorConfig, ProbPair, draw_probs, log_prior_probs, loglike_counts, term_log_prior_table


@dataclass(frozen=True)
class ChainState:
    xi: int
    pp: ProbPair
    coverage: int
    stats: SuffStats
    log_post: float

    @property
    def k(self) -> int:
        return self.xi.bit_count()


@dataclass
class ChainTrace:
    p: int
    iteration: list[int] = field(default_factory=list)
    k: list[int] = field(default_factory=list)
    pi0: list[float] = field(default_factory=list)
    pi1: list[float] = field(default_factory=list)
    log_post: list[float] = field(default_factory=list)
    markers: list[int] = field(default_factory=list)
    accepted: int = 0
    proposed: int = 0

    def __post_init__(self):
        self.inclusion = np.zeros(self.p, dtype=np.int64)

    def record(self, it: int, state: ChainState):
        self.iteration.append(it)
        self.k.append(state.k)
        self.pi0.append(state.pp.pi0)
        self.pi1.append(state.pp.pi1)
        self.log_post.append(state.log_post)
        self.markers.append(state.xi)
        for j in indices_from_mask(state.xi):
            self.inclusion[j] += 1

    def __len__(self):
        return len(self.iteration)

    @property
    def inclusion_freq(self) -> np.ndarray:
        return self.inclusion / max(len(self), 1)

    def top_variables(self, count: int) -> list[int]:
        order = np.lexsort((np.arange(self.p), -self.inclusion))
        return [int(j) for j in order[:count]]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "k", "pi0", "pi1", "logpost"])
            for row in zip(self.iteration, self.k, self.pi0, self.pi1, self.log_post):
                w.writerow([row[0], row[1], repr(row[2]), repr(row[3]), repr(row[4])])


def marker_log_prior(k: int, cfg: PriorConfig, p: int) -> float:
    """Prior of a single marker of size ``k``; ``k = 0`` is allowed unless sizes are Poisson."""
    return term_log_prior_table(cfg, p)[k]


def make_state(xi: int, pp: ProbPair, d: Dataset, cfg: PriorConfig) -> ChainState:
    cov = term_coverage(xi, d)
    stats = SuffStats(d.n, d.n_p, cov.bit_count(), (cov & d.y).bit_count())
    return _state(xi, pp, cov, stats, d, cfg)


def flip_log_ratio(state: ChainState, j: int, d: Dataset, cfg: PriorConfig) -> tuple[float, int, SuffStats]:
    """Log posterior ratio of flipping bit ``j``, plus the proposal's coverage and stats."""
    bit = 1 << j
    xi = state.xi ^ bit
    if xi & bit:
        cov = state.coverage & d.columns[j]
    else:
        cov = term_coverage(xi, d)
    n_m = cov.bit_count()
    n_pm = (cov & d.y).bit_count()
    pp = state.pp
    s = state.stats
    table = term_log_prior_table(cfg, d.p)
    delta = (
        loglike_counts(d.n, d.n_p, n_m, n_pm, pp.pi0, pp.pi1)
        - loglike_counts(d.n, d.n_p, s.n_m, s.n_pm, pp.pi0, pp.pi1)
        + table[xi.bit_count()]
        - table[state.xi.bit_count()]
    )
    if math.isnan(delta):
        delta = -math.inf
    return delta, cov, SuffStats(d.n, d.n_p, n_m, n_pm)


def gibbs_probs(state: ChainState, d: Dataset, cfg: PriorConfig, rng: np.random.Generator) -> ChainState:
    pp = draw_probs(state.stats, cfg, rng, current=state.pp)
    return _state(state.xi, pp, state.coverage, state.stats, d, cfg)


def _state(xi, pp, cov, stats, d, cfg) -> ChainState:
    lp = (
        loglike_counts(d.n, d.n_p, stats.n_m, stats.n_pm, pp.pi0, pp.pi1)
        + marker_log_prior(xi.bit_count(), cfg, d.p)
        + log_prior_probs(pp, cfg)
    )
    return ChainState(xi, pp, cov, stats, lp)


def step(state: ChainState, d: Dataset, cfg: PriorConfig, rng: np.random.Generator) -> tuple[ChainState, bool]:
    """One sweep: Gibbs draw of the rates, then a Metropolis single-bit flip.

    Returns the new state and whether the flip was accepted.
    """
    state = gibbs_probs(state, d, cfg, rng)
    j = int(rng.integers(d.p))
    delta, cov, stats = flip_log_ratio(state, j, d, cfg)
    u = rng.random()
    if delta >= 0 or math.log(u) < delta:
        xi = state.xi ^ (1 << j)
        return _state(xi, state.pp, cov, stats, d, cfg), True
    return state, False


def initial_marker(d: Dataset, cfg: PriorConfig, rng: np.random.Generator) -> int:
    """A uniformly drawn positive row's on-set, or a random single variable.

    The fallback applies when there are no positives or the drawn row is
    empty and the size prior excludes ``k = 0``.
    """
    positives = d.positive_rows()
    if positives:
        xi = d.rows[positives[int(rng.integers(len(positives)))]]
        if xi or math.isfinite(marker_log_prior(0, cfg, d.p)):
            return xi
    return 1 << int(rng.integers(d.p))


def run_chain(
    d: Dataset,
    cfg: PriorConfig,
    iters: int = 10_000,
    burnin: int = 5_000,
    seed=0,
    init_xi: int | None = None,
    init_pp: ProbPair | None = None,
    check_every: int = 0,
) -> ChainTrace:
    """Run one chain and record the post-burn-in states.

    ``check_every > 0`` rebuilds the coverage from scratch every that many
    iterations and asserts it matches the incremental state.
    """
    if not 0 <= burnin < iters:
        raise ValueError("need 0 <= burnin < iters")
    rng = np.random.default_rng(seed)
    xi = initial_marker(d, cfg, rng) if init_xi is None else init_xi
    if init_pp is None:
        cov = term_coverage(xi, d)
        stats = SuffStats(d.n, d.n_p, cov.bit_count(), (cov & d.y).bit_count())
        init_pp = draw_probs(stats, cfg, rng)
    state = make_state(xi, init_pp, d, cfg)
    trace = ChainTrace(d.p)
    for it in range(1, iters + 1):
        state, acc = step(state, d, cfg, rng)
        trace.proposed += 1
        trace.accepted += acc
        if check_every and it % check_every == 0:
            fresh = make_state(state.xi, state.pp, d, cfg)
            assert fresh.coverage == state.coverage and fresh.stats == state.stats
        if it > burnin:
            trace.record(it, state)
    return trace


def _run_chain_job(args):
    return run_chain(*args)


def run_chains(
    d: Dataset,
    cfg: PriorConfig,
    chains: int = 4,
    iters: int = 10_000,
    burnin: int = 5_000,
    seed: int = 0,
    jobs: int = 1,
) -> list[ChainTrace]:
    """Independent chains with seeds spawned from ``seed``; output order is chain order."""
    seeds = np.random.SeedSequence(seed).spawn(chains)
    args = [(d, cfg, iters, burnin, s) for s in seeds]
    if jobs > 1 and chains > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_chain_job, args))
    return [_run_chain_job(a) for a in args]


def write_inclusion_csv(traces: list[ChainTrace], names, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "name"] + [f"chain{c}" for c in range(len(traces))] + ["pooled"])
        total = sum(len(t) for t in traces)
        pooled = sum(t.inclusion for t in traces)
        for j in range(traces[0].p):
            w.writerow(
                [j, names[j]]
                + [repr(float(t.inclusion_freq[j])) for t in traces]
                + [repr(float(pooled[j] / max(total, 1)))]
            )
