"""Simulated annealing over monotone DNFs with seven move types.

Moves (1-based, as in ``AnnealConfig.move_weights``):

1. Gibbs draw of ``pi0``;
2. Gibbs draw of ``pi1``;
3. shrink: pick a term with probability proportional to its size, clear one
   of its bits;
4. grow: pick a term with probability proportional to ``1/size`` (full
   terms excluded), set one of its clear bits;
5. birth from data: add the on-set of a uniformly drawn positive row;
6. merge: replace a uniformly drawn pair of terms by their intersection;
7. death: remove a uniformly drawn term.

Moves 3-7 are Metropolis steps on the posterior. Move 5 alone is accepted
with ``min(1, ratio * lambda_i)`` where ``log lambda_i = ln_lambda0 +
i * log(rho)`` decays every iteration.
"""

from __future__ import annotations

import bisect
import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, DnfFunction, SuffStats, indices_from_mask, term_coverage
from .posterior import (
    PriorConfig,
    ProbPair,
    draw_probs,
    log_prior_num_terms,
    log_prior_probs,
    loglike_counts,
    term_log_prior_table,
)

log = logging.getLogger(__name__)

MOVE_NAMES = ("init", "gibbs_pi0", "gibbs_pi1", "shrink", "grow", "birth", "merge", "death")


@dataclass(frozen=True)
class AnnealConfig:
    ln_lambda0: float = 1000.0
    rho: float = 0.9
    steps: int = 10_000
    move_weights: tuple[float, ...] = (1 / 7,) * 7
    m0: int = 1
    restarts: int = 20
    boost_all_dimension_moves: bool = False
    check_every: int = 0

    def __post_init__(self):
        w = tuple(float(v) for v in self.move_weights)
        object.__setattr__(self, "move_weights", w)
        if len(w) != 7 or min(w) < 0 or not math.isclose(sum(w), 1.0, abs_tol=1e-9):
            raise ValueError("move_weights must be 7 non-negative numbers summing to 1")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.steps < 1 or self.m0 < 1 or self.restarts < 1:
            raise ValueError("steps, m0 and restarts must be >= 1")


@dataclass
class AnnealResult:
    terms: tuple[int, ...]
    pp: ProbPair
    log_post: float
    p: int
    trace: dict = field(repr=False, default_factory=dict)
    wall_time: float = 0.0
    seed: object = None

    @property
    def dnf(self) -> DnfFunction:
        return DnfFunction.from_masks(self.terms, self.p)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def sum_k(self) -> int:
        return sum(t.bit_count() for t in self.terms)

    def write_trace_csv(self, path):
        tr = self.trace
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "move", "accepted", "m", "sum_k", "logpost"])
            for i in range(len(tr["move"])):
                w.writerow([
                    i, MOVE_NAMES[tr["move"][i]], int(tr["accepted"][i]),
                    int(tr["m"][i]), int(tr["sum_k"][i]), repr(float(tr["log_post"][i])),
                ])

    def to_json(self, names=None) -> dict:
        names = names or [f"x{j}" for j in range(self.p)]
        return {
            "terms": [
                {"vars": indices_from_mask(t), "names": [names[j] for j in indices_from_mask(t)]}
                for t in self.terms
            ],
            "pi0": self.pp.pi0,
            "pi1": self.pp.pi1,
            "logpost": self.log_post,
        }


class Annealer:
    """Mutable search state with incremental coverage bookkeeping."""

    def __init__(self, d: Dataset, prior: PriorConfig, acfg: AnnealConfig, rng: np.random.Generator):
        self.d = d
        self.prior = prior
        self.acfg = acfg
        self.rng = rng
        self.table = term_log_prior_table(prior, d.p)
        self.positives = d.positive_rows()
        self._row_cov: dict[int, int] = {}
        self.cum_weights = list(np.cumsum(acfg.move_weights))
        self.cum_weights[-1] = 1.0
        self.terms: list[int] = []
        self.covs: list[int] = []
        self.marked = 0
        self.n_m = 0
        self.n_pm = 0
        self.pp = ProbPair(0.5, 0.5)

    # --- state ---------------------------------------------------------

    def set_state(self, terms, pp: ProbPair | None = None):
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate initial terms")
        self.terms = list(terms)
        self.covs = [term_coverage(t, self.d) for t in self.terms]
        self._refresh_marked()
        self.pp = pp if pp is not None else draw_probs(self.stats(), self.prior, self.rng)
        self.lp_terms = self._terms_prior(self.terms)
        self.lp_probs = log_prior_probs(self.pp, self.prior)
        self.loglike = self._loglike(self.n_m, self.n_pm, self.pp)

    def _refresh_marked(self):
        marked = 0
        for c in self.covs:
            marked |= c
        self.marked = marked
        self.n_m = marked.bit_count()
        self.n_pm = (marked & self.d.y).bit_count()

    def _terms_prior(self, terms) -> float:
        return sum(self.table[t.bit_count()] for t in terms) + log_prior_num_terms(len(terms), self.prior)

    def _loglike(self, n_m, n_pm, pp) -> float:
        return loglike_counts(self.d.n, self.d.n_p, n_m, n_pm, pp.pi0, pp.pi1)

    def stats(self) -> SuffStats:
        return SuffStats(self.d.n, self.d.n_p, self.n_m, self.n_pm)

    @property
    def log_post(self) -> float:
        return self.loglike + self.lp_terms + self.lp_probs

    @property
    def sum_k(self) -> int:
        return sum(t.bit_count() for t in self.terms)

    def check_cache(self):
        for t, c in zip(self.terms, self.covs):
            assert c == term_coverage(t, self.d), "stale term coverage"
        marked = 0
        for c in self.covs:
            marked |= c
        assert marked == self.marked and marked.bit_count() == self.n_m
        assert (marked & self.d.y).bit_count() == self.n_pm

    # --- proposals -----------------------------------------------------

    def _row_coverage(self, row: int) -> int:
        cov = self._row_cov.get(row)
        if cov is None:
            cov = self._row_cov[row] = term_coverage(self.d.rows[row], self.d)
        return cov

    def _try(self, new_terms, new_covs, boost: float = 0.0) -> bool:
        """Metropolis test of replacing the term list; commits on acceptance."""
        marked = 0
        for c in new_covs:
            marked |= c
        n_m = marked.bit_count()
        n_pm = (marked & self.d.y).bit_count()
        ll = self._loglike(n_m, n_pm, self.pp)
        lpt = self._terms_prior(new_terms)
        delta = (ll + lpt) - (self.loglike + self.lp_terms)
        if math.isnan(delta):
            delta = -math.inf
        if delta < 0 and not math.log(self.rng.random()) < delta + boost:
            return False
        self.terms, self.covs = new_terms, new_covs
        self.marked, self.n_m, self.n_pm = marked, n_m, n_pm
        self.loglike, self.lp_terms = ll, lpt
        return True

    def move_gibbs(self, which: str) -> bool:
        self.pp = draw_probs(self.stats(), self.prior, self.rng, current=self.pp, which=which)
        self.lp_probs = log_prior_probs(self.pp, self.prior)
        self.loglike = self._loglike(self.n_m, self.n_pm, self.pp)
        return True

    def select_shrink(self) -> int | None:
        """Term index drawn proportionally to size."""
        sizes = [t.bit_count() for t in self.terms]
        total = sum(sizes)
        if total == 0:
            return None
        r = self.rng.random() * total
        acc = 0
        for i, k in enumerate(sizes):
            acc += k
            if r < acc:
                return i
        return len(sizes) - 1

    def move_shrink(self) -> bool:
        if not self.terms:
            return False
        i = self.select_shrink()
        t = self.terms[i]
        k = t.bit_count()
        if k <= 1:
            return False
        on = indices_from_mask(t)
        j = on[int(self.rng.integers(k))]
        new = t & ~(1 << j)
        if new in self.terms:
            return False
        terms = self.terms.copy()
        covs = self.covs.copy()
        terms[i] = new
        covs[i] = term_coverage(new, self.d)
        return self._try(terms, covs)

    def select_grow(self) -> int | None:
        """Term index drawn proportionally to ``1/size`` among non-full terms."""
        p = self.d.p
        weights = [1.0 / t.bit_count() if 0 < t.bit_count() < p else 0.0 for t in self.terms]
        total = sum(weights)
        if total == 0:
            return None
        r = self.rng.random() * total
        acc = 0.0
        last = None
        for i, wgt in enumerate(weights):
            if wgt:
                acc += wgt
                last = i
                if r < acc:
                    return i
        return last

    def move_grow(self) -> bool:
        if not self.terms:
            return False
        i = self.select_grow()
        if i is None:
            return False
        t = self.terms[i]
        off = [j for j in range(self.d.p) if not t >> j & 1]
        j = off[int(self.rng.integers(len(off)))]
        new = t | (1 << j)
        if new in self.terms:
            return False
        terms = self.terms.copy()
        covs = self.covs.copy()
        terms[i] = new
        covs[i] = self.covs[i] & self.d.columns[j]
        return self._try(terms, covs)

    def _lambda(self, step: int) -> float:
        return self.acfg.ln_lambda0 + step * math.log(self.acfg.rho)

    def move_birth(self, step: int) -> bool:
        if not self.positives:
            return False
        row = self.positives[int(self.rng.integers(len(self.positives)))]
        new = self.d.rows[row]
        if new == 0 or new in self.terms:
            return False
        return self._try(self.terms + [new], self.covs + [self._row_coverage(row)], boost=self._lambda(step))

    def _boost(self, step: int) -> float:
        return self._lambda(step) if self.acfg.boost_all_dimension_moves else 0.0

    def move_merge(self, step: int) -> bool:
        m = len(self.terms)
        if m < 2:
            return False
        a, b = self.rng.choice(m, size=2, replace=False).tolist()
        i, j = min(a, b), max(a, b)
        new = self.terms[i] & self.terms[j]
        rest = [t for idx, t in enumerate(self.terms) if idx not in (i, j)]
        if new == 0 or new in rest:
            return False
        covs = [c for idx, c in enumerate(self.covs) if idx not in (i, j)]
        return self._try(rest + [new], covs + [term_coverage(new, self.d)], boost=self._boost(step))

    def move_death(self, step: int) -> bool:
        m = len(self.terms)
        if m < 1:
            return False
        i = int(self.rng.integers(m))
        terms = self.terms[:i] + self.terms[i + 1:]
        covs = self.covs[:i] + self.covs[i + 1:]
        return self._try(terms, covs, boost=self._boost(step))

    def step(self, step: int) -> tuple[int, bool]:
        move = bisect.bisect_right(self.cum_weights, self.rng.random()) + 1
        move = min(move, 7)
        if move == 1:
            acc = self.move_gibbs("pi0")
        elif move == 2:
            acc = self.move_gibbs("pi1")
        elif move == 3:
            acc = self.move_shrink()
        elif move == 4:
            acc = self.move_grow()
        elif move == 5:
            acc = self.move_birth(step)
        elif move == 6:
            acc = self.move_merge(step)
        else:
            acc = self.move_death(step)
        return move, acc


def initial_terms(d: Dataset, m0: int, rng: np.random.Generator) -> list[int]:
    """On-sets of ``m0`` distinct positive rows (clamped if not enough exist)."""
    candidates = sorted({d.rows[i] for i in d.positive_rows() if d.rows[i]})
    if not candidates:
        raise ValueError("no non-empty positive rows to initialise from")
    if len(candidates) < m0:
        log.warning("only %d distinct positive rows; clamping m0=%d", len(candidates), m0)
        m0 = len(candidates)
    pick = rng.choice(len(candidates), size=m0, replace=False)
    return [candidates[i] for i in pick]


def anneal(
    d: Dataset,
    prior: PriorConfig,
    acfg: AnnealConfig,
    seed=0,
    init: list[int] | None = None,
    init_pp: ProbPair | None = None,
) -> AnnealResult:
    """One annealing run; returns the best state ever visited.

    Without ``init`` the start is ``acfg.m0`` positive rows with a Gibbs draw
    for the rates.
    """
    if d.n_p < 1:
        raise ValueError("annealing needs at least one positive sample")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    if init is None:
        init = initial_terms(d, acfg.m0, rng)
    ann = Annealer(d, prior, acfg, rng)
    ann.set_state(init, init_pp)

    steps = acfg.steps
    moves = np.zeros(steps + 1, dtype=np.int8)
    accepted = np.zeros(steps + 1, dtype=bool)
    ms = np.zeros(steps + 1, dtype=np.int32)
    sks = np.zeros(steps + 1, dtype=np.int32)
    lps = np.zeros(steps + 1)
    pi0s = np.zeros(steps + 1)
    pi1s = np.zeros(steps + 1)

    def record(i, mv, acc):
        moves[i] = mv
        accepted[i] = acc
        ms[i] = len(ann.terms)
        sks[i] = ann.sum_k
        lps[i] = ann.log_post
        pi0s[i] = ann.pp.pi0
        pi1s[i] = ann.pp.pi1

    record(0, 0, True)
    best = (ann.log_post, tuple(ann.terms), ann.pp)
    for i in range(1, steps + 1):
        mv, acc = ann.step(i - 1)
        record(i, mv, acc)
        if acfg.check_every and i % acfg.check_every == 0:
            ann.check_cache()
        if lps[i] > best[0]:
            best = (lps[i], tuple(ann.terms), ann.pp)
    trace = dict(move=moves, accepted=accepted, m=ms, sum_k=sks, log_post=lps, pi0=pi0s, pi1=pi1s)
    return AnnealResult(best[1], best[2], float(best[0]), d.p, trace, time.perf_counter() - t0, seed)


def _anneal_job(args):
    return anneal(*args)


def run_restarts(
    d: Dataset, prior: PriorConfig, acfg: AnnealConfig, seed=0, jobs: int = 1, keep_traces: bool = True,
) -> tuple[AnnealResult, list[AnnealResult]]:
    """Independent restarts; returns the best by log posterior and all results.

    Ties are broken by restart order, so the outcome does not depend on ``jobs``.
    """
    seeds = np.random.SeedSequence(seed).spawn(acfg.restarts) if not isinstance(seed, np.random.SeedSequence) \
        else seed.spawn(acfg.restarts)
    args = [(d, prior, acfg, s) for s in seeds]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_anneal_job, args))
    else:
        results = [_anneal_job(a) for a in args]
    if not keep_traces:
        for r in results:
            r.trace = {}
    best = max(results, key=lambda r: r.log_post)
    return best, results
