"""Reversible-jump sampler on sets of conjunctions (desk scale, small ``p``).

Dimension moves use the symmetric difference, which is its own inverse:

* death: pick an unordered pair ``{u1, u2}`` uniformly among ``C(m, 2)``
  pairs and replace it by ``u = u1 ^ u2``;
* birth: pick a term ``u`` uniformly among the current ``m - 1`` terms and
  ``w`` uniformly among all ``2**p`` subsets, and replace ``u`` by the pair
  ``(w, u ^ w)``.

A given birth result ``{w, u ^ w}`` is reached by two values of ``w``
(``w`` itself and ``u ^ w``), so the birth proposal mass of a specific
``m``-term set from its ``(m-1)``-term parent is ``2 * 2**-p / (m - 1)``
and the death proposal mass of the reverse step is ``1 / C(m, 2)``. With
equal selection probabilities for birth and death the Metropolis-Hastings
log ratio of a death is

    log pi(g) - log pi(f) + log(2 * 2**-p / (m - 1)) - log(1 / C(m, 2))

and a birth uses the negative of the proposal part. Proposals that create
an empty or duplicate term, or exceed ``max_terms``, are rejected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, DnfFunction, SuffStats, term_coverage
from .posterior import PriorConfig, ProbPair, draw_probs, log_prior_masks, log_prior_probs, loglike_counts

MAX_P = 12


@dataclass(frozen=True)
class RjState:
    terms: tuple[int, ...]
    pp: ProbPair
    log_post: float

    @property
    def m(self) -> int:
        return len(self.terms)

    def dnf(self, p: int) -> DnfFunction:
        return DnfFunction.from_masks(self.terms, p)


@dataclass
class RjTrace:
    iteration: list[int] = field(default_factory=list)
    m: list[int] = field(default_factory=list)
    log_post: list[float] = field(default_factory=list)
    states: list[frozenset] = field(default_factory=list)
    move_counts: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.iteration)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "m", "logpost"])
            for it, m, lp in zip(self.iteration, self.m, self.log_post):
                w.writerow([it, m, repr(lp)])


def stats_of(terms, d: Dataset) -> SuffStats:
    marked = 0
    for t in terms:
        marked |= term_coverage(t, d)
    return SuffStats(d.n, d.n_p, marked.bit_count(), (marked & d.y).bit_count())


def log_target(terms, pp: ProbPair, d: Dataset, cfg: PriorConfig) -> float:
    s = stats_of(terms, d)
    return (
        loglike_counts(s.n, s.n_p, s.n_m, s.n_pm, pp.pi0, pp.pi1)
        + log_prior_masks(terms, cfg, d.p)
        + log_prior_probs(pp, cfg)
    )


def death_log_q(m: int, p: int) -> float:
    """log q(g -> f) - log q(f -> g) for a death from ``m`` to ``m - 1`` terms."""
    return math.log(2.0 / (m - 1)) - p * math.log(2.0) + math.log(m * (m - 1) / 2)


def death_proposal(terms: tuple[int, ...], i: int, j: int) -> tuple[int, ...] | None:
    """Replace terms ``i < j`` by their symmetric difference, or ``None`` if invalid."""
    u = terms[i] ^ terms[j]
    rest = tuple(t for idx, t in enumerate(terms) if idx not in (i, j))
    if u == 0 or u in rest:
        return None
    return rest + (u,)


def birth_proposal(terms: tuple[int, ...], i: int, w: int, max_terms: int | None = None) -> tuple[int, ...] | None:
    """Replace term ``i`` by the pair ``(w, terms[i] ^ w)``, or ``None`` if invalid."""
    if max_terms is not None and len(terms) >= max_terms:
        return None
    u = terms[i]
    v = u ^ w
    rest = tuple(t for idx, t in enumerate(terms) if idx != i)
    if w == 0 or v == 0 or w == v or w in rest or v in rest:
        return None
    return rest + (w, v)


def flip_proposal(terms: tuple[int, ...], i: int, j: int) -> tuple[int, ...] | None:
    t = terms[i] ^ (1 << j)
    rest = terms[:i] + terms[i + 1:]
    if t == 0 or t in rest:
        return None
    return terms[:i] + (t,) + terms[i + 1:]


def death_move(state: RjState, d: Dataset, cfg: PriorConfig, rng: np.random.Generator):
    """Propose a merge; returns ``(proposal terms or None, log acceptance ratio)``."""
    m = state.m
    if m < 2:
        raise ValueError("death move needs at least two terms")
    i, j = sorted(rng.choice(m, size=2, replace=False).tolist())
    new = death_proposal(state.terms, i, j)
    if new is None:
        return None, -math.inf
    lt = log_target(new, state.pp, d, cfg)
    return new, lt - state.log_post + death_log_q(m, d.p)


def birth_move(state: RjState, d: Dataset, cfg: PriorConfig, rng: np.random.Generator, max_terms: int | None = None):
    """Propose a split; returns ``(proposal terms or None, log acceptance ratio)``."""
    if state.m < 1:
        raise ValueError("birth move needs at least one term")
    i = int(rng.integers(state.m))
    w = int(rng.integers(1 << d.p))
    new = birth_proposal(state.terms, i, w, max_terms)
    if new is None:
        return None, -math.inf
    lt = log_target(new, state.pp, d, cfg)
    return new, lt - state.log_post - death_log_q(state.m + 1, d.p)


def within_move(state: RjState, d: Dataset, cfg: PriorConfig, rng: np.random.Generator) -> RjState:
    """Gibbs draw of the rates, then a single-bit flip of one uniformly chosen term."""
    pp = draw_probs(stats_of(state.terms, d), cfg, rng, current=state.pp)
    state = RjState(state.terms, pp, log_target(state.terms, pp, d, cfg))
    i = int(rng.integers(state.m))
    j = int(rng.integers(d.p))
    new = flip_proposal(state.terms, i, j)
    if new is None:
        return state
    lt = log_target(new, pp, d, cfg)
    if _accept(lt - state.log_post, rng):
        return RjState(new, pp, lt)
    return state


def _accept(log_ratio: float, rng: np.random.Generator) -> bool:
    u = rng.random()
    return log_ratio >= 0 or math.log(u) < log_ratio


def rj_step(
    state: RjState, d: Dataset, cfg: PriorConfig, rng: np.random.Generator,
    move_probs=(0.5, 0.25, 0.25), max_terms: int | None = None,
) -> tuple[RjState, str, bool]:
    """One iteration; ``move_probs`` are (within, birth, death)."""
    r = rng.random()
    if r < move_probs[0]:
        return within_move(state, d, cfg, rng), "within", True
    if r < move_probs[0] + move_probs[1]:
        new, lr = birth_move(state, d, cfg, rng, max_terms)
        kind = "birth"
    else:
        if state.m < 2:
            return state, "death", False
        new, lr = death_move(state, d, cfg, rng)
        kind = "death"
    if new is not None and _accept(lr, rng):
        return RjState(new, state.pp, log_target(new, state.pp, d, cfg)), kind, True
    return state, kind, False


def run_rj(
    d: Dataset,
    cfg: PriorConfig,
    iters: int,
    seed=0,
    init_terms: tuple[int, ...] | None = None,
    move_probs=(0.5, 0.25, 0.25),
    max_terms: int | None = None,
    keep_states: bool = False,
) -> RjTrace:
    if d.p > MAX_P:
        raise ValueError(f"reversible-jump kernel limited to p <= {MAX_P} (got p={d.p})")
    if abs(sum(move_probs) - 1.0) > 1e-12 or min(move_probs) < 0:
        raise ValueError("move_probs must be a probability vector")
    if not math.isclose(move_probs[1], move_probs[2]):
        raise ValueError("birth and death must have equal selection probability")
    rng = np.random.default_rng(seed)
    if init_terms is None:
        init_terms = (int(rng.integers(1, 1 << d.p)),)
    pp = draw_probs(stats_of(init_terms, d), cfg, rng)
    state = RjState(tuple(init_terms), pp, log_target(init_terms, pp, d, cfg))
    trace = RjTrace()
    for it in range(1, iters + 1):
        state, kind, acc = rj_step(state, d, cfg, rng, move_probs, max_terms)
        key = f"{kind}_{'acc' if acc else 'rej'}"
        trace.move_counts[key] = trace.move_counts.get(key, 0) + 1
        trace.iteration.append(it)
        trace.m.append(state.m)
        trace.log_post.append(state.log_post)
        if keep_states:
            trace.states.append(frozenset(state.terms))
    return trace
