"""Scoring, AUC, repeated hold-out cross-validation and recovery experiments."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .anneal import AnnealConfig, AnnealResult, run_restarts
from .core import Dataset, DnfFunction, bits_from_mask, build_coverage, evaluate, render_dnf
from .data import SimSpec, simulate, split_indices
from .posterior import PriorConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FittedModel:
    f: DnfFunction
    pi0_hat: float
    pi1_hat: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0 <= self.pi0_hat <= 1 and 0 <= self.pi1_hat <= 1):
            raise ValueError("fitted probabilities must lie in [0, 1]")

    @classmethod
    def from_anneal(cls, r: AnnealResult, provenance: dict | None = None) -> "FittedModel":
        return cls(r.dnf, r.pp.pi0, r.pp.pi1, dict(provenance or {}))


def predict_score(model: FittedModel, x) -> float:
    """Two-regime probability of a positive outcome for one row."""
    return model.pi1_hat if evaluate(model.f, x) else model.pi0_hat


def predict_scores(model: FittedModel, d: Dataset) -> np.ndarray:
    if model.f.width != d.p:
        raise ValueError(f"model width {model.f.width} != dataset width {d.p}")
    marked = bits_from_mask(build_coverage(model.f, d).marked, d.n).astype(bool)
    return np.where(marked, model.pi1_hat, model.pi0_hat)


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied pairs count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-d arrays of equal length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined with a single class")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def auc_from_counts(n: int, n_p: int, n_m: int, n_pm: int, pi0: float, pi1: float) -> float:
    """AUC of the two-valued scorer straight from the partition counts."""
    n_neg = n - n_p
    if n_p == 0 or n_neg == 0:
        raise ValueError("AUC is undefined with a single class")
    neg_m = n_m - n_pm
    pos_u = n_p - n_pm
    neg_u = n_neg - neg_m
    if pi1 == pi0:
        return 0.5
    hi_pos, hi_neg, lo_pos, lo_neg = (n_pm, neg_m, pos_u, neg_u) if pi1 > pi0 else (pos_u, neg_u, n_pm, neg_m)
    concordant = hi_pos * lo_neg
    ties = hi_pos * hi_neg + lo_pos * lo_neg
    return (concordant + 0.5 * ties) / (n_p * n_neg)


# cross-validation

@dataclass(frozen=True)
class CvRow:
    theta: float | None
    p_geom: float | None
    rep: int
    m: int
    sum_k: int
    auc: float
    pi0: float
    pi1: float
    logpost: float
    rule: str


@dataclass
class CvReport:
    rows: list[CvRow]

    def cells(self) -> list[tuple]:
        seen = []
        for r in self.rows:
            if (r.theta, r.p_geom) not in seen:
                seen.append((r.theta, r.p_geom))
        return seen

    def summary(self) -> list[dict]:
        out = []
        for theta, pg in self.cells():
            rs = [r for r in self.rows if (r.theta, r.p_geom) == (theta, pg)]
            out.append({
                "theta": theta, "p_geom": pg, "reps": len(rs),
                "m": float(np.mean([r.m for r in rs])),
                "sum_k": float(np.mean([r.sum_k for r in rs])),
                "auc": float(np.mean([r.auc for r in rs])),
            })
        return out

    def write_reps_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "p_geom", "rep", "m", "sum_k", "auc", "pi0", "pi1", "logpost"])
            for r in self.rows:
                w.writerow([_fmt(r.theta), _fmt(r.p_geom), r.rep, r.m, r.sum_k,
                            repr(r.auc), repr(r.pi0), repr(r.pi1), repr(r.logpost)])

    def write_summary_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "p_geom", "reps", "mean_m", "mean_sum_k", "mean_auc"])
            for s in self.summary():
                w.writerow([_fmt(s["theta"]), _fmt(s["p_geom"]), s["reps"],
                            repr(s["m"]), repr(s["sum_k"]), repr(s["auc"])])

    def write_rules(self, path):
        with open(path, "w") as fh:
            for r in self.rows:
                fh.write(f"theta={_fmt(r.theta)} p_geom={_fmt(r.p_geom)} rep={r.rep} auc={r.auc!r}\n")
                fh.write(r.rule + "\n\n")


def _fmt(v) -> str:
    return "flat" if v is None else repr(float(v))


def _cv_job(args) -> CvRow:
    d, prior, acfg, rep, split_seed, fit_seed, fraction = args
    tr, te = split_indices(d.n, fraction, split_seed)
    assert not set(tr.tolist()) & set(te.tolist()), "train and test rows overlap"
    train, test = d.subset(tr), d.subset(te)
    best, _ = run_restarts(train, prior, acfg, seed=fit_seed, jobs=1, keep_traces=False)
    model = FittedModel.from_anneal(best)
    a = auc(predict_scores(model, test), test.y_bits)
    return CvRow(prior.theta, prior.p_geom, rep, best.m, best.sum_k, a,
                 best.pp.pi0, best.pp.pi1, best.log_post, render_dnf(model.f, d.names))


def crossval(
    d: Dataset,
    grid: Sequence[PriorConfig],
    acfg: AnnealConfig,
    repetitions: int = 10,
    seed: int = 0,
    fraction: float = 0.5,
    jobs: int = 1,
) -> CvReport:
    """Repeated random hold-out over a grid of priors.

    Repetition ``r`` uses the same split for every grid cell, so cells are
    compared on identical data. Rows are ordered by grid cell, then
    repetition, whatever ``jobs`` is.
    """
    if not grid:
        raise ValueError("empty prior grid")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    jobs_args = []
    for c, prior in enumerate(grid):
        for r in range(repetitions):
            split_seed = np.random.SeedSequence([seed, r])
            fit_seed = np.random.SeedSequence([seed, r, c + 1])
            jobs_args.append((d, prior, acfg, r, split_seed, fit_seed, fraction))
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_cv_job, jobs_args))
    else:
        rows = []
        for a in jobs_args:
            rows.append(_cv_job(a))
            log.info("cv theta=%s p_geom=%s rep=%d auc=%.6f", _fmt(a[1].theta), _fmt(a[1].p_geom), a[3], rows[-1].auc)
    return CvReport(rows)


def prior_grid(thetas: Sequence, p_geoms: Sequence, beta0=(1.0, 1.0), beta1=(1.0, 1.0)) -> list[PriorConfig]:
    return [PriorConfig(beta0, beta1, theta=t, p_geom=g) for t in thetas for g in p_geoms]


# planted-term recovery

@dataclass(frozen=True)
class RecoveryRow:
    dataset: int
    pi0: float
    pi1: float
    m: int
    sum_k: int
    logpost: float
    exact: tuple[bool, ...]
    superset: tuple[bool, ...]
    support: tuple[int, ...]


@dataclass
class RecoveryReport:
    spec: SimSpec
    rows: list[RecoveryRow]

    @property
    def n_terms(self) -> int:
        return len(self.spec.term_sizes)

    def term_rates(self, exact: bool = True) -> list[float]:
        hits = [r.exact if exact else r.superset for r in self.rows]
        return [float(np.mean([h[t] for h in hits])) for t in range(self.n_terms)]

    def all_recovered(self) -> int:
        return sum(all(r.exact) for r in self.rows)

    def mean(self, attr: str) -> float:
        return float(np.mean([getattr(r, attr) for r in self.rows]))

    def write_csv(self, path):
        t = self.n_terms
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "pi0", "pi1", "m", "sum_k", "logpost"]
                       + [f"term{i}_exact" for i in range(t)]
                       + [f"term{i}_superset" for i in range(t)]
                       + [f"term{i}_support" for i in range(t)])
            for r in self.rows:
                w.writerow([r.dataset, repr(r.pi0), repr(r.pi1), r.m, r.sum_k, repr(r.logpost)]
                           + [int(v) for v in r.exact] + [int(v) for v in r.superset] + list(r.support))


def term_hits(fitted: DnfFunction, planted: DnfFunction) -> tuple[tuple[bool, ...], tuple[bool, ...]]:
    """Per planted term: exact match with some fitted term, and containment in one."""
    fm = fitted.masks
    exact = tuple(t in fm for t in planted.masks)
    sup = tuple(any(t & u == t for u in fm) for t in planted.masks)
    return exact, sup


def _recovery_job(args) -> RecoveryRow:
    spec, prior, acfg, r, fit_seed = args
    sim = simulate(spec)
    d = sim.dataset
    best, _ = run_restarts(d, prior, acfg, seed=fit_seed, jobs=1, keep_traces=False)
    exact, sup = term_hits(best.dnf, sim.true_f)
    support = tuple(
        bits_from_mask(build_coverage(DnfFunction.from_masks([t], d.p), d).marked, d.n).sum().item()
        for t in sim.true_f.masks
    )
    return RecoveryRow(r, best.pp.pi0, best.pp.pi1, best.m, best.sum_k, best.log_post, exact, sup, support)


def dataset_seed(base: int, r: int) -> int:
    return int(np.random.SeedSequence([base, r]).generate_state(1)[0])


def recovery_experiment(
    spec: SimSpec,
    prior: PriorConfig,
    acfg: AnnealConfig,
    repetitions: int = 10,
    seed: int = 0,
    jobs: int = 1,
) -> RecoveryReport:
    """Simulate ``repetitions`` datasets from ``spec`` and anneal each one.

    Dataset ``r`` is simulated with ``dataset_seed(spec.seed, r)``; the
    annealer's restarts descend from ``SeedSequence([seed, r])``.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    args = [
        (replace(spec, seed=dataset_seed(spec.seed, r)), prior, acfg, r, np.random.SeedSequence([seed, r]))
        for r in range(repetitions)
    ]
    if jobs > 1 and repetitions > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_recovery_job, args))
    else:
        rows = [_recovery_job(a) for a in args]
    return RecoveryReport(spec, rows)

