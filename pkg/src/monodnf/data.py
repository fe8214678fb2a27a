"""Synthetic data, categorical one-hot encoding, splitting and CSV interchange."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Dataset, DnfFunction

log = logging.getLogger(__name__)

MUSHROOM_ATTRIBUTES = (
    "cap-shape", "cap-surface", "cap-color", "bruises", "odor", "gill-attachment",
    "gill-spacing", "gill-size", "gill-color", "stalk-shape", "stalk-root",
    "stalk-surface-above-ring", "stalk-surface-below-ring", "stalk-color-above-ring",
    "stalk-color-below-ring", "veil-type", "veil-color", "ring-number", "ring-type",
    "spore-print-color", "population", "habitat",
)


@dataclass(frozen=True)
class SimSpec:
    n: int
    p: int
    term_sizes: tuple[int, ...]
    pi0: float
    pi1: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "term_sizes", tuple(int(k) for k in self.term_sizes))
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if any(k < 1 for k in self.term_sizes) or sum(self.term_sizes) > self.p:
            raise ValueError("term sizes must be positive and sum to at most p")
        if not (0 <= self.pi0 <= 1 and 0 <= self.pi1 <= 1):
            raise ValueError("pi0 and pi1 must lie in [0, 1]")


@dataclass(frozen=True)
class SimOutput:
    dataset: Dataset
    true_f: DnfFunction
    beta: np.ndarray


def planted_dnf(term_sizes: Sequence[int], p: int) -> DnfFunction:
    """Consecutive disjoint index blocks: sizes (2, 3) give {0,1} OR {2,3,4}."""
    terms, start = [], 0
    for k in term_sizes:
        terms.append(range(start, start + k))
        start += k
    return DnfFunction.from_indices(terms, p)


def simulate(spec: SimSpec) -> SimOutput:
    """Draw column rates uniformly, Bernoulli rows, then outcomes by regime."""
    rng = np.random.default_rng(spec.seed)
    f = planted_dnf(spec.term_sizes, spec.p)
    beta = rng.uniform(size=spec.p)
    X = (rng.uniform(size=(spec.n, spec.p)) < beta).astype(np.uint8)
    marked = np.zeros(spec.n, dtype=bool)
    for t in f.terms:
        marked |= X[:, t.indices()].all(axis=1)
    rate = np.where(marked, spec.pi1, spec.pi0)
    y = (rng.uniform(size=spec.n) < rate).astype(np.uint8)
    names = [f"x{j}" for j in range(spec.p)]
    return SimOutput(Dataset.from_arrays(X, y, names), f, beta)


@dataclass(frozen=True)
class CategoricalTable:
    attributes: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    labels: tuple[str, ...]
    positive_label: str = "p"

    def __post_init__(self):
        if not self.rows:
            raise ValueError("empty table")
        if any(len(r) != len(self.attributes) for r in self.rows):
            raise ValueError("ragged table")
        if len(self.labels) != len(self.rows):
            raise ValueError("one class label per row required")
        if len(set(self.labels) - {self.positive_label}) > 1:
            raise ValueError("class column is not binary")


def one_hot_encode(t: CategoricalTable, negations: bool = False) -> Dataset:
    """One binary column per observed value, named ``attribute = value``.

    Values are ordered alphabetically within each attribute; ``?`` is an
    ordinary category. Attributes with a single value are dropped. With
    ``negations`` every column is followed by its complement ``NOT ...``.
    """
    cols, names = [], []
    data = np.asarray(t.rows, dtype=object)
    for a, attr in enumerate(t.attributes):
        values = sorted(set(data[:, a]))
        if len(values) < 2:
            log.warning("dropping constant attribute %r", attr)
            continue
        for v in values:
            cols.append(data[:, a] == v)
            names.append(f"{attr} = {v}")
    if not cols:
        raise ValueError("every attribute is constant; nothing to encode")
    X = np.column_stack(cols).astype(np.uint8)
    if negations:
        X, names = _with_negations(X, names)
    y = np.array([lab == t.positive_label for lab in t.labels], dtype=np.uint8)
    return Dataset.from_arrays(X, y, names)


def _with_negations(X, names):
    out = np.empty((X.shape[0], 2 * X.shape[1]), dtype=np.uint8)
    out[:, 0::2] = X
    out[:, 1::2] = 1 - X
    nn = []
    for nm in names:
        nn += [nm, f"NOT {nm}"]
    return out, nn


def load_mushroom(path, attributes: Sequence[str] = MUSHROOM_ATTRIBUTES) -> CategoricalTable:
    """Raw UCI file: comma-separated letter codes, class (``e``/``p``) first."""
    rows, labels = [], []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec:
                continue
            if len(rec) != len(attributes) + 1:
                raise ValueError(f"{path}:{lineno}: expected {len(attributes) + 1} fields, got {len(rec)}")
            labels.append(rec[0].strip())
            rows.append(tuple(v.strip() for v in rec[1:]))
    if set(labels) - {"e", "p"}:
        raise ValueError("class column must contain only 'e' and 'p'")
    return CategoricalTable(tuple(attributes), tuple(rows), tuple(labels), "p")


def split_indices(n: int, fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    n_train = int(np.floor(fraction * n))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of n={n} at {fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(d: Dataset, fraction: float, seed) -> tuple[Dataset, Dataset]:
    """Unstratified random split: ``floor(fraction * n)`` rows train, the rest test."""
    tr, te = split_indices(d.n, fraction, seed)
    return d.subset(tr), d.subset(te)


def save_dataset(d: Dataset, path, y_column: str = "y"):
    X = d.X
    y = d.y_bits
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(d.names) + [y_column])
        for i in range(d.n):
            w.writerow([int(v) for v in X[i]] + [int(y[i])])


def load_csv(path, y_column: str = "y") -> Dataset:
    """Header of feature names, then 0/1 cells; ``y_column`` holds the outcome."""
    with open(path, newline="") as fh:
        records = [r for r in csv.reader(fh) if r]
    if not records:
        raise ValueError(f"{path}: empty file")
    header, body = records[0], records[1:]
    if y_column not in header:
        raise ValueError(f"{path}: no outcome column {y_column!r}")
    yi = header.index(y_column)
    cells = []
    for lineno, r in enumerate(body, 2):
        if len(r) != len(header):
            raise ValueError(f"{path}:{lineno}: ragged row")
        for v in r:
            if v not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: non-binary cell {v!r}")
        cells.append([int(v) for v in r])
    arr = np.array(cells, dtype=np.uint8).reshape(len(cells), len(header))
    keep = [j for j in range(len(header)) if j != yi]
    return Dataset.from_arrays(arr[:, keep], arr[:, yi], [header[j] for j in keep])

