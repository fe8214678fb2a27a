"""Monotone DNF representation and bitset coverage machinery.

Every bit vector in this package is a plain Python ``int``. Conjunctions are
``p``-bit masks over variables; dataset columns, the outcome vector and
coverage vectors are ``n``-bit masks over rows (bit ``i`` is row ``i``). Word
level AND/OR and ``int.bit_count`` do the heavy lifting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def mask_from_indices(indices: Iterable[int]) -> int:
    mask = 0
    for j in indices:
        mask |= 1 << int(j)
    return mask


def indices_from_mask(mask: int) -> list[int]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return out


def mask_from_bits(bits) -> int:
    """Pack a 0/1 sequence (bit ``i`` = ``bits[i]``) into an int."""
    arr = np.asarray(bits, dtype=bool).ravel()
    if arr.size == 0:
        return 0
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")


def bits_from_mask(mask: int, width: int) -> np.ndarray:
    nbytes = (width + 7) // 8
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:width].astype(np.uint8)


@dataclass(frozen=True)
class Conjunction:
    """One implicant: the set of variables that must all be 1."""

    vars: int
    width: int

    def __post_init__(self):
        if self.vars < 0 or self.vars >> self.width:
            raise ValueError(f"variable mask does not fit in width {self.width}")

    @classmethod
    def from_indices(cls, indices: Iterable[int], width: int) -> "Conjunction":
        idx = list(indices)
        if any(j < 0 or j >= width for j in idx):
            raise ValueError(f"variable index out of range for width {width}")
        return cls(mask_from_indices(idx), width)

    @property
    def k(self) -> int:
        return self.vars.bit_count()

    def indices(self) -> list[int]:
        return indices_from_mask(self.vars)

    def __contains__(self, j: int) -> bool:
        return bool(self.vars >> j & 1)


@dataclass(frozen=True, eq=False)
class DnfFunction:
    """A monotone DNF: an ordered collection of distinct conjunctions.

    Term order is kept for rendering; equality ignores it.
    """

    terms: tuple[Conjunction, ...]
    width: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        masks = [t.vars for t in self.terms]
        if len(set(masks)) != len(masks):
            raise ValueError("duplicate terms in DNF")
        if any(t.width != self.width for t in self.terms):
            raise ValueError("term width does not match DNF width")

    @classmethod
    def from_masks(cls, masks: Iterable[int], width: int) -> "DnfFunction":
        return cls(tuple(Conjunction(int(m), width) for m in masks), width)

    @classmethod
    def from_indices(cls, terms: Iterable[Iterable[int]], width: int) -> "DnfFunction":
        return cls(tuple(Conjunction.from_indices(t, width) for t in terms), width)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def masks(self) -> tuple[int, ...]:
        return tuple(t.vars for t in self.terms)

    @property
    def sum_k(self) -> int:
        return sum(t.k for t in self.terms)

    def __eq__(self, other):
        if not isinstance(other, DnfFunction):
            return NotImplemented
        return self.width == other.width and set(self.masks) == set(other.masks)

    def __hash__(self):
        return hash((self.width, frozenset(self.masks)))

    def __len__(self):
        return len(self.terms)


@dataclass(frozen=True)
class Dataset:
    """Binary design matrix stored column-major as ``n``-bit ints.

    ``rows`` holds the transposed view (``p``-bit masks, one per sample),
    which the data-driven birth move and prediction use.
    """

    n: int
    p: int
    columns: tuple[int, ...]
    y: int
    rows: tuple[int, ...]
    feature_names: tuple[str, ...] | None = None
    n_p: int = field(init=False)

    def __post_init__(self):
        if len(self.columns) != self.p or len(self.rows) != self.n:
            raise ValueError("column/row count does not match (n, p)")
        if self.y >> self.n:
            raise ValueError("outcome vector wider than n")
        if self.feature_names is not None and len(self.feature_names) != self.p:
            raise ValueError("feature_names must have length p")
        object.__setattr__(self, "n_p", self.y.bit_count())

    @classmethod
    def from_arrays(cls, X, y, feature_names: Sequence[str] | None = None) -> "Dataset":
        X = np.asarray(X)
        y = np.asarray(y).ravel()
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        n, p = X.shape
        if y.shape[0] != n:
            raise ValueError("y length does not match the number of rows of X")
        for arr, name in ((X, "X"), (y, "y")):
            if arr.size and not np.isin(arr, (0, 1)).all():
                raise ValueError(f"{name} must be binary")
        Xb = X.astype(bool)
        columns = tuple(mask_from_bits(Xb[:, j]) for j in range(p))
        rows = tuple(mask_from_bits(Xb[i]) for i in range(n))
        names = tuple(feature_names) if feature_names is not None else None
        return cls(n, p, columns, mask_from_bits(y.astype(bool)), rows, names)

    @property
    def X(self) -> np.ndarray:
        return np.stack([bits_from_mask(r, self.p) for r in self.rows]) if self.n else np.zeros((0, self.p), np.uint8)

    @property
    def y_bits(self) -> np.ndarray:
        return bits_from_mask(self.y, self.n)

    @property
    def all_rows(self) -> int:
        return (1 << self.n) - 1

    @property
    def names(self) -> tuple[str, ...]:
        return self.feature_names or tuple(f"x{j}" for j in range(self.p))

    def positive_rows(self) -> list[int]:
        return indices_from_mask(self.y)

    def subset(self, index: Sequence[int]) -> "Dataset":
        index = np.asarray(index, dtype=int)
        return Dataset.from_arrays(self.X[index], self.y_bits[index], self.feature_names)


@dataclass(frozen=True)
class SuffStats:
    n: int
    n_p: int
    n_m: int
    n_pm: int

    def __post_init__(self):
        if min(self.n, self.n_p, self.n_m, self.n_pm) < 0:
            raise ValueError("counts must be non-negative")
        if self.n_p > self.n or self.n_m > self.n or self.n_pm > min(self.n_p, self.n_m):
            raise ValueError(f"inconsistent sufficient statistics {self}")


@dataclass(frozen=True)
class CoverageCache:
    per_term: tuple[int, ...]
    marked: int
    n: int


def evaluate(f: DnfFunction, x) -> int:
    """Value of the DNF at a binary vector ``x`` (a 0/1 sequence of length p)."""
    x = np.asarray(x).ravel()
    if x.shape[0] != f.width:
        raise ValueError(f"x has length {x.shape[0]}, expected {f.width}")
    return evaluate_mask(f, mask_from_bits(x))


def evaluate_mask(f: DnfFunction, row: int) -> int:
    return int(any(t.vars & row == t.vars for t in f.terms))


def term_coverage(mask: int, d: Dataset) -> int:
    """Rows satisfying the conjunction ``mask`` (all rows for the empty term)."""
    cov = d.all_rows
    j = 0
    while mask:
        if mask & 1:
            cov &= d.columns[j]
        mask >>= 1
        j += 1
    return cov


def _union(covs: Iterable[int]) -> int:
    out = 0
    for c in covs:
        out |= c
    return out


def build_coverage(f: DnfFunction, d: Dataset) -> CoverageCache:
    if f.width != d.p:
        raise ValueError(f"DNF width {f.width} does not match dataset p={d.p}")
    per_term = tuple(term_coverage(t.vars, d) for t in f.terms)
    return CoverageCache(per_term, _union(per_term), d.n)


def suffstats(cache: CoverageCache, d: Dataset) -> SuffStats:
    if cache.n != d.n:
        raise ValueError("coverage width does not match dataset")
    return SuffStats(d.n, d.n_p, cache.marked.bit_count(), (cache.marked & d.y).bit_count())


def update_coverage_flip(
    cache: CoverageCache, d: Dataset, f: DnfFunction, term_index: int, var_index: int, on: bool
) -> tuple[DnfFunction, CoverageCache]:
    """Flip one variable of one term and update the coverage incrementally.

    Returns the mutated function and its cache; both equal what a rebuild
    from scratch would give.
    """
    if not 0 <= term_index < f.m:
        raise IndexError(f"term index {term_index} out of range for m={f.m}")
    if not 0 <= var_index < f.width:
        raise IndexError(f"variable index {var_index} out of range for p={f.width}")
    old = f.terms[term_index].vars
    bit = 1 << var_index
    if on:
        if old & bit:
            raise ValueError("variable already in term")
        new = old | bit
        cov = cache.per_term[term_index] & d.columns[var_index]
    else:
        if not old & bit:
            raise ValueError("variable not in term")
        new = old & ~bit
        if new == 0:
            raise ValueError("flip would leave an empty term")
        cov = term_coverage(new, d)
    masks = list(f.masks)
    masks[term_index] = new
    g = DnfFunction.from_masks(masks, f.width)  # raises on duplicate
    per_term = list(cache.per_term)
    per_term[term_index] = cov
    return g, CoverageCache(tuple(per_term), _union(per_term), cache.n)


def symmetric_difference(u: Conjunction, v: Conjunction) -> Conjunction:
    if u.width != v.width:
        raise ValueError("width mismatch")
    return Conjunction(u.vars ^ v.vars, u.width)


def render_dnf(f: DnfFunction, names: Sequence[str]) -> str:
    """Render as ``(a AND b) OR (c)``; the empty DNF is ``FALSE``."""
    if len(names) != f.width:
        raise ValueError(f"expected {f.width} names, got {len(names)}")
    if f.m == 0:
        return "FALSE"
    parts = []
    for t in f.terms:
        lits = [names[j] for j in t.indices()]
        parts.append("(" + (" AND ".join(lits) if lits else "TRUE") + ")")
    return " OR ".join(parts)
