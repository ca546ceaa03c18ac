"""Discrete simplex enumeration, multinomial probabilities and exact p-values.

Types of ``n`` samples over ``k`` categories are enumerated in descending
lexicographic order of their count vectors.  That order fixes the index
used for discontinuity varieties and sign vectors everywhere else in the
package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import CapExceeded, NotOnSimplex

DEFAULT_TYPE_CAP = 10**6
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Integer counts over ``k`` categories; ``counts[i] / n`` is the type."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 1:
            raise ValueError("need at least one category")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def proportions(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / max(self.n, 1)

    def __str__(self):
        return "[" + ",".join(map(str, self.counts)) + "]"


@dataclass(frozen=True)
class SimplexPoint:
    """A multinomial parameter: ``k`` nonnegative reals summing to one."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(x) for x in self.probs)
        if len(probs) < 1:
            raise NotOnSimplex("empty probability vector")
        if any(not math.isfinite(x) or x < 0.0 or x > 1.0 for x in probs):
            raise NotOnSimplex(f"coordinates outside [0, 1]: {probs}")
        if abs(math.fsum(probs) - 1.0) > SIMPLEX_TOL:
            raise NotOnSimplex(f"not on simplex: sum = {math.fsum(probs)!r}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def normalized(cls, values: Sequence[float]) -> "SimplexPoint":
        """Build from a vector that is on the simplex up to rounding noise."""
        arr = np.clip(np.asarray(values, dtype=float), 0.0, None)
        return cls(tuple(arr / arr.sum()))

    @property
    def k(self) -> int:
        return len(self.probs)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probs)

    @property
    def is_interior(self) -> bool:
        return all(x > 0.0 for x in self.probs)


@dataclass(frozen=True)
class PValueResult:
    value: float
    included_terms: int
    anchor_probability: float
    # True when some other type ties the observation exactly, i.e. the
    # parameter sits on a discontinuity variety.
    on_boundary: bool = False


def type_count(k: int, n: int) -> int:
    """Return ``m = C(n+k-1, k-1)``, the size of the discrete simplex."""
    return math.comb(n + k - 1, k - 1)


def _compositions(k: int, n: int) -> Iterator[tuple[int, ...]]:
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(k - 1, n - first):
            yield (first,) + rest


def enumerate_types(k: int, n: int, cap: int = DEFAULT_TYPE_CAP) -> list[EmpiricalDistribution]:
    """All count vectors of ``n`` samples over ``k`` categories.

    The order is descending lexicographic, e.g. ``(k=2, n=2)`` gives
    ``[2,0], [1,1], [0,2]``.
    """
    if k < 1 or n < 0:
        raise ValueError(f"invalid (k, n) = ({k}, {n})")
    m = type_count(k, n)
    if m > cap:
        raise CapExceeded(f"|Delta_(k={k},n={n})| = {m} exceeds cap {cap}")
    return [EmpiricalDistribution(c) for c in _compositions(k, n)]


@lru_cache(maxsize=64)
def type_matrix(k: int, n: int, cap: int = DEFAULT_TYPE_CAP) -> np.ndarray:
    """Counts of all types as an ``(m, k)`` int array in canonical order."""
    if type_count(k, n) > cap:
        raise CapExceeded(f"|Delta_(k={k},n={n})| exceeds cap {cap}")
    arr = np.array(list(_compositions(k, n)), dtype=np.int64).reshape(-1, k)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=8)
def _log_factorial_table(size: int) -> np.ndarray:
    table = np.zeros(size + 1)
    if size:
        table[1:] = np.cumsum(np.log(np.arange(1, size + 1, dtype=float)))
    table.setflags(write=False)
    return table


def log_factorial(x) -> np.ndarray:
    """``log(x!)`` for nonnegative integers via a precomputed table."""
    x = np.asarray(x, dtype=np.int64)
    top = int(x.max()) if x.size else 0
    size = 1 << max(6, top.bit_length())
    return _log_factorial_table(size)[x]


def log_multinomial_coefficient(counts) -> np.ndarray:
    """``log(n! / prod(counts_i!))`` along the last axis."""
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.sum(axis=-1)
    return log_factorial(n) - log_factorial(counts).sum(axis=-1)


def log_pmf_matrix(counts: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Log multinomial probabilities, shape ``(len(points), len(counts))``.

    ``0 * log 0`` is taken as 0, so a zero parameter only kills types that
    put mass on that category.
    """
    counts = np.asarray(counts, dtype=np.int64)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with np.errstate(divide="ignore"):
        logp = np.log(points)
    # Replace -inf by a finite placeholder, then poison the affected entries.
    zero = ~np.isfinite(logp)
    terms = np.where(zero, 0.0, logp) @ counts.T.astype(float)
    hits = zero.astype(np.int64) @ (counts.T > 0).astype(np.int64)
    out = terms + log_multinomial_coefficient(counts)[None, :]
    out[hits > 0] = -np.inf
    return out


def multinomial_pmf(p: SimplexPoint, qhat: EmpiricalDistribution) -> float:
    """Probability of observing the counts ``qhat`` under parameter ``p``."""
    if p.k != qhat.k:
        raise ValueError(f"dimension mismatch: k={p.k} vs k={qhat.k}")
    logpmf = log_pmf_matrix(np.array([qhat.counts]), np.array([p.probs]))[0, 0]
    return float(np.exp(logpmf))


def _index_of(phat: EmpiricalDistribution) -> int:
    types = type_matrix(phat.k, phat.n)
    hit = np.flatnonzero((types == np.asarray(phat.counts)).all(axis=1))
    return int(hit[0])


def pvalues(phat: EmpiricalDistribution, points) -> np.ndarray:
    """Vectorised exact p-value at every row of ``points``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != phat.k:
        raise ValueError("dimension mismatch")
    logpmf = log_pmf_matrix(type_matrix(phat.k, phat.n), points)
    anchor = logpmf[:, _index_of(phat)]
    included = logpmf <= anchor[:, None]
    values = np.where(included, np.exp(logpmf), 0.0).sum(axis=1)
    return np.clip(values, 0.0, 1.0)


def pvalue(phat: EmpiricalDistribution, p: SimplexPoint) -> PValueResult:
    """Sum of probabilities of all types at most as likely as ``phat``."""
    if phat.k != p.k:
        raise ValueError(f"dimension mismatch: k={phat.k} vs k={p.k}")
    logpmf = log_pmf_matrix(type_matrix(phat.k, phat.n), np.array([p.probs]))[0]
    idx = _index_of(phat)
    anchor = logpmf[idx]
    included = logpmf <= anchor
    value = float(min(1.0, math.fsum(np.exp(logpmf[included]))))
    ties = logpmf == anchor
    ties[idx] = False
    return PValueResult(
        value=value,
        included_terms=int(included.sum()),
        anchor_probability=float(np.exp(anchor)),
        on_boundary=bool(ties.any() and np.isfinite(anchor)),
    )


def mvcs_member(phat: EmpiricalDistribution, p: SimplexPoint, alpha: float) -> bool:
    """Membership of ``p`` in the minimum-volume confidence set of ``phat``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return pvalue(phat, p).value >= alpha


def all_pvalues_at(p: SimplexPoint, n: int) -> tuple[np.ndarray, np.ndarray]:
    """p-value of every type at a fixed parameter, plus the type pmf.

    Uses one sort of the type probabilities instead of ``m`` separate sums.
    """
    types = type_matrix(p.k, n)
    logpmf = log_pmf_matrix(types, np.array([p.probs]))[0]
    pmf = np.exp(logpmf)
    order = np.argsort(logpmf, kind="stable")
    cum = np.cumsum(pmf[order])
    # Position of the last entry whose log-probability is <= each value.
    last = np.searchsorted(logpmf[order], logpmf, side="right") - 1
    return np.clip(cum[last], 0.0, 1.0), pmf


def coverage_probability(p: SimplexPoint, alpha: float, k: int, n: int) -> float:
    """Probability under ``p`` that the confidence set contains ``p``."""
    if p.k != k:
        raise ValueError("dimension mismatch")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    rho, pmf = all_pvalues_at(p, n)
    return float(min(1.0, math.fsum(pmf[rho >= alpha])))


def simplex_grid(k: int, eta: int) -> np.ndarray:
    """All points of the discrete simplex with denominator ``eta``."""
    return type_matrix(k, eta).astype(float) / eta
