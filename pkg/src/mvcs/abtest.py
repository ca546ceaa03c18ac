"""Certify whether the confidence sets of two observations intersect (k = 3).

The simplex is split into joint continuity sets, on which both p-value
functions are fixed sums of multinomial probabilities.  Each such sum is
a polynomial whose gradient is bounded componentwise by ``L``, so a grid
point ``p`` with

    rho(p) + |L| * eps < alpha

rules out every member of that set within ``eps`` of ``p``.  Covering every
set by grid points at resolution ``eps`` then decides disjointness, and
halving ``eps`` is tried until the budget runs out.

Points on a variety need care: there the p-value also counts the tied
type, which the polynomial of an adjacent set may leave out.  The bound
used at ``p`` therefore adds the probability of every excluded type whose
variety passes within ``eps`` of ``p``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .continuity import ContinuitySet, family_continuity_sets, with_touching
from .covering import DistanceCache, _coincident, _corners_in_closure, _feasible, eta_for_epsilon, grid_labels, set_distance
from .errors import CapExceeded
from .simplex_core import (
    DEFAULT_TYPE_CAP,
    EmpiricalDistribution,
    SimplexPoint,
    log_pmf_matrix,
    pvalue,
    pvalues,
    simplex_grid,
    type_count,
    type_matrix,
)
from .varieties import build_family

log = logging.getLogger(__name__)

DEFAULT_EPSILON0 = 0.1
DEFAULT_MAX_REFINEMENTS = 6
DEFAULT_GRID_BUDGET = 2_000_000
ABTEST_SCAN_POINTS = 20_000


@dataclass(frozen=True)
class LipschitzBound:
    per_coordinate: tuple[int, ...]
    scalar: float


def lipschitz_bound(k: int, n: int, cap: int = DEFAULT_TYPE_CAP) -> LipschitzBound:
    """Componentwise bound on the gradient of any sum of type probabilities.

    Coordinate ``i`` gets ``sum over types with q_i >= 1`` of
    ``n! / ((q_i - 1)! prod_{j != i} q_j!)``; types with ``q_i = 0`` do not
    depend on ``p_i``.  Exact integer arithmetic.
    """
    if type_count(k, n) > cap:
        raise CapExceeded(f"|Delta_(k={k},n={n})| exceeds cap {cap}")
    fact = [math.factorial(j) for j in range(n + 1)]
    per = [0] * k
    for q in type_matrix(k, n, cap).tolist():
        denom = math.prod(fact[x] for x in q)
        coef = fact[n] // denom
        for i, x in enumerate(q):
            # n! / ((x-1)! prod_{j != i} q_j!) = x * multinomial(q)
            per[i] += x * coef
    return LipschitzBound(tuple(per), math.sqrt(sum(float(x) ** 2 for x in per)))


def joint_continuity_sets(phat1: EmpiricalDistribution, phat2: EmpiricalDistribution, **kwargs) -> list[ContinuitySet]:
    """Continuity sets of the merged variety family of both observations."""
    return family_continuity_sets(build_family(phat1, phat2), **kwargs)


class Status(str, enum.Enum):
    DISJOINT = "DISJOINT"
    OVERLAP = "OVERLAP"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class SetCertification:
    omega: tuple[int, ...]
    # Grid points evaluated for the set: those inside plus nearby points not
    # shown to be farther than delta.
    cover_size: int
    certified: bool

    def to_json(self) -> dict:
        return {"omega": list(self.omega), "cover_size": self.cover_size, "certified": self.certified}


@dataclass(frozen=True)
class DisjointnessVerdict:
    status: Status
    witness: Optional[SimplexPoint]
    final_epsilon: float
    iterations: int
    alpha: float = math.nan
    epsilon0: float = math.nan
    per_set: tuple[SetCertification, ...] = ()

    def to_json(self) -> dict:
        out = {"status": self.status.value}
        if self.witness is not None:
            out["witness"] = list(self.witness.probs)
        out.update(
            alpha=self.alpha,
            epsilon0=self.epsilon0,
            final_epsilon=self.final_epsilon,
            iterations=self.iterations,
            per_set=[s.to_json() for s in self.per_set],
        )
        return out


# ---------------------------------------------------------------------------
# Per-observation data


@dataclass
class _Observation:
    phat: EmpiricalDistribution
    source: int
    types: np.ndarray
    anchor: int
    lipschitz: float
    # Family entry of each type (-1 for the observation itself).
    entry: np.ndarray

    def included(self, omega: np.ndarray) -> np.ndarray:
        """Types counted in the p-value throughout the set ``omega``."""
        mask = np.zeros(len(self.types), dtype=bool)
        own = self.entry >= 0
        mask[own] = omega[self.entry[own]] > 0
        mask[self.anchor] = True
        return mask

    def pmf(self, points: np.ndarray) -> np.ndarray:
        return np.exp(log_pmf_matrix(self.types, points))


def _observation(family, source: int) -> _Observation:
    phat = family.sources[source]
    types = np.asarray(type_matrix(phat.k, phat.n))
    anchor = int(np.flatnonzero((types == np.asarray(phat.counts)).all(axis=1))[0])
    entry = np.full(len(types), -1)
    for v in family.varieties[source]:
        # Variety l is the l-th type in canonical order once phat is dropped.
        t = v.index - 1 if v.index - 1 < anchor else v.index
        entry[t] = family.entry_of[(source, v.index)]
    return _Observation(phat, source, types, anchor, lipschitz_bound(phat.k, phat.n).scalar, entry)


@dataclass
class JointProblem:
    """Everything the certifier reuses across refinement levels."""

    family: object
    sets: list[ContinuitySet]
    observations: list[_Observation]
    alpha: float
    cache: DistanceCache = field(default_factory=lambda: DistanceCache(scan_points=ABTEST_SCAN_POINTS))
    _arc_trees: dict = field(default_factory=dict)

    @classmethod
    def build(cls, phat1: EmpiricalDistribution, phat2: EmpiricalDistribution, alpha: float) -> "JointProblem":
        family = build_family(phat1, phat2)
        sets = [with_touching(s) for s in family_continuity_sets(family)]
        return cls(family, sets, [_observation(family, 0), _observation(family, 1)], alpha)

    def arc_tree(self, e: int) -> tuple[cKDTree, float]:
        if e not in self._arc_trees:
            _, _, scan, gap = self.cache.arc(self.family.representative(e))
            self._arc_trees[e] = (cKDTree(scan), gap)
        return self._arc_trees[e]

    def bounds(self, cset: ContinuitySet, points: np.ndarray, epsilon: float) -> list[np.ndarray]:
        """Upper bound on each p-value over the set closure near ``points``.

        The set's polynomial is evaluated at the points, then excluded types
        whose variety may pass within ``epsilon`` are added back.
        """
        omega = np.asarray(cset.omega)
        out = []
        for obs in self.observations:
            pmf = obs.pmf(points)
            rho = pmf @ obs.included(omega)
            for t in np.flatnonzero(obs.entry >= 0):
                e = obs.entry[t]
                if omega[e] > 0 or e not in cset.touching:
                    continue
                tree, gap = self.arc_tree(e)
                d, _ = tree.query(points)
                rho = rho + np.where(d - gap <= epsilon, pmf[:, t], 0.0)
            out.append(rho + obs.lipschitz * epsilon)
        return out

    def certified_mask(self, cset: ContinuitySet, points: np.ndarray, epsilon: float) -> np.ndarray:
        """Points whose ``epsilon``-ball holds no common member of the set closure."""
        points = np.atleast_2d(points)
        b1, b2 = self.bounds(cset, points, epsilon)
        return (b1 < self.alpha) | (b2 < self.alpha)

    def band(self, cset: ContinuitySet, tree: cKDTree, radius: float) -> np.ndarray:
        """Grid indices possibly within ``radius`` of the set closure."""
        family = self.family
        anchors = [np.array([v.point.array for v in cset.vertices]).reshape(-1, 3), _corners_in_closure(cset)]
        slack = 0.0
        for e in cset.touching:
            _, _, scan, gap = self.cache.arc(family.representative(e))
            ok = _feasible(cset, scan, _coincident(family, e), 1e-9)
            ok[1:] |= ok[:-1].copy()
            ok[:-1] |= ok[1:].copy()
            anchors.append(scan[ok])
            slack = max(slack, gap)
        anchors = np.vstack(anchors)
        if not len(anchors):
            return np.zeros(0, dtype=np.int64)
        hits = tree.query_ball_point(anchors, radius + slack)
        return np.unique(np.concatenate([np.asarray(h, dtype=np.int64) for h in hits]))


def _witness(problem: JointProblem, points: np.ndarray) -> Optional[SimplexPoint]:
    """Best common member among ``points``, re-verified one at a time."""
    obs1, obs2 = problem.observations
    r1, r2 = pvalues(obs1.phat, points), pvalues(obs2.phat, points)
    both = np.minimum(r1, r2)
    interior = np.all(points > 0, axis=1)
    # Ties (often at rho = 1) go to the point nearest both observations.
    centre = 0.5 * (obs1.phat.proportions + obs2.phat.proportions)
    spread = np.linalg.norm(points - centre, axis=1)
    order = np.lexsort((spread, -both, ~interior))
    for i in order:
        if both[i] < problem.alpha:
            break
        p = SimplexPoint.normalized(points[i])
        if pvalue(obs1.phat, p).value >= problem.alpha and pvalue(obs2.phat, p).value >= problem.alpha:
            return p
    return None


def _certify_level(problem: JointProblem, epsilon: float, stop_early: bool) -> tuple[bool, list[SetCertification]]:
    eta = eta_for_epsilon(epsilon, 3)
    grid = simplex_grid(3, eta)
    tree = cKDTree(grid)
    index = {s.omega: i for i, s in enumerate(problem.sets)}
    labels = grid_labels(grid, problem.family, set(index))
    owner = np.array([index.get(tuple(int(x) for x in row), -1) for row in labels])
    if np.any(owner < 0):
        log.warning("%d grid points match no enumerated set", int((owner < 0).sum()))
        return False, []
    results = []
    ok_all = True
    # Sets holding the most dangerous points first, so failures surface early.
    r1, r2 = pvalues(problem.observations[0].phat, grid), pvalues(problem.observations[1].phat, grid)
    risk = np.full(len(problem.sets), -1.0)
    np.maximum.at(risk, owner, np.minimum(r1, r2))
    for si in np.argsort(-risk, kind="stable"):
        cset = problem.sets[si]
        inside = np.flatnonzero(owner == si)
        near = np.setdiff1d(problem.band(cset, tree, epsilon), inside, assume_unique=True)
        certified = True
        size = len(inside)
        if len(inside) and not problem.certified_mask(cset, grid[inside], epsilon).all():
            certified = False
        if certified and len(near):
            good = problem.certified_mask(cset, grid[near], epsilon)
            size += int(good.sum())
            for idx in near[~good]:
                res = set_distance(SimplexPoint.normalized(grid[idx]), cset, problem.cache)
                if res.distance <= epsilon:
                    size += 1
                    certified = False
                    break
        results.append(SetCertification(cset.omega, size, certified))
        ok_all &= certified
        if not certified and stop_early:
            break
    return ok_all, results


def certify_disjoint(phat1: EmpiricalDistribution, phat2: EmpiricalDistribution, alpha: float,
                     epsilon0: float = DEFAULT_EPSILON0, max_refinements: int = DEFAULT_MAX_REFINEMENTS,
                     grid_budget: int = DEFAULT_GRID_BUDGET, stop_early: bool = True) -> DisjointnessVerdict:
    """Decide whether the two confidence sets at level ``alpha`` intersect.

    Returns OVERLAP with a re-verified common member, DISJOINT when every
    cover point of every joint set passes the Lipschitz test, or UNDECIDED
    once ``max_refinements`` halvings (or the grid budget) are used up.
    With ``stop_early`` a level is abandoned at its first failing set, so
    ``per_set`` lists only the sets examined.
    """
    if phat1.k != 3 or phat2.k != 3:
        raise ValueError("disjointness certification requires k = 3")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if epsilon0 <= 0:
        raise ValueError("epsilon0 must be positive")
    problem = JointProblem.build(phat1, phat2, alpha)

    def verdict(status, witness, eps, it, per_set=()):
        return DisjointnessVerdict(status, witness, eps, it, alpha, epsilon0, tuple(per_set))

    # Vertices are where isolated members can hide.
    verts = [v.point.array for s in problem.sets for v in s.vertices]
    verts = np.unique(np.array(verts), axis=0) if verts else np.zeros((0, 3))
    epsilon = epsilon0
    per_set: list[SetCertification] = []
    for it in range(max_refinements + 1):
        eta = eta_for_epsilon(epsilon, 3)
        if type_count(3, eta) > grid_budget:
            log.info("grid budget reached at eps=%g", epsilon)
            return verdict(Status.UNDECIDED, None, epsilon, it, per_set)
        w = _witness(problem, simplex_grid(3, eta))
        if w is None and it == 0 and len(verts):
            w = _witness(problem, verts)
        if w is not None:
            return verdict(Status.OVERLAP, w, epsilon, it + 1)
        ok, per_set = _certify_level(problem, epsilon, stop_early)
        if ok:
            return verdict(Status.DISJOINT, None, epsilon, it + 1, per_set)
        if it < max_refinements:
            epsilon /= 2.0
    return verdict(Status.UNDECIDED, None, epsilon, max_refinements + 1, per_set)
