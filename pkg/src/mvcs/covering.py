"""Distances to discontinuity varieties and (epsilon, delta)-covers, k = 3.

The nearest point of a variety ``{f = 0}`` to ``q`` on the simplex satisfies
the orthogonality condition

    q - p = lam * (I - 11^T / k) (c / p),

i.e. the residual ``q - p`` is parallel to the projected gradient of
``log f``.  Writing ``mu = lam * mean(c / p)`` each coordinate solves the
quadratic ``p_i^2 - (q_i + mu) p_i + lam c_i = 0``.  For a fixed ``lam``
the branch choice (``+`` or ``-`` root per coordinate) and the scalar
``mu`` are fixed by ``sum(p) = 1``; an outer root-find in ``lam`` then puts
``p`` on the variety.  Summing the coordinate equations shows that the
simplex constraint is implied by the orthogonality system itself.

In z-space a variety is the plane ``c . z = log c0``, which contains the
direction ``(1, ..., 1)``.  For k = 3 its trace on the simplex is therefore
the single arc ``softmax(-(z_p + a d))``, ``a`` real, with ``d = c x 1``.
The arc is used for endpoints and the scan fallback.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree
from scipy.special import expit, softmax

from .continuity import TAU, ContinuitySet, touching_entries, with_touching
from .errors import NoCandidates
from .simplex_core import SimplexPoint, simplex_grid, type_matrix
from .varieties import SplittingVariety, VarietyFamily

LAMBDA_MAGNITUDES = np.logspace(-10, 1, 512)
PIN_SAMPLES = 64
ON_VARIETY_TOL = 1e-8
RESIDUAL_TOL = 1e-8
SIMPLEX_SUM_TOL = 1e-8
SCAN_POINTS = 2000
NUDGE = 1e-7


def eta_for_epsilon(epsilon: float, k: int) -> int:
    """Smallest grid resolution whose discrete neighbours lie within ``epsilon``."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return math.ceil(math.sqrt(k) / epsilon - 1e-12)


def discrete_neighbor(p: SimplexPoint, eta: int) -> np.ndarray:
    """Counts (summing to ``eta``) of a grid point within ``sqrt(k)/eta`` of ``p``.

    The first coordinate is rounded; each later one is rounded up while the
    running sum of ``p_i - p'_i`` is positive and down otherwise, so the
    accumulated deficit stays below ``1/eta`` in magnitude.  The last
    coordinate takes the remainder.
    """
    scaled = np.asarray(p.probs) * eta
    near = np.round(scaled)
    # Snap values that are integers up to rounding noise.
    scaled = np.where(np.abs(scaled - near) < 1e-9, near, scaled)
    counts = np.zeros(p.k, dtype=np.int64)
    counts[0] = int(np.floor(scaled[0] + 0.5))
    deficit = scaled[0] - counts[0]
    for i in range(1, p.k - 1):
        counts[i] = int(np.ceil(scaled[i]) if deficit > 0 else np.floor(scaled[i]))
        deficit += scaled[i] - counts[i]
    counts[-1] = eta - counts[:-1].sum()
    return counts


# ---------------------------------------------------------------------------
# The variety as an arc on the simplex


@dataclass(frozen=True)
class VarietyArc:
    """``p(a) = softmax(-(base + a * direction))`` traces ``{f = 0}`` on the simplex."""

    base: np.ndarray
    direction: np.ndarray

    @classmethod
    def of(cls, v: SplittingVariety) -> "VarietyArc":
        c = v.normal
        base = c * v.log_c0 / float(c @ c)
        d = np.cross(c, np.ones(3))
        return cls(base, d / np.linalg.norm(d))

    def points(self, a) -> np.ndarray:
        a = np.atleast_1d(np.asarray(a, dtype=float))
        return softmax(-(self.base[None, :] + a[:, None] * self.direction[None, :]), axis=1)

    def reach(self, margin: float = 30.0) -> float:
        """Parameter beyond which the arc is within ``exp(-margin)`` of its ends."""
        d = np.sort(self.direction)
        gaps = np.diff(d)
        gap = gaps[gaps > 1e-12].min()
        spread = np.ptp(self.base)
        return (margin + 2.0 * spread) / gap

    def endpoints(self) -> np.ndarray:
        """Arc points next to both ends; interior, so ``f`` vanishes there."""
        r = self.reach()
        return self.points([-r, r])

    def scan(self, count: int = SCAN_POINTS) -> tuple[np.ndarray, np.ndarray]:
        r = self.reach()
        # Denser near the middle, where the arc bends.
        u = np.linspace(-1.0, 1.0, count)
        a = np.sinh(u * np.arcsinh(r))
        return a, self.points(a)


# ---------------------------------------------------------------------------
# Orthogonality system


def _sheet(q, c, lams, x, j, signs) -> np.ndarray:
    """Roots over a ``(lam, x)`` grid with coordinate ``j`` pinned to ``x``.

    Coordinate ``j`` solves its own quadratic exactly when
    ``mu = x + lam c_j / x - q_j``; this covers both of its roots without a
    fold.  The other coordinates take the root named by ``signs`` and are
    nan where that root is complex or not positive.
    """
    lam = lams[:, None]
    mu = x[None, :] + lam * c[j] / x[None, :] - q[j]
    b = q + mu[..., None]
    lc = lam[..., None] * c
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.sqrt(b * b - 4.0 * lc)
        plus = 0.5 * (b + root)
        # Stable form of (b - root) / 2.
        minus = 2.0 * lc / (b + root)
    P = np.where(np.asarray(signs) > 0, plus, minus)
    P[..., j] = x[None, :]
    # A coordinate with c_i = 0 never enters g, so both sum(p) and g extend
    # continuously to p_i = 0; keeping those points avoids a ragged edge.
    return np.where((P > 0) | ((c == 0) & (P == 0)), P, np.nan)


def _g(v: SplittingVariety, p: np.ndarray) -> float:
    """``log(c0 prod p^c)``; zero on the variety, positive where ``f < 0``."""
    return float(v.log_c0 + v.normal @ np.log(p))


def _residual(q, p, c, lam) -> np.ndarray:
    r = c / p
    return lam * (r - r.mean()) - (q - p)


def _newton(q, v: SplittingVariety, p, lam, iters: int = 30):
    """Polish ``(p, mu, lam)`` on the full system; returns ``(p, lam)`` or None."""
    c = v.normal
    mu = lam * float(np.mean(c / p))
    x = np.concatenate([p, [mu, lam]])
    for _ in range(iters):
        p, mu, lam = x[:3], x[3], x[4]
        if np.any(p <= 0):
            return None
        F = np.concatenate([p * p - (q + mu) * p + lam * c, [p.sum() - 1.0, _g(v, p)]])
        J = np.zeros((5, 5))
        J[:3, :3] = np.diag(2 * p - (q + mu))
        J[:3, 3] = -p
        J[:3, 4] = c
        J[3, :3] = 1.0
        J[4, :3] = c / p
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        x = x + step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(x))):
            break
    p, lam = x[:3], float(x[4])
    if np.any(p <= 0):
        return None
    return p, lam


def _accept(q, v: SplittingVariety, p, lam) -> bool:
    if np.any(p <= 0) or abs(p.sum() - 1.0) > SIMPLEX_SUM_TOL:
        return False
    f = -math.expm1(_g(v, p))
    if abs(f) > ON_VARIETY_TOL:
        return False
    return float(np.linalg.norm(_residual(q, p, v.normal, lam))) <= RESIDUAL_TOL


def _crossings(H, G, axis):
    """Where ``H`` changes sign along ``axis``: fraction ``w`` and ``G`` there."""
    n = H.shape[axis]
    h0, h1 = H.take(range(n - 1), axis), H.take(range(1, n), axis)
    g0, g1 = G.take(range(n - 1), axis), G.take(range(1, n), axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        hit = np.sign(h0) * np.sign(h1) < 0
        w = np.where(hit, h0 / (h0 - h1), np.nan)
    return w, g0 + w * (g1 - g0)


def _contour_seeds(v: SplittingVariety, P: np.ndarray, lam: np.ndarray):
    """Seeds ``(p, lam)`` near common zeros of ``sum(p) - 1`` and ``g``.

    Both are sampled on a 2-d grid of ``lam`` and one more parameter; the
    zero curve of the first is located on cell edges and a seed is placed
    wherever ``g`` changes sign between two crossings of the same cell.
    Working on cells rather than following roots along ``lam`` also
    catches solutions near folds.
    """
    c = v.normal
    H = P.sum(axis=-1) - 1.0
    used = c != 0
    with np.errstate(invalid="ignore", divide="ignore"):
        G = v.log_c0 + np.log(P[..., used]) @ c[used]
    wa, ga = _crossings(H, G, axis=1)
    wb, gb = _crossings(H, G, axis=0)
    # Edges of cell (i, j): rows i and i+1, then columns j and j+1.
    g = np.stack([ga[:-1], ga[1:], gb[:, :-1], gb[:, 1:]], axis=-1)
    lo = np.where(np.isnan(g), np.inf, g)
    hi = np.where(np.isnan(g), -np.inf, g)
    ci, cj = np.nonzero((lo.min(axis=-1) <= 0) & (hi.max(axis=-1) >= 0))

    def edge(i, j, e):
        if e < 2:
            r = i + e
            w = wa[r, j]
            return P[r, j] + w * (P[r, j + 1] - P[r, j]), lam[r, j]
        col = j + e - 2
        w = wb[i, col]
        return P[i, col] + w * (P[i + 1, col] - P[i, col]), lam[i, col] + w * (lam[i + 1, col] - lam[i, col])

    for i, j in zip(ci, cj):
        a = int(np.argmin(lo[i, j]))
        b = int(np.argmax(hi[i, j]))
        ga_, gb_ = g[i, j, a], g[i, j, b]
        w = 0.0 if ga_ == gb_ else ga_ / (ga_ - gb_)
        (pa, la), (pb, lb) = edge(i, j, a), edge(i, j, b)
        yield pa + w * (pb - pa), la + w * (lb - la)


def _pin_grid(samples: Optional[int] = None) -> np.ndarray:
    """Values for the pinned coordinate, uniform in logit from 1e-12 to 1 - 1e-12."""
    return expit(np.linspace(-27.6, 27.6, samples or PIN_SAMPLES))


def _sheets(q, c):
    """Every ``(lam row, P grid)`` worth contouring for one variety.

    For each sign of ``lam`` and each coordinate ``j`` that can take the '-'
    root (``lam c_j > 0``), ``p_j`` is the grid parameter; remaining
    coordinates with ``lam c_i > 0`` try both roots, the rest take '+'.
    A coordinate can fold only while another one is pinned, so pinning each
    candidate in turn leaves no solution at a fold of every sheet.
    """
    mags = np.concatenate([[0.0], LAMBDA_MAGNITUDES])
    x = _pin_grid()
    for half in (1, -1):
        lams = half * mags
        eligible = [i for i in range(len(c)) if half * c[i] > 0]
        for j in eligible:
            free = [i for i in eligible if i != j]
            for choice in itertools.product((1, -1), repeat=len(free)):
                signs = np.ones(len(c))
                signs[free] = choice
                yield lams, _sheet(q, c, lams, x, j, signs)


def orthogonality_candidates_k3(q: SimplexPoint, v: SplittingVariety) -> list[tuple[SimplexPoint, float]]:
    """Critical points of ``|p - q|`` on the variety inside the open simplex.

    Each is a pair ``(p, lam)`` solving the orthogonality system to 1e-8.
    Raises NoCandidates when none is found.
    """
    if q.k != 3 or v.qhat.k != 3:
        raise ValueError("orthogonality solver requires k = 3")
    qa = q.array
    if np.any(qa <= 0):
        raise ValueError("q must be interior")
    found: list[tuple[np.ndarray, float]] = []

    def add(p, lam):
        p = np.asarray(p, dtype=float)
        if not _accept(qa, v, p, lam):
            return
        for other, _ in found:
            if np.max(np.abs(other - p)) < 1e-9:
                return
        found.append((p, lam))

    if abs(math.expm1(_g(v, qa))) <= ON_VARIETY_TOL:
        add(qa, 0.0)
    # Linearised projection of q onto the variety; good when q is close.
    r = v.normal / qa
    w = r - r.mean()
    if r @ w > 0:
        step = -_g(v, qa) / float(r @ w)
        p0 = qa + step * w
        if np.all(p0 > 0):
            sol = _newton(qa, v, p0, -step)
            if sol is not None:
                add(*sol)
    for lams, P in _sheets(qa, v.normal):
        lam = np.broadcast_to(lams[:, None], P.shape[:2])
        for p, lam0 in _contour_seeds(v, P, lam):
            sol = _newton(qa, v, np.maximum(p, 1e-12), lam0)
            if sol is not None:
                add(*sol)
    if not found:
        raise NoCandidates(f"no orthogonality solutions for variety {v.index}")
    found.sort(key=lambda t: float(np.linalg.norm(t[0] - qa)))
    return [(SimplexPoint.normalized(p), lam) for p, lam in found]


# ---------------------------------------------------------------------------
# Distances


@dataclass(frozen=True)
class DistanceResult:
    distance: float
    argmin: SimplexPoint
    lam: float  # multiplier of the orthogonality condition; nan at arc ends
    feasible_for_set: bool = True
    # Set when the arc scan beat every orthogonality candidate.
    approximate: bool = False


def _key(v: SplittingVariety) -> tuple:
    return (tuple(v.c), round(v.log_c0, 10))


@dataclass
class DistanceCache:
    """Candidate nearest points per ``(q, variety)``, shared between sets."""

    candidates: dict = field(default_factory=dict)
    arcs: dict = field(default_factory=dict)
    scan_points: int = SCAN_POINTS

    def arc(self, v: SplittingVariety) -> tuple[VarietyArc, np.ndarray, np.ndarray, float]:
        key = _key(v)
        if key not in self.arcs:
            arc = VarietyArc.of(v)
            a, pts = arc.scan(self.scan_points)
            gap = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).max())
            self.arcs[key] = (arc, a, pts, gap)
        return self.arcs[key]

    def points(self, q: np.ndarray, v: SplittingVariety) -> tuple[np.ndarray, np.ndarray]:
        """Critical points of the distance from ``q`` plus both arc ends."""
        key = (q.tobytes(), _key(v))
        hit = self.candidates.get(key)
        if hit is None:
            try:
                found = orthogonality_candidates_k3(SimplexPoint.normalized(_interior(q)), v)
            except NoCandidates:
                found = []
            ends = self.arc(v)[0].endpoints()
            pts = np.vstack([[p.array for p, _ in found], ends]) if found else ends
            lams = np.array([lam for _, lam in found] + [math.nan, math.nan])
            hit = (pts, lams)
            self.candidates[key] = hit
        return hit


def _interior(q: np.ndarray) -> np.ndarray:
    """``q`` itself if interior, else nudged towards the centroid by NUDGE."""
    if np.all(q > 0):
        return q
    return q + NUDGE * (np.full(len(q), 1.0 / len(q)) - q)


def _refine_on_arc(arc: VarietyArc, a: np.ndarray, j: int, q: np.ndarray, ok=None) -> tuple[float, np.ndarray]:
    lo, hi = a[max(j - 1, 0)], a[min(j + 1, len(a) - 1)]

    def dist(t):
        p = arc.points(t)[0]
        if ok is not None and not ok(p):
            return math.inf
        return float(np.linalg.norm(p - q))

    res = minimize_scalar(dist, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    p = arc.points(res.x)[0]
    d = dist(res.x)
    if not d < float(np.linalg.norm(arc.points(a[j])[0] - q)):
        p = arc.points(a[j])[0]
        d = float(np.linalg.norm(p - q))
    return d, p


def min_distance_to_variety(q: SimplexPoint, v: SplittingVariety, cache: Optional[DistanceCache] = None) -> DistanceResult:
    """Nearest point of ``{f = 0}`` (closed in the simplex) to ``q``.

    Orthogonality candidates and the two arc ends are compared; a
    ``SCAN_POINTS`` scan of the arc guards against a missed root and, if it
    wins, its local refinement is returned flagged approximate.  A boundary
    ``q`` is nudged inward by NUDGE to find candidates.
    """
    if q.k != 3:
        raise ValueError("distance computations require k = 3")
    cache = cache or DistanceCache()
    qa = q.array
    pts, lams = cache.points(qa, v)
    d = np.linalg.norm(pts - qa, axis=1)
    j = int(np.argmin(d))
    best = DistanceResult(float(d[j]), SimplexPoint.normalized(pts[j]), float(lams[j]))
    arc, a, scan, _ = cache.arc(v)
    ds = np.linalg.norm(scan - qa, axis=1)
    i = int(np.argmin(ds))
    if ds[i] < best.distance - 1e-9:
        dist, p = _refine_on_arc(arc, a, i, qa)
        best = DistanceResult(dist, SimplexPoint.normalized(p), math.nan, approximate=True)
    return best


def _coincident(family: VarietyFamily, e: int) -> np.ndarray:
    """Entries describing the same surface as entry ``e`` (itself and its negation)."""
    same = np.all(family.normals == family.normals[e], axis=1) & (np.abs(family.offsets - family.offsets[e]) < 1e-9)
    flip = np.all(family.normals == -family.normals[e], axis=1) & (np.abs(family.offsets + family.offsets[e]) < 1e-9)
    return same | flip


def _feasible(cset: ContinuitySet, points: np.ndarray, skip: np.ndarray, tau: float) -> np.ndarray:
    """Weak sign test ``omega_i f_i <= tau`` on all entries outside ``skip``."""
    if not len(cset.family):
        return np.ones(len(points), dtype=bool)
    vals = np.asarray(cset.omega)[None, :] * cset.family.f(points)
    vals = vals[:, ~skip]
    return np.all(np.nan_to_num(vals, nan=np.inf) <= tau, axis=1)


def _corners_in_closure(cset: ContinuitySet) -> np.ndarray:
    k = cset.family.k if len(cset.family) else 3
    eye = np.eye(k)
    near = eye * (1.0 - k * NUDGE) + NUDGE
    keep = cset.contains(near) if len(cset.family) else np.ones(k, dtype=bool)
    return eye[keep]


def set_distance(q: SimplexPoint, cset: ContinuitySet, cache: Optional[DistanceCache] = None,
                 tau: float = TAU) -> DistanceResult:
    """Distance from ``q`` to the closure of the set, with the nearest point.

    Candidates are nearest points on touching varieties that satisfy every
    other sign of ``omega`` to within ``tau``, the arc ends, the set's
    vertices and simplex corners in its closure.  A scan of each touching
    arc restricted to feasible points backs this up; if it wins the result
    is flagged approximate.
    """
    if q.k != 3:
        raise ValueError("distance computations require k = 3")
    cache = cache or DistanceCache()
    qa = q.array
    family = cset.family
    probe = _interior(qa)
    if not len(family) or cset.contains(probe[None, :])[0]:
        d = float(np.linalg.norm(probe - qa))
        return DistanceResult(d, SimplexPoint.normalized(probe), 0.0)
    best_d, best_p, best_lam, approx = math.inf, None, math.nan, False

    def offer(points, lams=None):
        nonlocal best_d, best_p, best_lam
        if len(points) == 0:
            return
        d = np.linalg.norm(points - qa, axis=1)
        j = int(np.argmin(d))
        if d[j] < best_d:
            best_d, best_p = float(d[j]), points[j]
            best_lam = math.nan if lams is None else float(lams[j])

    touching = sorted(touching_entries(cset, tau))
    for e in touching:
        v = family.representative(e)
        skip = _coincident(family, e)
        pts, lams = cache.points(qa, v)
        ok = _feasible(cset, pts, skip, tau)
        offer(pts[ok], lams[ok])
    offer(np.array([vx.point.array for vx in cset.vertices]).reshape(-1, 3))
    offer(_corners_in_closure(cset))
    for e in touching:
        v = family.representative(e)
        skip = _coincident(family, e)
        arc, a, scan, _ = cache.arc(v)
        ok = _feasible(cset, scan, skip, tau)
        if not ok.any():
            continue
        ds = np.where(ok, np.linalg.norm(scan - qa, axis=1), np.inf)
        i = int(np.argmin(ds))
        if ds[i] < best_d - 1e-9:
            d, p = _refine_on_arc(arc, a, i, qa, ok=lambda x: _feasible(cset, x[None, :], skip, tau)[0])
            best_d, best_p, best_lam, approx = d, p, math.nan, True
    if best_p is None:
        raise NoCandidates("no point of the set closure was found")
    return DistanceResult(best_d, SimplexPoint.normalized(best_p), best_lam, True, approx)


def min_distance_to_set(q: SimplexPoint, cset: ContinuitySet, cache: Optional[DistanceCache] = None) -> float:
    """Distance from ``q`` to the set; 0 when ``q`` is inside."""
    return set_distance(q, cset, cache).distance


def distance_lower_bounds(points: np.ndarray, cset: ContinuitySet, cache: Optional[DistanceCache] = None,
                          tau: float = TAU) -> np.ndarray:
    """Cheap lower bounds on the distance from each point to the set closure.

    A segment from an outside point to the set enters it through the
    feasible part of some touching variety.  Scan points of those parts,
    widened by one step on each side, are at most one scan gap from any
    such entry point; corners in the closure are added for safety.
    Points in the set get 0.
    """
    cache = cache or DistanceCache()
    points = np.atleast_2d(points)
    out = np.full(len(points), np.inf)
    family = cset.family
    if not len(family):
        return np.zeros(len(points))
    out[inside_mask(points, cset)] = 0.0
    for e in touching_entries(cset, tau):
        _, _, scan, gap = cache.arc(family.representative(e))
        ok = _feasible(cset, scan, _coincident(family, e), tau)
        ok[1:] |= ok[:-1].copy()
        ok[:-1] |= ok[1:].copy()
        if not ok.any():
            continue
        d, _ = cKDTree(scan[ok]).query(points)
        out = np.minimum(out, d - gap)
    corners = _corners_in_closure(cset)
    if len(corners):
        dc = np.linalg.norm(points[:, None, :] - corners[None, :, :], axis=-1).min(axis=1)
        out = np.minimum(out, dc)
    for vx in cset.vertices:
        out = np.minimum(out, np.linalg.norm(points - vx.point.array, axis=1))
    return np.maximum(out, 0.0)


# ---------------------------------------------------------------------------
# Covers


@dataclass(frozen=True)
class CoverPoint:
    counts: tuple[int, ...]
    label: str  # "inside" or "near"
    distance: float

    def to_json(self) -> dict:
        return {"counts": list(self.counts), "label": self.label, "distance": self.distance}


@dataclass(frozen=True)
class CoverGrid:
    omega: tuple[int, ...]
    epsilon: float
    delta: float
    eta: int
    points: tuple[CoverPoint, ...]
    approximate: bool = False

    @property
    def array(self) -> np.ndarray:
        return np.array([p.counts for p in self.points], dtype=float).reshape(-1, 3) / self.eta

    def to_json(self) -> dict:
        return {
            "omega": list(self.omega),
            "epsilon": self.epsilon,
            "delta": self.delta,
            "eta": self.eta,
            "points": [p.to_json() for p in self.points],
        }


def inside_mask(points: np.ndarray, cset: ContinuitySet) -> np.ndarray:
    """Grid points in the set; boundary points count when nudged inward."""
    if not len(cset.family):
        return np.ones(len(points), dtype=bool)
    probe = np.where(np.all(points > 0, axis=1)[:, None], points, points + NUDGE * (1.0 / 3 - points))
    return cset.contains(probe)


_TARGETS = np.array([[0.31, 0.33, 0.36], [0.36, 0.31, 0.33], [0.33, 0.36, 0.31], [0.2, 0.3, 0.5]])


def grid_labels(points: np.ndarray, family, known: set) -> np.ndarray:
    """Sign vector of every grid point; -1 rows where none could be assigned.

    Points on a variety or on the simplex boundary are moved a tiny step
    towards an off-centre target, which lands them inside an adjacent set;
    a few targets are tried in turn.
    """
    labels = np.zeros((len(points), len(family)), dtype=np.int8)
    todo = np.ones(len(points), dtype=bool)
    f = family.f(points)
    plain = np.all(points > 0, axis=1) & np.all(np.abs(np.nan_to_num(f, nan=0.0)) > 1e-12, axis=1)
    labels[plain] = np.where(f[plain] < 0, 1, -1)
    todo[plain] = False
    for target in _TARGETS:
        idx = np.flatnonzero(todo)
        if not len(idx):
            break
        probe = points[idx] + NUDGE * (target - points[idx])
        g = family.f(probe)
        good = np.all(np.abs(np.nan_to_num(g, nan=0.0)) > 1e-12, axis=1)
        rows = np.where(g < 0, 1, -1).astype(np.int8)
        good &= np.array([tuple(int(x) for x in r) in known for r in rows], dtype=bool)
        labels[idx[good]] = rows[good]
        todo[idx[good]] = False
    labels[todo] = 0
    return labels


def build_cover(cset: ContinuitySet, epsilon: float, delta: float, phat=None,
                cache: Optional[DistanceCache] = None) -> CoverGrid:
    """(epsilon, delta)-cover of a continuity set on the grid of resolution
    ``ceil(sqrt(3) / epsilon)``.

    Keeps grid points inside the set and those within ``delta`` of it.
    ``phat`` is accepted for symmetry with the other entry points; the set
    already carries its varieties.
    """
    if delta < epsilon:
        raise ValueError("delta must be ≥ epsilon")
    k = cset.family.k if len(cset.family) else 3
    if k != 3:
        raise ValueError("covers are implemented for k = 3 only")
    cache = cache or DistanceCache()
    cset = with_touching(cset)
    eta = eta_for_epsilon(epsilon, k)
    counts = type_matrix(k, eta)
    pts = counts / eta
    inside = inside_mask(pts, cset)
    kept = []
    approx = False
    rest = np.flatnonzero(~inside)
    lower = distance_lower_bounds(pts[rest], cset, cache) if len(rest) else np.zeros(0)
    near: dict[int, float] = {}
    for idx in rest[lower <= delta]:
        res = set_distance(SimplexPoint.normalized(pts[idx]), cset, cache)
        if res.distance <= delta:
            near[int(idx)] = res.distance
            approx |= res.approximate
    for idx in range(len(pts)):
        if inside[idx]:
            kept.append(CoverPoint(tuple(int(c) for c in counts[idx]), "inside", 0.0))
        elif idx in near:
            kept.append(CoverPoint(tuple(int(c) for c in counts[idx]), "near", near[idx]))
    return CoverGrid(tuple(int(w) for w in cset.omega), float(epsilon), float(delta), eta, tuple(kept), approx)
