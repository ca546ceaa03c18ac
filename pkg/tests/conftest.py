"""Shared oracles and fixtures.

The oracles here are deliberately brute force: dense barycentric grids for
sign vectors, dense 1-d scans of each variety for distances, and dense
random samples for cover checks.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from mvcs.continuity import find_continuity_sets
from mvcs.covering import VarietyArc
from mvcs.simplex_core import EmpiricalDistribution, simplex_grid
from mvcs.varieties import build_family

E2 = EmpiricalDistribution((0, 1, 0))
FIXTURES = {
    "e2": E2,
    "n2": EmpiricalDistribution((1, 1, 0)),
    "121": EmpiricalDistribution((1, 2, 1)),
    "040": EmpiricalDistribution((0, 4, 0)),
    "211": EmpiricalDistribution((2, 1, 1)),
}

# Criterion lines collected by the acceptance tests, printed at the end.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def sets_cache():
    cache = {}

    def get(phat: EmpiricalDistribution):
        if phat not in cache:
            cache[phat] = find_continuity_sets(phat)
        return cache[phat]

    return get


def realized_sign_vectors(phat: EmpiricalDistribution, eta: int) -> set:
    """Sign vectors seen on interior points of a barycentric grid."""
    family = build_family(phat)
    grid = simplex_grid(3, eta)
    grid = grid[(grid > 0).all(axis=1)]
    f = family.f(grid)
    clear = (np.abs(f) > 1e-8).all(axis=1)
    return {tuple(int(x) for x in row) for row in np.where(f[clear] < 0, 1, -1)}


def arc_oracle(v, q: np.ndarray, count: int = 20001) -> tuple[float, np.ndarray]:
    """Nearest point of a variety by a dense scan of its arc, then a local polish."""
    arc = VarietyArc.of(v)
    a, pts = arc.scan(count)
    d = np.linalg.norm(pts - q, axis=1)
    j = int(np.argmin(d))
    if 0 < j < len(a) - 1:
        res = minimize_scalar(lambda t: np.linalg.norm(arc.points(t)[0] - q), bounds=(a[j - 1], a[j + 1]),
                              method="bounded", options={"xatol": 1e-13})
        if res.fun < d[j]:
            return float(res.fun), arc.points(res.x)[0]
    return float(d[j]), pts[j]


def closure_samples(cset, samples: np.ndarray, arc_points: int = 200001) -> np.ndarray:
    """Points of the set closure: interior samples, dense boundary arcs, vertices."""
    family = cset.family
    parts = [samples[cset.contains(samples)]]
    for e in range(len(family)):
        arc = VarietyArc.of(family.representative(e))
        a = np.sinh(np.linspace(-1, 1, arc_points) * np.arcsinh(arc.reach()))
        pts = arc.points(a)
        vals = np.asarray(cset.omega)[None, :] * family.f(pts)
        vals[:, e] = -1.0
        keep = np.all(np.nan_to_num(vals, nan=1.0) <= 1e-9, axis=1)
        parts.append(pts[keep])
    parts.append(np.array([v.point.array for v in cset.vertices]).reshape(-1, 3))
    return np.vstack(parts)


def cover_violations(cset, cover, samples: np.ndarray, closure: np.ndarray) -> tuple[int, int]:
    """Counts of (epsilon-side, delta-side) violations of the cover property."""
    grid = cover.array
    inside = samples[cset.contains(samples)]
    eps_bad = 0
    if len(inside):
        d, _ = cKDTree(grid).query(inside)
        eps_bad = int((d > cover.epsilon + 1e-12).sum())
    delta_bad = 0
    if len(grid):
        d, _ = cKDTree(closure).query(grid)
        delta_bad = int((d > cover.delta + 1e-6).sum())
    return eps_bad, delta_bad


def max_min_pvalue(phat1: EmpiricalDistribution, phat2: EmpiricalDistribution, eta: int = 400) -> float:
    """Largest min(rho1, rho2) over a barycentric grid and the joint vertices."""
    from mvcs.continuity import family_vertices
    from mvcs.simplex_core import pvalues

    pts = [simplex_grid(3, eta)]
    verts = family_vertices(build_family(phat1, phat2))
    if verts:
        pts.append(np.array([v.point.array for v in verts]))
    pts = np.vstack(pts)
    return float(np.minimum(pvalues(phat1, pts), pvalues(phat2, pts)).max())


def same_region_pairs(phat: EmpiricalDistribution, count: int, seed: int = 0, scale: float = 0.02):
    """Random pairs joined by a segment that stays off every variety."""
    family = build_family(phat)
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, 33)[:, None]
    out = []
    while len(out) < count:
        p = rng.dirichlet([1, 1, 1])
        q = p + rng.normal(scale=scale, size=3)
        q -= (q.sum() - 1) / 3
        if q.min() <= 0:
            continue
        signs = np.sign(family.f(p * (1 - t) + q * t))
        if np.all(signs == signs[0]) and np.all(signs != 0):
            out.append((p, q))
    return out
