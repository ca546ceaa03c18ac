"""The ten acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal
summary (and immediately with ``-s``).
"""

import contextlib
import json
import math
import time

import numpy as np
import pytest

from conftest import (
    ACCEPTANCE_LINES,
    E2,
    FIXTURES,
    arc_oracle,
    closure_samples,
    cover_violations,
    max_min_pvalue,
    same_region_pairs,
)
from mvcs.abtest import Status, certify_disjoint, lipschitz_bound
from mvcs.cli import main
from mvcs.continuity import count_regions, find_continuity_sets, find_vertices, region_bounds, zero_vertex_regions
from mvcs.covering import DistanceCache, build_cover, min_distance_to_variety
from mvcs.simplex_core import EmpiricalDistribution, SimplexPoint, coverage_probability, pvalue, pvalues, simplex_grid, type_count
from mvcs.varieties import build_family, build_varieties, z_transform

pytestmark = pytest.mark.acceptance


@contextlib.contextmanager
def criterion(number: int, title: str):
    start = time.perf_counter()
    notes: list[str] = []
    status = "FAIL"
    try:
        yield notes
        status = "PASS"
    finally:
        detail = "; ".join(notes)
        line = f"[{status}] criterion {number:2d}: {title} ({time.perf_counter() - start:.1f}s){' - ' + detail if detail else ''}"
        ACCEPTANCE_LINES[number] = line
        print(line)


def distinct_varieties():
    seen = {}
    for phat in FIXTURES.values():
        for v in build_varieties(phat):
            seen.setdefault((v.c, round(v.log_c0, 10)), v)
    return list(seen.values())


def test_01_coverage():
    with criterion(1, "coverage >= 1 - alpha on grid parameters") as notes:
        worst = math.inf
        for k in (2, 3):
            grid = simplex_grid(k, 49 if k == 2 else 9)
            picks = grid[np.linspace(0, len(grid) - 1, 50).astype(int)]
            for n in (2, 4):
                for alpha in (0.05, 0.1, 0.5):
                    for p in picks:
                        cov = coverage_probability(SimplexPoint.normalized(p), alpha, k, n)
                        worst = min(worst, cov - (1 - alpha))
                        assert cov >= 1 - alpha - 1e-10, (k, n, alpha, p, cov)
        notes.append(f"min slack {worst:.3g}")


def test_02_continuity_set_completeness():
    with criterion(2, "continuity sets match the grid oracle") as notes:
        assert len(find_continuity_sets(E2)) == 4
        phat = FIXTURES["121"]
        ours = {s.omega for s in find_continuity_sets(phat)}
        eta = 449
        grid = simplex_grid(3, eta)
        grid = grid[(grid > 0).all(axis=1)]
        assert len(grid) >= 100_000
        f = build_family(phat).f(grid)
        clear = (np.abs(f) > 1e-8).all(axis=1)
        seen = {tuple(int(x) for x in r) for r in np.where(f[clear] < 0, 1, -1)}
        notes.append(f"{len(ours)} sets, oracle {len(seen)} from {len(grid)} points")
        assert ours == seen


def test_03_disconnected_confidence_set(tmp_path, monkeypatch, capsys):
    with criterion(3, "MVCS of [0,4,0] at alpha 0.5 is disconnected") as notes:
        monkeypatch.setenv("MVCS_CACHE_DIR", str(tmp_path))
        code = main(["figure", "--which", "confset", "--k", "3", "--n", "4", "--phat", "0,4,0",
                     "--alpha", "0.5", "--eta", "400"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        notes.append(f"{doc['components']} components")
        assert doc["components"] >= 2


def test_04_vertex_bounds():
    with criterion(4, "vertex count bound and defining equalities") as notes:
        counts = []
        for name, phat in FIXTURES.items():
            fam = build_family(phat)
            verts = find_vertices(phat)
            bound = 2 * math.comb(type_count(3, phat.n) - 1, 2)
            counts.append(f"{name}:{len(verts)}/{bound}")
            assert len(verts) <= bound
            for v in verts:
                f = fam.f(v.point.array[None, :])[0]
                assert np.all(np.abs(f[list(v.defining)]) <= 1e-8)
        notes.append(" ".join(counts))
        verts = find_vertices(E2)
        assert len(verts) == 1
        assert np.all(np.abs(verts[0].point.array - 1 / 3) <= 1e-8)


def test_05_region_count_bounds():
    with criterion(5, "region count bounds on n = 4 fixtures") as notes:
        for name in ("121", "040", "211"):
            phat = FIXTURES[name]
            bounds = region_bounds(phat)
            sets = find_continuity_sets(phat)
            total = sum(count_regions(s, 200) for s in sets)
            zero = sum(zero_vertex_regions(s, 200) for s in sets)
            notes.append(f"{name}: total {total}/{bounds['total']}, zero-vertex {zero}/{bounds['zero_vertex']}")
            assert total < bounds["total"]
            assert zero <= bounds["zero_vertex"]


def test_06_distance_oracle_equivalence():
    with criterion(6, "variety distance matches the 1-d oracle") as notes:
        q0 = SimplexPoint((0.5, 0.25, 0.25))
        p12 = build_varieties(E2)[0]
        assert abs(min_distance_to_variety(q0, p12).distance - 0.125 * math.sqrt(2)) <= 1e-9
        qs = np.random.default_rng(2024).dirichlet([1, 1, 1], 100)
        cache = DistanceCache()
        worst = 0.0
        varieties = distinct_varieties()
        for v in varieties:
            for q in qs:
                want, _ = arc_oracle(v, q)
                got = min_distance_to_variety(SimplexPoint.normalized(q), v, cache).distance
                worst = max(worst, abs(got - want))
        notes.append(f"{len(varieties)} varieties x 100 points, max error {worst:.2g}")
        assert worst <= 1e-6


def test_07_cover_property():
    with criterion(7, "cover property for the e2 sets at eps = delta = 0.05") as notes:
        samples = np.random.default_rng(7).dirichlet([1, 1, 1], 100_000)
        cache = DistanceCache()
        for s in find_continuity_sets(E2):
            cover = build_cover(s, 0.05, 0.05, cache=cache)
            closure = closure_samples(s, samples)
            bad = cover_violations(s, cover, samples, closure)
            notes.append(f"{s.omega}: {len(cover.points)} points, violations {bad}")
            assert bad == (0, 0)


def test_08_lipschitz_validity():
    with criterion(8, "Lipschitz bound within regions") as notes:
        assert lipschitz_bound(2, 2).per_coordinate == (4, 4)
        worst = 0.0
        names = ("n2", "121", "040", "211")
        for i, name in enumerate(names):
            phat = FIXTURES[name]
            L = lipschitz_bound(3, phat.n).scalar
            pairs = same_region_pairs(phat, 250, seed=i)
            p = np.array([a for a, _ in pairs])
            q = np.array([b for _, b in pairs])
            ratio = np.abs(pvalues(phat, p) - pvalues(phat, q)) / (L * np.linalg.norm(p - q, axis=1))
            worst = max(worst, float(ratio.max()))
        notes.append(f"1000 pairs, max |drho| / (L |dp|) = {worst:.3f}")
        assert worst <= 1.0


BATTERY = [
    ((0, 1, 0), (0, 1, 0), 0.5),
    ((1, 0, 0), (0, 1, 0), 0.5),
    ((2, 0, 0), (0, 2, 0), 0.9),
    ((2, 0, 0), (0, 2, 0), 0.6),
    ((1, 2, 1), (1, 2, 1), 1e-6),
    ((1, 2, 1), (2, 1, 1), 0.3),
    ((3, 0, 0), (0, 0, 3), 0.7),
    ((2, 0, 0), (0, 0, 2), 0.95),
    ((0, 0, 2), (2, 0, 0), 0.75),
    ((3, 1, 0), (0, 1, 3), 0.8),
]


def test_09_disjointness_soundness():
    with criterion(9, "disjointness verdicts are sound") as notes:
        p1, p2 = EmpiricalDistribution((4, 0, 0)), EmpiricalDistribution((0, 4, 0))
        v = certify_disjoint(p1, p2, 0.5)
        notes.append(f"[4,0,0] vs [0,4,0]: {v.status.value}")
        assert v.status is not Status.OVERLAP
        v = certify_disjoint(E2, E2, 0.5)
        assert v.status is Status.OVERLAP
        assert pvalue(E2, v.witness).value >= 0.5
        tally = {}
        for c1, c2, alpha in BATTERY:
            a, b = EmpiricalDistribution(c1), EmpiricalDistribution(c2)
            v = certify_disjoint(a, b, alpha)
            oracle = max_min_pvalue(a, b)
            tally[v.status.value] = tally.get(v.status.value, 0) + 1
            if v.status is Status.OVERLAP:
                assert pvalue(a, v.witness).value >= alpha and pvalue(b, v.witness).value >= alpha
            elif v.status is Status.DISJOINT:
                assert oracle < alpha, (c1, c2, alpha, oracle)
        notes.append("battery " + ", ".join(f"{k} {n}" for k, n in sorted(tally.items())))


def test_10_sign_consistency():
    with criterion(10, "sign of f agrees with the z-space halfspace") as notes:
        pts = np.random.default_rng(10).dirichlet([1, 1, 1], 10_000)
        z = np.array([z_transform(SimplexPoint.normalized(p)) for p in pts])
        mismatches = 0
        total = 0
        for phat in FIXTURES.values():
            fam = build_family(phat)
            f = fam.f(pts)
            gap = z @ fam.normals.T - fam.offsets
            decided = np.abs(gap) > 1e-12
            mismatches += int((np.sign(f) != np.sign(gap))[decided].sum())
            total += int(decided.sum())
        notes.append(f"{total} comparisons, {mismatches} mismatches")
        assert mismatches == 0
