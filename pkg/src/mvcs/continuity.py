"""Enumeration of continuity sets, their vertices and the varieties touching them.

A sign vector ``omega`` picks one side of every variety in a family.  In
z-space each side is an open halfspace, so the candidate set is an open
polyhedron ``P`` and it is nonempty on the simplex exactly when ``P``
meets the curved surface ``sum(exp(-z)) = 1``.  That is decided with the
minimum of ``sum(exp(-z))`` over ``P`` (a smooth convex program) and the
maximum over the vertices of ``P`` intersected with ``z >= 0``.

Strict inequalities are handled as closed ones shifted inwards by ``tau``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq, linprog, minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .errors import CapExceeded, EmptyVertexList, SolverFailure
from .simplex_core import EmpiricalDistribution, SimplexPoint, simplex_grid, type_count
from .varieties import VarietyFamily, build_family

log = logging.getLogger(__name__)

TAU = 1e-9
SOLVER_TOL = 1e-12
VERTEX_TOL = 1e-9
VERTEX_MERGE_TOL = 1e-8
ON_VARIETY_TOL = 1e-8
DEFAULT_ENUM_CAP = 20
# Box on z keeping the convex program compact; exp(-60) is below any
# probability that matters at the sample sizes handled here.
Z_BOX = 60.0

SignVector = tuple[int, ...]


@dataclass(frozen=True)
class SetVertex:
    point: SimplexPoint
    defining: tuple[int, ...]
    # Every family entry vanishing at the point (more than k-1 when
    # varieties are concurrent).
    incident: frozenset[int] = frozenset()


@dataclass(frozen=True, eq=False)
class ContinuitySet:
    omega: SignVector
    t_min: float
    t_max: float
    witness: Optional[SimplexPoint]
    family: VarietyFamily = field(repr=False)
    vertices: tuple[SetVertex, ...] = ()
    touching: Optional[frozenset[int]] = None

    def contains(self, points) -> np.ndarray:
        """Strict membership of interior points (rows) in the set."""
        points = np.atleast_2d(points)
        if len(self.family) == 0:
            return np.all(points > 0, axis=1)
        with np.errstate(invalid="ignore"):
            f = self.family.f(points)
            ok = np.asarray(self.omega)[None, :] * f < 0
        return ok.all(axis=1) & np.all(points > 0, axis=1)


@dataclass(frozen=True)
class Certificate:
    t_min: float
    t_max: float
    witness_z: np.ndarray
    # Max-slack point of the strict system; not on the z-simplex in general.
    center_z: Optional[np.ndarray] = None


def constraint_system(omega: Sequence[int], family: VarietyFamily, entries=None):
    """Rows ``A`` and right sides ``b`` with ``omega`` realised as ``A z < b``."""
    idx = np.arange(len(family)) if entries is None else np.asarray(entries, dtype=int)
    w = np.asarray(omega, dtype=float)
    if len(w) != len(idx):
        raise ValueError(f"sign vector has length {len(w)}, expected {len(idx)}")
    A = w[:, None] * family.normals[idx]
    b = w * family.offsets[idx]
    return A, b


def _max_slack(A, b, A_eq=None, b_eq=None):
    """Largest ``s <= 1`` with ``A z + s <= b`` inside the z box, or None."""
    k = A.shape[1]
    m = A.shape[0]
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, np.ones((m, 1))]) if m else None
    eq = None if A_eq is None else np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b if m else None,
        A_eq=eq,
        b_eq=b_eq,
        bounds=[(-Z_BOX, Z_BOX)] * k + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0:
        return None
    return float(res.x[-1]), res.x[:k]


def _minimize_sum_exp(A, rhs, z0, A_eq=None, b_eq=None, tol=SOLVER_TOL):
    k = len(z0)
    cons = []
    if A.size:
        cons.append({"type": "ineq", "fun": lambda z: rhs - A @ z, "jac": lambda z: -A})
    if A_eq is not None:
        cons.append({"type": "eq", "fun": lambda z: A_eq @ z - b_eq, "jac": lambda z: A_eq})

    # log(sum(exp(-z))) has the same minimiser and stays well scaled when
    # the infimum drifts towards the box corner.
    def obj(z):
        val = logsumexp(-z)
        return val, -np.exp(-z - val)

    bounds = [(-Z_BOX, Z_BOX)] * k
    res = minimize(obj, z0, jac=True, method="SLSQP", constraints=cons, bounds=bounds,
                   options={"ftol": tol, "maxiter": 500})

    def violation(z):
        v = 0.0
        if A.size:
            v = max(v, float(np.max(A @ z - rhs)))
        if A_eq is not None:
            v = max(v, float(np.max(np.abs(A_eq @ z - b_eq))))
        return v

    if res.success and violation(res.x) <= 1e-9:
        return float(np.exp(res.fun)), res.x
    res = minimize(lambda z: obj(z)[0], z0, jac=lambda z: obj(z)[1],
                   method="trust-constr", constraints=_trust_constraints(A, rhs, A_eq, b_eq),
                   bounds=bounds, options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 2000})
    if violation(res.x) <= 1e-9 and res.status in (1, 2):
        return float(np.exp(res.fun)), res.x
    raise SolverFailure(f"minimisation of sum(exp(-z)) failed: {res.message}")


def _trust_constraints(A, rhs, A_eq, b_eq):
    from scipy.optimize import LinearConstraint

    out = []
    if A.size:
        out.append(LinearConstraint(A, -np.inf, rhs))
    if A_eq is not None:
        out.append(LinearConstraint(A_eq, b_eq, b_eq))
    return out


def _vertices(A, b, A_eq=None, b_eq=None, tol=VERTEX_TOL) -> np.ndarray:
    """Vertices of ``{A z <= b, A_eq z = b_eq, z >= 0}`` by subset enumeration."""
    k = A.shape[1]
    rows = np.vstack([A.reshape(-1, k), -np.eye(k)])
    rhs = np.concatenate([b.reshape(-1), np.zeros(k)])
    n_eq = 0 if A_eq is None else A_eq.shape[0]
    free = k - n_eq
    if free < 0:
        return np.empty((0, k))
    combos = np.array(list(itertools.combinations(range(len(rows)), free)), dtype=int).reshape(-1, free)
    if n_eq:
        M = np.concatenate([np.broadcast_to(A_eq, (len(combos), n_eq, k)), rows[combos]], axis=1)
        r = np.concatenate([np.broadcast_to(b_eq, (len(combos), n_eq)), rhs[combos]], axis=1)
    else:
        M, r = rows[combos], rhs[combos]
    det = np.linalg.det(M)
    scale = np.prod(np.linalg.norm(M, axis=2), axis=1)
    ok = np.abs(det) > 1e-10 * scale
    if not ok.any():
        return np.empty((0, k))
    sol = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
    slack = sol @ rows.T - rhs[None, :]
    feas = np.all(slack <= tol * (1.0 + np.abs(rhs))[None, :], axis=1)
    if n_eq:
        feas &= np.all(np.abs(sol @ A_eq.T - b_eq[None, :]) <= tol * (1.0 + np.abs(b_eq)), axis=1)
    sol = sol[feas]
    return _unique_rows(sol, tol)


def _unique_rows(points: np.ndarray, tol: float) -> np.ndarray:
    out: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    return np.array(out).reshape(-1, points.shape[1] if points.ndim == 2 else 0)


def polyhedron_vertices(omega: Sequence[int], family: VarietyFamily, margin: float = 0.0) -> np.ndarray:
    """Vertices of the closed polyhedron of ``omega`` intersected with ``z >= 0``.

    Subsets of ``k`` constraints are solved as linear systems; singular
    subsets are skipped and near-identical solutions merged.
    """
    A, b = constraint_system(omega, family)
    return _vertices(A, b - margin)


def tmax(zvertices) -> float:
    """Largest ``sum(exp(-z))`` over the given vertices.

    The polyhedron includes ``z >= 0`` so its recession cone lies in the
    nonnegative orthant, along which the objective cannot increase; the
    vertex maximum is therefore the global maximum.
    """
    zv = np.atleast_2d(np.asarray(zvertices, dtype=float))
    if zv.size == 0:
        raise EmptyVertexList("no vertices")
    return float(np.exp(-zv).sum(axis=1).max())


def tmin(omega: Sequence[int], family: VarietyFamily, tau: float = TAU, tol: float = SOLVER_TOL):
    """Minimum of ``sum(p)`` over the strict sign system, or None if infeasible."""
    A, b = constraint_system(omega, family)
    return _tmin(A, b, tau, tol=tol)


def _tmin(A, b, tau, A_eq=None, b_eq=None, tol=SOLVER_TOL):
    low = _tmin_with_center(A, b, tau, A_eq, b_eq, tol)
    return None if low is None else low[:2]


def _tmin_with_center(A, b, tau, A_eq=None, b_eq=None, tol=SOLVER_TOL):
    k = A.shape[1]
    if A.shape[0] == 0 and A_eq is None:
        z = np.full(k, Z_BOX)
        return float(np.exp(-z).sum()), z, np.zeros(k)
    lp = _max_slack(A, b, A_eq, b_eq)
    if lp is None or lp[0] < tau:
        return None
    t, z = _minimize_sum_exp(A, b - tau, lp[1], A_eq, b_eq, tol=tol)
    return t, z, lp[1]


def certify(A, b, tau=TAU, A_eq=None, b_eq=None, tol=SOLVER_TOL) -> Optional[Certificate]:
    """Decide whether the shrunk polyhedron meets the z-simplex.

    Returns the extrema of ``sum(exp(-z))`` and a point of the z-simplex
    inside the polyhedron, or None when ``t_min > 1`` or ``t_max < 1``.
    """
    low = _tmin_with_center(A, b, tau, A_eq, b_eq, tol=tol)
    if low is None:
        return None
    t_lo, z_lo, center = low
    if t_lo > 1.0:
        return None
    verts = _vertices(A, b - tau, A_eq, b_eq)
    if len(verts) == 0:
        return None
    sums = np.exp(-verts).sum(axis=1)
    j = int(np.argmax(sums))
    t_hi, z_hi = float(sums[j]), verts[j]
    if t_hi < 1.0:
        return None
    if t_lo == 1.0:
        wz = z_lo
    elif t_hi == 1.0:
        wz = z_hi
    else:
        seg = lambda s: np.exp(-(z_lo + s * (z_hi - z_lo))).sum() - 1.0
        s = brentq(seg, 0.0, 1.0, xtol=1e-15)
        wz = z_lo + s * (z_hi - z_lo)
    return Certificate(t_lo, t_hi, wz, center)


def _witness_point(cert: Certificate, omega, family: VarietyFamily) -> Optional[SimplexPoint]:
    """A simplex point realising ``omega`` strictly, or None.

    Every normal sums to zero, so the polyhedron is invariant under shifts
    along ``(1, ..., 1)`` and normalising ``exp(-z)`` for the max-slack
    point keeps it inside the set.  That point is well centred; the
    crossing point of the certificate is the fallback.
    """
    for z in (cert.center_z, cert.witness_z):
        if z is None:
            continue
        p = np.exp(-(z - z.min()))
        if not np.all(p > 0):
            continue
        point = SimplexPoint.normalized(p)
        if not len(family) or np.all(np.asarray(omega) * family.f(point.array[None, :])[0] < 0):
            return point
    return None


def _sign_of(family: VarietyFamily, entry: int, point: SimplexPoint) -> int:
    val = family.f(point.array[None, :])[0, entry]
    if val < 0:
        return 1
    if val > 0:
        return -1
    return 0


def enumerate_sign_vectors(family: VarietyFamily, *, prune: bool = True, cap: int = DEFAULT_ENUM_CAP,
                           tau: float = TAU, tol: float = SOLVER_TOL) -> list[tuple[SignVector, Certificate]]:
    """All realised sign vectors of a family with their certificates, sorted."""
    M = len(family)
    found: list[tuple[SignVector, Certificate]] = []
    if not prune:
        if M > cap:
            raise CapExceeded(f"{M} varieties exceed the brute-force cap of {cap}")
        for omega in itertools.product((-1, 1), repeat=M):
            A, b = constraint_system(omega, family)
            cert = certify(A, b, tau, tol=tol)
            if cert is not None:
                found.append((omega, cert))
        return sorted(found, key=lambda t: t[0])

    def node(prefix: tuple[int, ...], witness: Optional[SimplexPoint]):
        d = len(prefix)
        if d == M:
            A, b = constraint_system(prefix, family)
            cert = certify(A, b, tau, tol=tol)
            if cert is not None:
                found.append((prefix, cert))
            return
        inherited = _sign_of(family, d, witness) if witness is not None else 0
        for s in (-1, 1):
            child = prefix + (s,)
            if s == inherited:
                node(child, witness)
                continue
            A, b = constraint_system(child, family, entries=range(d + 1))
            cert = certify(A, b, tau, tol=tol)
            if cert is None:
                continue
            node(child, _witness_point(cert, child, _prefix_family(family, d + 1)))

    node((), None)
    return sorted(found, key=lambda t: t[0])


def _prefix_family(family: VarietyFamily, d: int) -> VarietyFamily:
    return replace(family, normals=family.normals[:d], offsets=family.offsets[:d],
                   members=family.members[:d])


def find_continuity_sets(phat: EmpiricalDistribution, *, prune: bool = True, cap: int = DEFAULT_ENUM_CAP,
                         tau: float = TAU, tol: float = SOLVER_TOL, geometry: bool = True) -> list[ContinuitySet]:
    """Continuity sets of the p-value of ``phat`` in lexicographic ``omega`` order."""
    return family_continuity_sets(build_family(phat), prune=prune, cap=cap, tau=tau, tol=tol,
                                  geometry=geometry)


def family_continuity_sets(family: VarietyFamily, *, prune: bool = True, cap: int = DEFAULT_ENUM_CAP,
                           tau: float = TAU, tol: float = SOLVER_TOL, geometry: bool = True) -> list[ContinuitySet]:
    sets = [
        ContinuitySet(omega, cert.t_min, cert.t_max, _witness_point(cert, omega, family), family)
        for omega, cert in enumerate_sign_vectors(family, prune=prune, cap=cap, tau=tau, tol=tol)
    ]
    if geometry and family.k == 3:
        sets = attach_vertices(sets, family)
    return sets


# ---------------------------------------------------------------------------
# Vertices of continuity sets (k = 3)


def _line_roots(z0: np.ndarray, d: np.ndarray) -> list[float]:
    """Parameters ``t`` where ``z0 + t d`` crosses ``sum(exp(-z)) = 1``.

    The function is convex in ``t`` so there are at most two crossings.
    """
    g = lambda t: float(np.exp(-(z0 + t * d)).sum() - 1.0)

    def expand(start, step, fn, want_positive):
        t, width = start, step
        for _ in range(60):
            t = start + width
            if np.min(z0 + t * d) < -700:
                return None
            val = fn(t)
            if (val > 0) == want_positive:
                return t
            width *= 2.0
            if abs(width) > 1e4:
                return None
        return None

    pos, neg = d > 1e-14, d < -1e-14
    roots: list[float] = []
    if pos.any() and neg.any():
        dg = lambda t: float(-(d * np.exp(-(z0 + t * d))).sum())
        if dg(0.0) < 0:
            lo, hi = 0.0, expand(0.0, 1.0, dg, True)
        else:
            lo, hi = expand(0.0, -1.0, dg, False), 0.0
        if lo is None or hi is None:
            return roots
        t_star = brentq(dg, lo, hi, xtol=1e-15) if dg(lo) * dg(hi) < 0 else lo
        g_min = g(t_star)
        if g_min > 0:
            return roots
        if g_min == 0:
            return [t_star]
        for step in (-1.0, 1.0):
            far = expand(t_star, step, g, True)
            if far is not None:
                roots.append(brentq(g, *sorted((t_star, far)), xtol=1e-15, rtol=4 * np.finfo(float).eps))
        return roots
    if g(0.0) == 0.0:
        return [0.0]
    # Monotone along the line: the function grows where z decreases.
    grow = -1.0 if pos.any() else 1.0
    want = g(0.0) < 0
    far = expand(0.0, grow if want else -grow, g, want)
    if far is not None:
        roots.append(brentq(g, *sorted((0.0, far)), xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def family_vertices(family: VarietyFamily) -> list[SetVertex]:
    """Points where two varieties of a ``k = 3`` family cross inside the simplex.

    Each pair of hyperplanes meets in a z-space line, intersected with the
    z-simplex by a one-dimensional convex root search.  Parallel pairs are
    skipped and coincident vertices merged.
    """
    if family.k != 3:
        raise ValueError("vertex enumeration is implemented for k = 3 only")
    out: list[SetVertex] = []
    pts: list[np.ndarray] = []
    skipped = 0
    for e1, e2 in itertools.combinations(range(len(family)), 2):
        c = family.normals[[e1, e2]]
        rhs = family.offsets[[e1, e2]]
        d = np.cross(c[0], c[1])
        if np.linalg.norm(d) < 1e-9:
            skipped += 1
            continue
        d = d / np.linalg.norm(d)
        z0 = np.linalg.lstsq(c, rhs, rcond=None)[0]
        for t in _line_roots(z0, d):
            p = np.exp(-(z0 + t * d))
            if not np.all(p > 0):
                continue
            p = p / p.sum()
            f = family.f(p[None, :])[0]
            if abs(f[e1]) > ON_VARIETY_TOL or abs(f[e2]) > ON_VARIETY_TOL:
                continue
            if any(np.max(np.abs(p - q)) <= VERTEX_MERGE_TOL for q in pts):
                continue
            pts.append(p)
            incident = frozenset(int(i) for i in np.flatnonzero(np.abs(f) <= ON_VARIETY_TOL))
            out.append(SetVertex(SimplexPoint.normalized(p), (e1, e2), incident))
    if skipped:
        log.debug("skipped %d rank-deficient variety pairs", skipped)
    return out


def find_vertices(phat: EmpiricalDistribution) -> list[SetVertex]:
    return family_vertices(build_family(phat))


_TANGENT = np.array([[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]]) / np.array([[np.sqrt(2)], [np.sqrt(6)]])


def vertex_sign_vectors(vertex: SetVertex, family: VarietyFamily) -> list[SignVector]:
    """Sign vectors of the sets whose closure contains ``vertex``.

    Each incident variety is linearised in the tangent plane of the
    simplex; the sectors between consecutive zero directions give the
    local sign patterns.  Non-incident entries keep their sign at the
    vertex.
    """
    p = vertex.point.array
    f = family.f(p[None, :])[0]
    base = np.where(f < 0, 1, -1)
    inc = sorted(vertex.incident)
    grads = -family.normals[inc] / p[None, :]
    ab = grads @ _TANGENT.T  # f ~ a cos(theta) + b sin(theta)
    angles = []
    for a, bb in ab:
        th = math.atan2(-a, bb)
        angles.extend([th % (2 * math.pi), (th + math.pi) % (2 * math.pi)])
    angles = sorted(angles)
    mids = [(angles[i] + angles[(i + 1) % len(angles)] + (2 * math.pi if i == len(angles) - 1 else 0)) / 2
            for i in range(len(angles))]
    out = []
    for th in mids:
        vals = ab[:, 0] * math.cos(th) + ab[:, 1] * math.sin(th)
        omega = base.copy()
        omega[inc] = np.where(vals < 0, 1, -1)
        sv = tuple(int(x) for x in omega)
        if sv not in out:
            out.append(sv)
    return out


def attach_vertices(sets: list[ContinuitySet], family: VarietyFamily) -> list[ContinuitySet]:
    by_omega = {s.omega: [] for s in sets}
    for v in family_vertices(family):
        for omega in vertex_sign_vectors(v, family):
            if omega in by_omega:
                by_omega[omega].append(v)
            else:
                log.debug("sector %s at vertex %s not among enumerated sets", omega, v.point)
    return [replace(s, vertices=tuple(by_omega[s.omega])) for s in sets]


# ---------------------------------------------------------------------------
# Touching varieties


def touching_entries(cset: ContinuitySet, tau: float = TAU) -> frozenset[int]:
    """Family entries whose variety meets the closure of the set."""
    if cset.touching is not None:
        return cset.touching
    family = cset.family
    found = set()
    for v in cset.vertices:
        found.update(v.incident)
    for e in range(len(family)):
        if e in found:
            continue
        others = [i for i in range(len(family)) if i != e]
        A, b = constraint_system([cset.omega[i] for i in others], family, entries=others)
        cert = certify(A, b, tau, A_eq=family.normals[[e]], b_eq=family.offsets[[e]])
        if cert is not None:
            found.add(e)
    return frozenset(found)


def with_touching(cset: ContinuitySet, tau: float = TAU) -> ContinuitySet:
    if cset.touching is not None:
        return cset
    return replace(cset, touching=touching_entries(cset, tau))


def touching_varieties(cset: ContinuitySet, phat: Optional[EmpiricalDistribution] = None) -> set[int]:
    """1-based variety indices touching the set (single-observation families)."""
    return {e + 1 for e in touching_entries(cset)}


# ---------------------------------------------------------------------------
# Grid-based region statistics (k = 3)

_HEX = np.array([[0, 1, 1], [1, 1, 1], [1, 1, 0]], dtype=bool)


def _grid_labels(cset: ContinuitySet, eta: int):
    grid = simplex_grid(3, eta)
    counts = np.rint(grid * eta).astype(int)
    inside = cset.contains(grid)
    mask = np.zeros((eta + 1, eta + 1), dtype=bool)
    mask[counts[inside, 0], counts[inside, 1]] = True
    labels, n = ndimage.label(mask, structure=_HEX)
    if n > 1:
        labels, n = _merge_through_set(cset, labels, n, eta)
    return labels, n


def _merge_through_set(cset: ContinuitySet, labels: np.ndarray, n: int, eta: int, steps: int = 64):
    # Thin parts of a set break up on the grid; rejoin components that a
    # straight segment inside the set connects.
    idx = np.argwhere(labels > 0)
    pts = np.column_stack([idx[:, 0], idx[:, 1], eta - idx[:, 0] - idx[:, 1]]) / eta
    comp = labels[idx[:, 0], idx[:, 1]] - 1
    pairs = cKDTree(pts).query_pairs(3.0 / eta, output_type="ndarray")
    pairs = pairs[comp[pairs[:, 0]] != comp[pairs[:, 1]]]
    t = np.linspace(0.0, 1.0, steps)[None, :, None]
    edges = set()
    for i, j in pairs:
        a, b = int(comp[i]), int(comp[j])
        if (min(a, b), max(a, b)) in edges:
            continue
        seg = (pts[i][None, None, :] * (1 - t) + pts[j][None, None, :] * t)[0]
        if cset.contains(seg).all():
            edges.add((min(a, b), max(a, b)))
    if not edges:
        return labels, n
    e = np.array(sorted(edges))
    graph = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    n, merged = connected_components(graph, directed=False)
    out = np.zeros_like(labels)
    out[idx[:, 0], idx[:, 1]] = merged[comp] + 1
    return out, n


def count_regions(cset: ContinuitySet, grid_resolution: int) -> int:
    """Connected components of the set's grid points under 6-neighbour adjacency."""
    if cset.family.k != 3:
        raise ValueError("region counting is implemented for k = 3 only")
    return _grid_labels(cset, grid_resolution)[1]


def zero_vertex_regions(cset: ContinuitySet, grid_resolution: int) -> int:
    """Grid components whose closure contains none of the set's vertices.

    A component reaches a vertex when one of its points near the vertex
    sees it along a segment that stays in the set.
    """
    labels, n = _grid_labels(cset, grid_resolution)
    if n == 0:
        return 0
    eta = grid_resolution
    idx = np.argwhere(labels > 0)
    pts = np.column_stack([idx[:, 0], idx[:, 1], eta - idx[:, 0] - idx[:, 1]]) / eta
    comp = labels[idx[:, 0], idx[:, 1]]
    t = np.linspace(0.0, 1.0 - 1e-6, 64)[:, None]
    with_vertex = set()
    for v in cset.vertices:
        dist = np.linalg.norm(pts - v.point.array[None, :], axis=1)
        for r in range(1, n + 1):
            if r in with_vertex:
                continue
            rows = np.flatnonzero(comp == r)
            for i in rows[np.argsort(dist[rows])[:5]]:
                if dist[i] <= 2.5 / eta or cset.contains(pts[i] * (1 - t) + v.point.array * t).all():
                    with_vertex.add(r)
                    break
    return n - len(with_vertex)


def region_bounds(phat: EmpiricalDistribution) -> dict:
    """Upper bounds on region counts for ``k = 3``: zero-vertex and total."""
    m = type_count(phat.k, phat.n)
    return {"zero_vertex": m, "total": 8 * (phat.n + 2) ** 4, "vertices": 2 * math.comb(m - 1, phat.k - 1)}
