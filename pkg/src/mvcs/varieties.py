"""Discontinuity varieties of the exact p-value and their z-space halfspaces.

For an observation ``phat`` and another type ``qhat`` the p-value can jump
where both are equally likely.  That surface is

    f(p) = 1 - c0 * prod(p_i ** c_i) = 0,    c_i = n*(phat_i - qhat_i),

with ``c0 = prod(qhat_i!) / prod(phat_i!)`` kept in log form.  With
``z_i = -log p_i`` it becomes the hyperplane ``z . c = log c0``, and

    f(p) < 0  <=>  z . c < log c0  <=>  P_p(phat) > P_p(qhat).

A sign vector entry of ``+1`` selects ``f < 0`` (the type is counted in
the p-value sum), ``-1`` selects ``f > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryPoint, NotOnSimplex
from .simplex_core import (
    DEFAULT_TYPE_CAP,
    EmpiricalDistribution,
    SimplexPoint,
    enumerate_types,
    log_factorial,
)

Z_SIMPLEX_TOL = 1e-10


@dataclass(frozen=True)
class SplittingVariety:
    index: int
    qhat: EmpiricalDistribution
    c: tuple[int, ...]
    log_c0: float

    @property
    def normal(self) -> np.ndarray:
        return np.asarray(self.c, dtype=float)


@dataclass(frozen=True)
class Halfspace:
    normal: tuple[float, ...]
    offset: float

    def side(self, z) -> float:
        """Sign of ``z . normal - offset``; equals the sign of ``f`` at ``exp(-z)``."""
        return float(np.sign(np.dot(z, self.normal) - self.offset))


def build_varieties(phat: EmpiricalDistribution, cap: int = DEFAULT_TYPE_CAP) -> list[SplittingVariety]:
    """One variety per type other than ``phat``, in canonical type order."""
    out = []
    lf_p = float(log_factorial(phat.counts).sum())
    pc = np.asarray(phat.counts)
    for qhat in enumerate_types(phat.k, phat.n, cap=cap):
        if qhat == phat:
            continue
        c = tuple(int(x) for x in pc - np.asarray(qhat.counts))
        log_c0 = float(log_factorial(qhat.counts).sum()) - lf_p
        out.append(SplittingVariety(len(out) + 1, qhat, c, log_c0))
    return out


def _interior_array(p) -> np.ndarray:
    arr = p.array if isinstance(p, SimplexPoint) else np.asarray(p, dtype=float)
    if np.any(arr <= 0.0):
        raise BoundaryPoint(f"point has a nonpositive coordinate: {arr.tolist()}")
    return arr


def eval_f(v: SplittingVariety, p) -> float:
    """``1 - c0 prod p_i^c_i`` at an interior point."""
    arr = _interior_array(p)
    return float(-np.expm1(v.log_c0 + np.dot(v.normal, np.log(arr))))


def f_values(normals: np.ndarray, offsets: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate many varieties at many interior points: shape ``(points, varieties)``.

    Points with a zero coordinate get the limit value wherever the exponent
    of that coordinate is zero and ``nan`` otherwise.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.log(points)
        zero = ~np.isfinite(logp)
        expo = np.where(zero, 0.0, logp) @ normals.T + np.asarray(offsets)[None, :]
        bad = zero.astype(float) @ (normals.T != 0).astype(float)
        out = -np.expm1(expo)
    out[bad > 0] = np.nan
    return out


def to_halfspace(v: SplittingVariety) -> Halfspace:
    return Halfspace(tuple(float(x) for x in v.c), float(v.log_c0))


def z_transform(p) -> np.ndarray:
    return -np.log(_interior_array(p))


def z_inverse(z) -> SimplexPoint:
    """Map z-space back to the simplex; rejects z off the curved z-simplex."""
    p = np.exp(-np.asarray(z, dtype=float))
    if abs(p.sum() - 1.0) > Z_SIMPLEX_TOL:
        raise NotOnSimplex(f"sum(exp(-z)) = {p.sum()!r} != 1")
    return SimplexPoint.normalized(p)


@dataclass(frozen=True, eq=False)
class VarietyFamily:
    """Deduplicated varieties of one or more observations.

    Entry ``e`` is the hyperplane ``normals[e] . z = offsets[e]``; ``members[e]``
    lists the ``(source, index)`` pairs that induce it.
    """

    sources: tuple[EmpiricalDistribution, ...]
    varieties: tuple[tuple[SplittingVariety, ...], ...]
    normals: np.ndarray
    offsets: np.ndarray
    members: tuple[tuple[tuple[int, int], ...], ...]
    entry_of: dict = field(repr=False)

    @property
    def k(self) -> int:
        return self.sources[0].k

    def __len__(self) -> int:
        return len(self.members)

    def representative(self, e: int) -> SplittingVariety:
        s, ell = self.members[e][0]
        return self.varieties[s][ell - 1]

    def f(self, points) -> np.ndarray:
        return f_values(self.normals, self.offsets, points)


def build_family(*phats: EmpiricalDistribution, cap: int = DEFAULT_TYPE_CAP) -> VarietyFamily:
    """Union of the varieties of each observation with exact duplicates merged.

    Duplicates are pairs with equal integer normal and equal ``log c0`` up to
    rounding; they only arise when several observations are combined.
    """
    if not phats:
        raise ValueError("need at least one observation")
    if len({p.k for p in phats}) != 1:
        raise ValueError("observations must share k")
    keys: dict = {}
    normals, offsets, members = [], [], []
    per_source = []
    entry_of = {}
    for s, phat in enumerate(phats):
        vs = tuple(build_varieties(phat, cap=cap))
        per_source.append(vs)
        for v in vs:
            key = (v.c, round(v.log_c0, 10))
            if key not in keys:
                keys[key] = len(members)
                normals.append(v.c)
                offsets.append(v.log_c0)
                members.append([])
            e = keys[key]
            members[e].append((s, v.index))
            entry_of[(s, v.index)] = e
    k = phats[0].k
    return VarietyFamily(
        sources=tuple(phats),
        varieties=tuple(per_source),
        normals=np.asarray(normals, dtype=float).reshape(-1, k),
        offsets=np.asarray(offsets, dtype=float),
        members=tuple(tuple(m) for m in members),
        entry_of=entry_of,
    )
