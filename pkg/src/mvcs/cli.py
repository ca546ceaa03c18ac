"""Command-line front end; every subcommand prints one JSON document.

Exit codes: 0 on success, 2 for invalid input, 3 when an enumeration cap
is hit or a solver fails.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from . import __version__
from .abtest import DEFAULT_EPSILON0, DEFAULT_MAX_REFINEMENTS, certify_disjoint
from .continuity import DEFAULT_ENUM_CAP, SOLVER_TOL, TAU, VERTEX_MERGE_TOL, ContinuitySet, find_continuity_sets, touching_entries
from .covering import build_cover, inside_mask
from .errors import CapExceeded, MVCSError, NoCandidates, SolverFailure
from .simplex_core import EmpiricalDistribution, SimplexPoint, pvalue, pvalues, simplex_grid

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILURE = 3
P_SUM_TOL = 1e-9


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    tau: float = TAU
    solver_tol: float = SOLVER_TOL
    vertex_merge_tol: float = VERTEX_MERGE_TOL
    cap: int = DEFAULT_ENUM_CAP
    cache_dir: Optional[str] = None
    output: Optional[str] = None
    seed: int = 0
    use_cache: bool = True

    def __post_init__(self):
        for name in ("tau", "solver_tol", "vertex_merge_tol"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if self.cap < 1:
            raise UsageError("cap must be >= 1")

    @property
    def cache_path(self) -> Path:
        if self.cache_dir:
            return Path(self.cache_dir)
        env = os.environ.get("MVCS_CACHE_DIR")
        if env:
            return Path(env)
        return Path.home() / ".cache" / "mvcs"

    def tolerances(self) -> dict:
        return {"tau": self.tau, "solver_tol": self.solver_tol, "vertex_merge_tol": self.vertex_merge_tol,
                "cap": self.cap}


# ---------------------------------------------------------------------------
# Parsing helpers


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _observation(text: str, k: int, n: int) -> EmpiricalDistribution:
    counts = _ints(text)
    if len(counts) != k:
        raise UsageError(f"observation {text!r} has {len(counts)} entries, expected k={k}")
    if any(c < 0 for c in counts):
        raise UsageError(f"negative count in {text!r}")
    if sum(counts) != n:
        raise UsageError(f"observation {text!r} sums to {sum(counts)}, expected n={n}")
    return EmpiricalDistribution(counts)


def _point(text: str, k: int) -> SimplexPoint:
    """Parse a simplex point; sums within P_SUM_TOL of one are renormalised."""
    values = _floats(text)
    if len(values) != k:
        raise UsageError(f"point {text!r} has {len(values)} entries, expected k={k}")
    if any(not math.isfinite(v) or v < 0 for v in values) or abs(math.fsum(values) - 1.0) > P_SUM_TOL:
        raise UsageError(f"point {text!r} is not on simplex")
    return SimplexPoint.normalized(values)


def _omega(text: str) -> tuple[int, ...]:
    # Empty for an observation with no varieties: the set is the whole simplex.
    omega = _ints(text) if text.strip() else ()
    if any(w not in (-1, 1) for w in omega):
        raise UsageError("omega entries must be +1 or -1")
    return omega


def _finite(x: float) -> Optional[float]:
    return float(x) if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# Cache


def _cache_key(kind: str, params: dict, config: RunConfig) -> str:
    blob = json.dumps({"kind": kind, "params": params, "tol": config.tolerances()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cached(kind: str, params: dict, config: RunConfig, compute) -> str:
    """Serialized result from the cache, computing and storing it on a miss."""
    path = config.cache_path / f"{kind}-{_cache_key(kind, params, config)}.json"
    if config.use_cache and path.exists():
        return path.read_text(encoding="utf-8")
    text = _dumps(compute())
    if config.use_cache:
        _atomic_write(path, text)
    return text


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Serialization


def set_to_json(cset: ContinuitySet) -> dict:
    return {
        "omega": list(cset.omega),
        "t_min": _finite(cset.t_min),
        "t_max": _finite(cset.t_max),
        "witness": list(cset.witness.probs) if cset.witness is not None else None,
        # 1-based variety indices, as used for sign vectors.
        "touching": sorted(e + 1 for e in touching_entries(cset)),
        "vertices": [
            {"point": list(v.point.probs), "defining": [e + 1 for e in v.defining]} for v in cset.vertices
        ],
    }


def _sets(phat: EmpiricalDistribution, config: RunConfig, prune: bool = True) -> list[ContinuitySet]:
    return find_continuity_sets(phat, prune=prune, cap=config.cap, tau=config.tau, tol=config.solver_tol)


def _pick(sets: list[ContinuitySet], omega: tuple[int, ...]) -> ContinuitySet:
    for s in sets:
        if s.omega == omega:
            return s
    raise UsageError(f"no continuity set with omega {list(omega)}")


def _components(mask: np.ndarray, counts: np.ndarray, eta: int) -> int:
    grid = np.zeros((eta + 1, eta + 1), dtype=bool)
    grid[counts[mask, 0], counts[mask, 1]] = True
    hexagonal = np.array([[0, 1, 1], [1, 1, 1], [1, 1, 0]], dtype=bool)
    return int(ndimage.label(grid, structure=hexagonal)[1])


# ---------------------------------------------------------------------------
# Subcommands


def cmd_pvalue(args, config: RunConfig) -> str:
    phat = _observation(args.phat, args.k, args.n)
    p = _point(args.p, args.k)
    res = pvalue(phat, p)
    return _dumps({"value": res.value, "included_terms": res.included_terms, "anchor": res.anchor_probability,
                   "on_boundary": res.on_boundary})


def cmd_sets(args, config: RunConfig) -> str:
    phat = _observation(args.phat, args.k, args.n)
    params = {"counts": list(phat.counts), "prune": bool(args.prune)}
    return _cached("sets", params, config, lambda: [set_to_json(s) for s in _sets(phat, config, args.prune)])


def cmd_cover(args, config: RunConfig) -> str:
    if args.k != 3:
        raise UsageError("covers are implemented for k = 3 only")
    if args.delta < args.epsilon:
        raise UsageError("delta must be ≥ epsilon")
    if args.epsilon <= 0:
        raise UsageError("epsilon must be positive")
    phat = _observation(args.phat, args.k, args.n)
    cset = _pick(_sets(phat, config), _omega(args.omega))
    cover = build_cover(cset, args.epsilon, args.delta)
    out = cover.to_json()
    out["approximate"] = cover.approximate
    return _dumps(out)


def cmd_disjoint(args, config: RunConfig) -> str:
    if args.k != 3:
        raise UsageError("disjointness certification requires k = 3")
    if not 0.0 < args.alpha < 1.0:
        raise UsageError("alpha must lie in (0, 1)")
    p1 = _observation(args.phat1, args.k, args.n)
    p2 = _observation(args.phat2, args.k, args.n)
    verdict = certify_disjoint(p1, p2, args.alpha, args.epsilon0, args.max_refinements)
    return _dumps(verdict.to_json())


def cmd_figure(args, config: RunConfig) -> str:
    if args.k != 3:
        raise UsageError("figure data is produced for k = 3 only")
    if args.eta < 1:
        raise UsageError("eta must be >= 1")
    if not 0.0 < args.alpha < 1.0:
        raise UsageError("alpha must lie in (0, 1)")
    phat = _observation(args.phat, args.k, args.n)
    grid = simplex_grid(3, args.eta)
    counts = np.rint(grid * args.eta).astype(np.int64)
    rho = pvalues(phat, grid)
    member = rho >= args.alpha
    out = {"which": args.which, "phat": list(phat.counts), "alpha": args.alpha, "eta": args.eta}
    points = [{"counts": c.tolist(), "rho": float(r), "member": bool(m)} for c, r, m in zip(counts, rho, member)]
    if args.which == "confset":
        out["components"] = _components(member, counts, args.eta)
    elif args.which == "regions":
        sets = _sets(phat, config)
        # Points on a variety stay unassigned (null).
        for i, s in enumerate(sets):
            for j in np.flatnonzero(inside_mask(grid, s)):
                points[j]["omega_label"] = i
        for point in points:
            point.setdefault("omega_label", None)
        out["omegas"] = [list(s.omega) for s in sets]
    else:
        if args.omega is None:
            raise UsageError("--omega is required for the cover figure")
        epsilon = args.epsilon
        delta = args.delta if args.delta is not None else epsilon
        if delta < epsilon:
            raise UsageError("delta must be ≥ epsilon")
        cset = _pick(_sets(phat, config), _omega(args.omega))
        cover = build_cover(cset, epsilon, delta)
        # The cover lives on its own grid, so it replaces the rho grid.
        cover_grid = simplex_grid(3, cover.eta)
        labels = {p.counts: p.label for p in cover.points}
        cc = np.rint(cover_grid * cover.eta).astype(np.int64)
        crho = pvalues(phat, cover_grid)
        points = [
            {"counts": c.tolist(), "rho": float(r), "member": bool(r >= args.alpha),
             "cover_label": labels.get(tuple(int(x) for x in c), "none")}
            for c, r in zip(cc, crho)
        ]
        out.update(eta=cover.eta, omega=list(cset.omega), epsilon=epsilon, delta=delta)
    out["points"] = points
    return _dumps(out)


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvcs", description="Exact multinomial p-values and confidence sets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--tau", type=float, default=TAU, help="strictness margin for sign conditions")
    parser.add_argument("--solver-tol", type=float, default=SOLVER_TOL)
    parser.add_argument("--vertex-merge-tol", type=float, default=VERTEX_MERGE_TOL)
    parser.add_argument("--cap", type=int, default=DEFAULT_ENUM_CAP, help="brute-force enumeration cap")
    parser.add_argument("--cache-dir", default=None, help="overrides MVCS_CACHE_DIR")
    parser.add_argument("--no-cache", action="store_true")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("-o", "--output", default=None, help="also write the JSON here")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, phat=True):
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--n", type=int, required=True)
        if phat:
            p.add_argument("--phat", required=True, help="counts, e.g. 1,2,1")

    p = sub.add_parser("pvalue", help="exact p-value of an observation at a point")
    common(p)
    p.add_argument("--p", required=True, help="simplex point, e.g. 0.2,0.5,0.3")
    p.set_defaults(func=cmd_pvalue)

    p = sub.add_parser("sets", help="continuity sets of the p-value")
    common(p)
    p.add_argument("--prune", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_sets)

    p = sub.add_parser("cover", help="(epsilon, delta)-cover of one continuity set")
    common(p)
    p.add_argument("--omega", required=True, help="sign vector, e.g. 1,-1,1")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("disjoint", help="certify whether two confidence sets intersect")
    common(p, phat=False)
    p.add_argument("--phat1", required=True)
    p.add_argument("--phat2", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--epsilon0", type=float, default=DEFAULT_EPSILON0)
    p.add_argument("--max-refinements", type=int, default=DEFAULT_MAX_REFINEMENTS)
    p.set_defaults(func=cmd_disjoint)

    p = sub.add_parser("figure", help="grid data for plotting")
    p.add_argument("--which", choices=("confset", "regions", "cover"), required=True)
    common(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--eta", type=int, default=100, help="grid resolution")
    p.add_argument("--omega", default=None)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(args.tau, args.solver_tol, args.vertex_merge_tol, args.cap, args.cache_dir,
                           args.output, args.seed, not args.no_cache)
        text = args.func(args, config)
    except (CapExceeded, SolverFailure, NoCandidates) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MVCSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    sys.stdout.write(text)
    if config.output:
        _atomic_write(Path(config.output), text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
