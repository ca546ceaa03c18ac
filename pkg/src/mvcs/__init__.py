"""Exact multinomial p-values, minimum-volume confidence sets and their geometry."""

__version__ = "0.1.0"

from .abtest import (
    DisjointnessVerdict,
    LipschitzBound,
    Status,
    certify_disjoint,
    joint_continuity_sets,
    lipschitz_bound,
)
from .continuity import (
    ContinuitySet,
    SetVertex,
    find_continuity_sets,
    find_vertices,
    polyhedron_vertices,
    region_bounds,
    tmax,
    tmin,
    touching_varieties,
)
from .covering import (
    CoverGrid,
    DistanceResult,
    build_cover,
    discrete_neighbor,
    eta_for_epsilon,
    min_distance_to_set,
    min_distance_to_variety,
    orthogonality_candidates_k3,
)
from .errors import (
    BoundaryPoint,
    CapExceeded,
    EmptyVertexList,
    MVCSError,
    NoCandidates,
    NotOnSimplex,
    SolverFailure,
)
from .simplex_core import (
    EmpiricalDistribution,
    PValueResult,
    SimplexPoint,
    coverage_probability,
    enumerate_types,
    multinomial_pmf,
    mvcs_member,
    pvalue,
    type_count,
)
from .varieties import (
    Halfspace,
    SplittingVariety,
    build_varieties,
    eval_f,
    to_halfspace,
    z_inverse,
    z_transform,
)
