"""marginlab: optimal-value (marginal) functions on finite grids.

The library evaluates marginal functions mu(x) = min {phi(x, y) : y in F(x)}
of parametric minimization problems sampled on uniform grids, and verifies
the convex-analysis identities that relate them to Fenchel conjugates,
epsilon-subdifferentials, near convexity of graphs and Lagrangian duality.
Every checker pairs a structured formula with an independent brute-force
route and reports where the two agree.
"""

from .conjugate import (
    biconjugate,
    conjugate,
    conjugate_at,
    conjugate_fast,
    default_dual_grid,
    inf_convolution,
    max_dots_minus,
    support_function,
    thread_count,
)
from .core import (
    INF,
    NEG_INF,
    POS_INF,
    Axis,
    DualGrid,
    ExtReal,
    Grid,
    GriddedFunction,
    ext_add,
    ext_add_arrays,
    ext_scale,
    ext_sum,
    eval_on_grid,
    product_grid,
    refine,
    render_value,
)
from .duality import (
    ConjugateRepresentationReport,
    DualityReport,
    LagrangianIdentityReport,
    LagrangianTable,
    SlaterReport,
    conjugate_representation_check,
    dual_value_1,
    dual_value_2,
    graph_adapted_xgrid,
    lagrangian_dual,
    lagrangian_identity_check,
    primal_value,
    sampled_inf_convolution,
    slater_strong_duality_check,
    strong_duality_check,
)
from .errors import (
    DimensionMismatch,
    ExpressionError,
    ExprSyntaxError,
    GridMismatch,
    GridNotAdapted,
    HypothesisNotMet,
    MarginlabError,
    MissingSection,
    NonFiniteExpression,
    NotANode,
    NotFiniteAtPoint,
    NotNodePreserving,
    NotOnGraph,
    PointNotInSet,
    SpecError,
    SpecSyntaxError,
    UnknownKey,
    UnknownVariable,
    UnsupportedDimension,
    UnsupportedShape,
    ZeroNotOnGrid,
)
from .marginal import (
    ATTAINED,
    INFEASIBLE,
    UNBOUNDED,
    EpigraphReport,
    ProbeLevel,
    LipschitzReport,
    MarginalResult,
    SemicontinuityReport,
    convexity_check,
    domain_identity_check,
    epigraph_projection_check,
    eta_solutions,
    lipschitz_probe,
    marginal,
    semicontinuity_probe,
)
from .nearconvex import (
    ImageReport,
    IntersectionReport,
    NearConvexityReport,
    RasterSet,
    closure,
    dump_raster,
    hull_raster,
    image_preservation_check,
    interior,
    intersection_preservation_check,
    is_convex_raster,
    is_int_nearly_convex,
    is_nearly_convex_with_witness,
    load_raster,
    projection_map,
    refine_raster,
)
from .setmap import (
    SetValuedMap,
    full_map,
    lipschitz_estimate_map,
    map_conjugate,
    map_conjugate_at,
    map_from_constraints,
    map_from_inequalities,
    map_from_points,
)
from .subdiff import (
    DEFAULT_ETAS,
    HPolyhedron,
    RestrictedConjugateReport,
    Interval,
    SumRuleReport,
    TheoremReport,
    conj_subdiff_check,
    eps_coderivative,
    eps_normal_cone,
    eps_subdifferential,
    feasible_point,
    is_empty,
    marginal_subdiff_check,
    polyhedron_query,
    restricted_conjugate_check,
    sum_rule_check,
)
from .cli import ProblemSpec, parse_spec

__version__ = "0.1.0"

__all__ = [
    "INF",
    "INFEASIBLE",
    "ATTAINED",
    "Axis",
    "ConjugateRepresentationReport",
    "DEFAULT_ETAS",
    "DimensionMismatch",
    "DualGrid",
    "DualityReport",
    "EpigraphReport",
    "ExprSyntaxError",
    "ExpressionError",
    "ExtReal",
    "NEG_INF",
    "POS_INF",
    "Grid",
    "GriddedFunction",
    "GridMismatch",
    "GridNotAdapted",
    "HPolyhedron",
    "HypothesisNotMet",
    "ImageReport",
    "Interval",
    "IntersectionReport",
    "LagrangianIdentityReport",
    "LagrangianTable",
    "LipschitzReport",
    "MarginalResult",
    "MarginlabError",
    "MissingSection",
    "NearConvexityReport",
    "NonFiniteExpression",
    "NotANode",
    "NotFiniteAtPoint",
    "NotNodePreserving",
    "NotOnGraph",
    "PointNotInSet",
    "ProbeLevel",
    "ProblemSpec",
    "RasterSet",
    "RestrictedConjugateReport",
    "SemicontinuityReport",
    "SetValuedMap",
    "SlaterReport",
    "SpecError",
    "SpecSyntaxError",
    "SumRuleReport",
    "TheoremReport",
    "UNBOUNDED",
    "UnknownKey",
    "UnknownVariable",
    "UnsupportedDimension",
    "UnsupportedShape",
    "ZeroNotOnGrid",
    "biconjugate",
    "closure",
    "conj_subdiff_check",
    "conjugate",
    "conjugate_at",
    "conjugate_fast",
    "conjugate_representation_check",
    "convexity_check",
    "default_dual_grid",
    "domain_identity_check",
    "dual_value_1",
    "dual_value_2",
    "dump_raster",
    "epigraph_projection_check",
    "eps_coderivative",
    "eps_normal_cone",
    "eps_subdifferential",
    "eta_solutions",
    "eval_on_grid",
    "ext_add",
    "ext_add_arrays",
    "ext_scale",
    "ext_sum",
    "feasible_point",
    "full_map",
    "graph_adapted_xgrid",
    "hull_raster",
    "image_preservation_check",
    "inf_convolution",
    "interior",
    "intersection_preservation_check",
    "is_convex_raster",
    "is_empty",
    "is_int_nearly_convex",
    "is_nearly_convex_with_witness",
    "lagrangian_dual",
    "lagrangian_identity_check",
    "lipschitz_estimate_map",
    "lipschitz_probe",
    "load_raster",
    "map_conjugate",
    "map_conjugate_at",
    "max_dots_minus",
    "map_from_constraints",
    "map_from_inequalities",
    "map_from_points",
    "marginal",
    "marginal_subdiff_check",
    "parse_spec",
    "polyhedron_query",
    "primal_value",
    "product_grid",
    "projection_map",
    "refine",
    "refine_raster",
    "render_value",
    "restricted_conjugate_check",
    "sampled_inf_convolution",
    "semicontinuity_probe",
    "slater_strong_duality_check",
    "strong_duality_check",
    "sum_rule_check",
    "support_function",
    "thread_count",
]
