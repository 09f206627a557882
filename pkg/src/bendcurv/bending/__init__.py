"""Flows of surfaces and polyhedra, and the experiments run on them."""
from .experiments import (
    ScalingTable, SchlafliResult, TraceResult, calibrate_trace_bound,
    chord_derivative_experiment, chord_limit_ratio, edge_scaling_experiment, fit_slope,
    invariance_trace, random_convex_polytope, richardson, schlafli_residual,
    SCALING_TARGETS,
)
from .flex import (
    PolyFlex, bricard_seed, flex_continuation, gauge_fix, octahedron_facets, tetrahedron,
)
from .flows import (
    RolledStrip, SmoothFlow, TriangulatedFlow, VertexFlow, corrugation_flow, cylinder_flow,
    flow_from_spec, isometry_defect, random_smooth_vertex_flow, rigid_flow,
    rigid_vertex_flow, rotation, scaling_vertex_flow,
)
