"""Discrete total mean curvature of triangulated surfaces under bending."""
from . import errors, kernels
from .errors import *  # noqa: F401,F403
from .geometry import (
    Corrugation, Cylinder, FunctionChart, Plane, RigidChart, Sphere, SurfaceChart, Torus,
    NormalField, chart_from_spec, fundamental_forms, geodesic_shoot, mean_curvature,
    principal_curvatures, retract, signed_distance_retraction, smooth_mean_curvature_integral,
)
from .mesh import (
    TriMesh, RegularityReport, build_mesh, generate_refinement, read_off, regularity_report,
    warp_parameters, write_off,
)
from .curvature import (
    dihedral, dihedral_table, discrete_first_variation, edge_average_field, facet_normal,
    isometric_counterexample_pair, oriented_facet_normals, sum_length_theta, write_edge_csv,
)

__version__ = "0.1.0"
