"""Box dimension of orbits near fixed points of maps and singularities of flows.

Orbits converging to a hyperbolic fixed point have box dimension zero; near
nonhyperbolic points the dimension is positive (``1 - 1/k`` for
k-nondegenerate one-dimensional maps).  The package estimates these
dimensions, classifies fixed points spectrally, and computes the invariant
manifolds that carry the dimension from one to several variables.
"""

from .boxdim import (
    DimensionEstimate,
    estimate_dimension,
    exact_measure_1d,
    grid_box_count,
    minkowski_content,
    projective_dimensions,
    tail_exponent_dimension,
)
from .classify import (
    classify_flow_singularity,
    classify_map_fixed_point,
    detect_nonhyperbolic_via_dimension,
    eigenvalues,
    jacobian,
)
from .dynsys import (
    FlowSystem,
    MapSystem,
    Orbit,
    generate_flow_orbit,
    generate_inverse_orbit,
    generate_orbit,
    unit_time_map,
)
from .expr import differentiate, evaluate, parse, taylor_coefficients
from .manifolds import lift_orbit, nondegeneracy_order, restrict_to_manifold, solve_invariance
from .syslib import get_entry, run_orbit

__version__ = "0.1.0"
