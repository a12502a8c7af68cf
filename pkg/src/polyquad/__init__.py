"""Quadrature for weakly singular double integrals over convex polytope pairs.

The pipeline: describe the two polytopes with explicit face lattices, split
their Cartesian product into convex hulls of a singular and a regular face,
and tensor a Gauss-Jacobi rule in the cone direction with ordinary rules on
the faces.  See the README for the command line front end.
"""

from .assembly import (
    KernelRule,
    KernelSpec,
    assemble_kernel_rule,
    convergence_sweep,
    integrate,
    integrate_pieces,
    reference_integral,
)
from .decomposition import (
    HullPiece,
    PyramidalLattice,
    decompose_cube_pair,
    decompose_product,
    decompose_simplex_pair,
    enumerate_pyramids,
    merge_paths,
    product_lattice,
    pyramidal_lattice,
    triangulate,
)
from .face_rules import (
    FaceRule,
    RuleSources,
    cube_tensor_rule,
    duffy_simplex_rule,
    face_quadrature,
    load_generalized_rule,
    map_rule_to_face,
)
from .geometry import (
    Face,
    Polytope,
    affine_frame,
    cartesian_product,
    check_hull_assumption,
    cube,
    cube_pair,
    dist_to_affine_hull,
    double_pyramid,
    face_volume,
    hull_descriptor,
    load_polytope,
    simplex,
    simplex_pair,
)
from .kernels import builtin_kernels
from .quad1d import Rule1D, beta_fn, gauss_jacobi, gauss_legendre

__version__ = "0.1.0"
