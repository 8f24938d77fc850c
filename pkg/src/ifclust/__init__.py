"""Discrete and continuous search of optimal particle clusters.

The package builds an icosahedrally layered site lattice, relaxes clusters
under several pair potentials with a conjugate gradient minimizer, moves
through cluster space one site at a time by energy-ranked peeling, and stores
the resulting families of minima as delta-compressed catalogs.
"""

from .catalog import (
    ALIGN_LOCATE_TOL,
    VERIFY_TOL,
    Catalog,
    CatalogEntry,
    LookupOutcome,
    align_min_adj,
    build_catalog,
    load_reference_catalog,
    lookup_and_relax,
    orient_for_y_axis,
    parse_catalog,
    reconstruct,
    serialize_catalog,
)
from .errors import (
    AmbiguousSiteError,
    CatalogError,
    CatalogIntegrityError,
    CatalogSyntaxError,
    DegenerateGradientError,
    DomainError,
    FrontierExhaustedError,
    NumericBreakdownError,
    OffLatticeError,
    SymmetryViolationError,
    XyzParseError,
    ZeroEnergyError,
)
from .geometry import (
    MIN_SEPARATION,
    Cluster,
    CylindricalKey,
    Point3,
    Rotation,
    canonical_order,
    center_of_mass,
    cylindrical_key,
    distance,
    icosahedral_rotations,
    icosahedron_edges,
    icosahedron_faces,
    icosahedron_vertices,
    point_from_cylindrical,
    rotate,
    y_axis_rotations,
)
from .lattice import (
    DEFAULT_CUTOFF_SCALE,
    STEP_RATIO,
    Lattice,
    Site,
    Sublattice,
    gen_fc,
    gen_ic,
    gen_if,
    shells_enclosing,
)
from .minimize import (
    STATIONARY_GRAD_BOUND,
    RelaxOptions,
    RelaxResult,
    is_stationary,
    relax,
)
from .ops import (
    ITSELF_MIN_GAIN,
    GeometricType,
    IndexCluster,
    adj_count,
    classify,
    growth_candidates,
    off_count,
    on_count,
    peel_backward,
    peel_forward,
    peel_itself,
    removal_candidates,
)
from .potentials import (
    BASIN_ENERGY_BOUND,
    BASIN_HI,
    BASIN_LO,
    LJ_SCALARS,
    R_STAR,
    SERIES_K,
    Buckingham,
    DistanceClass,
    Kihara,
    LennardJones,
    LjScalarProperties,
    Morse,
    PairPotential,
    classed_energy,
    cluster_energy,
    cluster_gradient,
    distance_classes,
    normalized_gradient,
    pair_energy,
    pair_energy_d1,
    pair_energy_d2,
)
from .xyzio import read_xyz, write_lattice_xyz, write_xyz, write_xyz_extended

__version__ = "0.1.0"

__all__ = [
    "ALIGN_LOCATE_TOL",
    "AmbiguousSiteError",
    "BASIN_ENERGY_BOUND",
    "BASIN_HI",
    "BASIN_LO",
    "Buckingham",
    "Catalog",
    "CatalogEntry",
    "CatalogError",
    "CatalogIntegrityError",
    "CatalogSyntaxError",
    "Cluster",
    "CylindricalKey",
    "DEFAULT_CUTOFF_SCALE",
    "DegenerateGradientError",
    "DistanceClass",
    "DomainError",
    "FrontierExhaustedError",
    "GeometricType",
    "ITSELF_MIN_GAIN",
    "IndexCluster",
    "Kihara",
    "LJ_SCALARS",
    "Lattice",
    "LennardJones",
    "LjScalarProperties",
    "LookupOutcome",
    "MIN_SEPARATION",
    "Morse",
    "NumericBreakdownError",
    "OffLatticeError",
    "PairPotential",
    "Point3",
    "R_STAR",
    "RelaxOptions",
    "RelaxResult",
    "Rotation",
    "SERIES_K",
    "STATIONARY_GRAD_BOUND",
    "STEP_RATIO",
    "Site",
    "Sublattice",
    "SymmetryViolationError",
    "VERIFY_TOL",
    "XyzParseError",
    "ZeroEnergyError",
    "adj_count",
    "align_min_adj",
    "build_catalog",
    "canonical_order",
    "center_of_mass",
    "classed_energy",
    "classify",
    "cluster_energy",
    "cluster_gradient",
    "cylindrical_key",
    "distance",
    "distance_classes",
    "gen_fc",
    "gen_ic",
    "gen_if",
    "growth_candidates",
    "icosahedral_rotations",
    "icosahedron_edges",
    "icosahedron_faces",
    "icosahedron_vertices",
    "is_stationary",
    "load_reference_catalog",
    "lookup_and_relax",
    "normalized_gradient",
    "off_count",
    "on_count",
    "orient_for_y_axis",
    "pair_energy",
    "pair_energy_d1",
    "pair_energy_d2",
    "parse_catalog",
    "peel_backward",
    "peel_forward",
    "peel_itself",
    "point_from_cylindrical",
    "read_xyz",
    "reconstruct",
    "relax",
    "removal_candidates",
    "rotate",
    "serialize_catalog",
    "shells_enclosing",
    "write_lattice_xyz",
    "write_xyz",
    "write_xyz_extended",
]
