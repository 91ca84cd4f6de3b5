"""Convex-polytope shapes, surfaces and contact geometry."""
from .common import DEFAULT_TOL, ZERO, GeometryError, Tolerances, Vec3, vec3
from .polytope import ConvexPolytope, entry_time, overlap_lines, penetration, positive_interval, separating_axes
from .shape import (
    BasicShape,
    CanonicalShape,
    Compose,
    Shape,
    ShapeError,
    ShapeInfo,
    Violation,
    WellFormedReport,
    bounds,
    canonical_shape,
    compose,
    contact_surface,
    contains_point,
    interpenetrates,
    is_well_formed_shape,
    leaf_contact,
    leaf_penetration,
    leaves,
    local_to_global,
    mass,
    min_extent,
    on_boundary_point,
    ref_point,
    shape_accessors,
    shapes_congruent,
    surface_on_boundary,
    translate,
    translate_over_time,
    update_velocity,
    vel,
    velocities,
)
from .surface import EMPTY, Patch, Surface, covered_by, intersect, intersect_patches, intersects, same_points, simplify, union
