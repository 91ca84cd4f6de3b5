import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapecalc.geometry import (
    EMPTY,
    BasicShape,
    ConvexPolytope,
    GeometryError,
    Patch,
    ShapeError,
    Surface,
    Tolerances,
    canonical_shape,
    compose,
    contact_surface,
    covered_by,
    interpenetrates,
    intersect,
    is_well_formed_shape,
    leaves,
    local_to_global,
    mass,
    on_boundary_point,
    ref_point,
    same_points,
    shape_accessors,
    shapes_congruent,
    surface_on_boundary,
    translate_over_time,
    update_velocity,
    vel,
    velocities,
)

UNIT = ConvexPolytope.box((1, 1, 1))


def cube(pos, v=(0, 0, 0), m=1.0):
    return BasicShape(UNIT, m, tuple(float(c) for c in pos), tuple(float(c) for c in v))


def square_x(x, lo=0.0, hi=1.0):
    return Surface.polygon([(x, lo, lo), (x, hi, lo), (x, hi, hi), (x, lo, hi)])


# ---------------------------------------------------------------- polytopes

def test_box_faces_and_volume():
    p = ConvexPolytope.box((1, 2, 3))
    assert len(p.normals) == 6 and len(p.face_patches) == 6
    assert p.volume == pytest.approx(6.0)
    assert p.min_width == pytest.approx(1.0)
    assert all(f.kind == "polygon" and len(f.vertices) == 4 for f in p.face_patches)


def test_polytope_rejects_degenerate_and_non_extreme_points():
    with pytest.raises(GeometryError):
        ConvexPolytope(((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)))
    with pytest.raises(GeometryError):
        ConvexPolytope(tuple(map(tuple, UNIT.array)) + ((0.0, 0.0, 0.0),))
    with pytest.raises(GeometryError):
        ConvexPolytope.box((1, 0, 1))


def test_polytope_equality_is_by_vertex_set():
    a = ConvexPolytope.box((1, 1, 1))
    b = ConvexPolytope(tuple(reversed(a.vertices)))
    assert a == b and hash(a) == hash(b)


def test_shape_validation():
    with pytest.raises(GeometryError):
        BasicShape(UNIT, 0.0, (0, 0, 0), (0, 0, 0))
    with pytest.raises(GeometryError):
        BasicShape(UNIT, 1.0, (0, 0, 0), (math.nan, 0, 0))
    assert mass(BasicShape(UNIT, math.inf, (0, 0, 0), (0, 0, 0))) == math.inf


# ---------------------------------------------------------------- accessors

def test_compound_mass_and_reference_point():
    s = compose(cube((0.5, 0.5, 0.5)), None, cube((1.5, 0.5, 0.5)))
    assert mass(s) == 2.0
    assert ref_point(s) == pytest.approx((1.0, 0.5, 0.5))
    assert velocities(s) == {(0.0, 0.0, 0.0)}


def test_basic_accessors_return_own_fields():
    c = cube((1, 2, 3), (4, 5, 6), 7.0)
    info = shape_accessors(c)
    assert info.mass == 7.0 and tuple(info.ref) == (1, 2, 3) and info.velocities == {(4.0, 5.0, 6.0)}


def test_infinite_mass_dominates_reference_point():
    s = compose(BasicShape(UNIT, math.inf, (0, 0, 0), (0, 0, 0)), None, cube((1, 0, 0)))
    assert ref_point(s) == (0.0, 0.0, 0.0)


def test_shared_face_is_not_boundary():
    s = compose(cube((0.5, 0.5, 0.5)), None, cube((1.5, 0.5, 0.5)))
    rng = np.random.default_rng(0)
    # oracle: dense samples of the shared face interior vs the outer faces
    for y, z in rng.uniform(0.01, 0.99, (50, 2)):
        assert not on_boundary_point(s, (1.0, y, z))
        assert on_boundary_point(s, (0.0, y, z))
        assert on_boundary_point(s, (2.0, y, z))
        assert on_boundary_point(s, (0.5 + y, 1.0, z))
    assert on_boundary_point(s, (1.0, 0.0, 0.5))          # rim of the shared face is still outside
    assert not surface_on_boundary(s, square_x(1.0, 0.2, 0.8))
    assert surface_on_boundary(s, square_x(2.0))


# ---------------------------------------------------------------- motion

def test_translate_over_time():
    c = cube((0, 0, 0), (1, 0, 0))
    moved = translate_over_time(c, 2.0)
    assert moved.ref == (2.0, 0.0, 0.0) and moved.velocity == (1.0, 0.0, 0.0)
    assert translate_over_time(c, 0.0) == c


def test_update_velocity_compound():
    s = compose(cube((0.5, 0.5, 0.5)), None, cube((1.5, 0.5, 0.5)))
    w = update_velocity(s, (0, 1, 0))
    assert all(l.velocity == (0.0, 1.0, 0.0) for l in leaves(w))
    assert update_velocity(cube((0, 0, 0), (1, 0, 0)), (0, 0, 0)).velocity == (0.0, 0.0, 0.0)


vecs = st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3)


@settings(max_examples=40, deadline=None)
@given(v=vecs, w=vecs, t=st.floats(0, 3))
def test_motion_laws(v, w, t):
    s = compose(cube((0.5, 0.5, 0.5), v), None, cube((1.5, 0.5, 0.5), v))
    # ref(S + t) = ref(S) + t vel(S)
    moved = translate_over_time(s, t)
    assert np.allclose(ref_point(moved), np.add(ref_point(s), t * np.asarray(vel(s))), atol=1e-9)
    # updating the velocity commutes with translation (same point set)
    a = update_velocity(translate_over_time(s, t), w)
    b = translate_over_time(update_velocity(s, v), t)
    b = update_velocity(b, w)
    assert [l.ref for l in leaves(a)] == pytest.approx([l.ref for l in leaves(b)])
    assert velocities(a) == {tuple(float(x) for x in w)}


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        translate_over_time(cube((0, 0, 0)), -1.0)


# ---------------------------------------------------------------- contact

def test_face_contact_is_a_square():
    X = contact_surface(cube((0.5, 0.5, 0.5)), cube((1.5, 0.5, 0.5)))
    assert X.kind == "polygon"
    (p,) = X.patches
    assert sorted(p.vertices) == sorted([(1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 1.0, 1.0), (1.0, 0.0, 1.0)])


def test_corner_and_edge_contacts():
    X = contact_surface(cube((0.5, 0.5, 0.5)), cube((1.5, 1.5, 1.5)))
    assert X.kind == "point" and same_points(X, Surface.point((1, 1, 1)))
    E = contact_surface(cube((0.5, 0.5, 0.5)), cube((1.5, 1.5, 0.5)))
    assert E.kind == "segment" and same_points(E, Surface.segment((1, 1, 0), (1, 1, 1)))


def test_gap_means_no_contact():
    assert contact_surface(cube((0, 0, 0)), cube((1 + 1e-6, 0, 0))) is None
    assert contact_surface(cube((0, 0, 0)), cube((1 + 1e-10, 0, 0))) is not None   # within eps_len


def test_interpenetrates():
    assert not interpenetrates(cube((0, 0, 0)), cube((2, 0, 0)))
    assert interpenetrates(cube((0, 0, 0)), cube((0, 0, 0)))
    assert not interpenetrates(cube((0, 0, 0)), cube((1, 0, 0)))
    assert interpenetrates(cube((0, 0, 0)), cube((0.9, 0, 0)))


# ---------------------------------------------------------------- well-formedness

def test_compose_well_formed_and_violations():
    a, b = cube((0.5, 0.5, 0.5)), cube((1.5, 0.5, 0.5))
    s = compose(a, square_x(1.0), b)
    assert is_well_formed_shape(s).ok
    with pytest.raises(ShapeError) as e:
        compose(a, EMPTY, b)
    assert e.value.report.violations[0].condition == 1
    with pytest.raises(ShapeError) as e:
        compose(a, None, cube((1.2, 0.5, 0.5)))
    assert e.value.report.violations[0].condition == 2
    with pytest.raises(ShapeError) as e:
        compose(a, square_x(1.0), cube((1.5, 0.5, 0.5), (1, 0, 0)))
    assert {v.condition for v in e.value.report.violations} == {3}
    with pytest.raises(ShapeError):                      # wrong contact surface
        compose(a, square_x(1.0, 0.0, 0.5), b)


def test_congruence():
    a, b, c = cube((0.5, 0.5, 0.5)), cube((1.5, 0.5, 0.5)), cube((2.5, 0.5, 0.5))
    assert shapes_congruent(compose(a, None, b), compose(b, None, a))
    left = compose(compose(a, None, b), square_x(2.0), c)
    right = compose(a, square_x(1.0), compose(b, None, c))
    assert canonical_shape(left).equivalent(canonical_shape(right))
    assert not shapes_congruent(a, cube((0.5, 0.5, 0.5), m=2.0))
    assert not shapes_congruent(a, b)


# ---------------------------------------------------------------- surfaces

def test_local_to_global():
    assert local_to_global(Surface.point((0, 0, 0)), (1, 2, 3)) == Surface.point((1, 2, 3))
    sq = Surface.polygon([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)])
    g = local_to_global(sq, (0, 0, 5))
    assert all(v[2] == 5.0 for v in g.vertices)
    assert local_to_global(g, (0, 0, -5)) == sq


def test_patch_canonical_form():
    a = Patch.make([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)])
    b = Patch.make([(1, 1, 0), (0, 1, 0), (0, 0, 0), (1, 0, 0), (0.5, 0, 0)])
    assert a == b and a.kind == "polygon" and a.measure() == pytest.approx(1.0)
    assert Patch.make([(0, 0, 0), (0, 0, 0)]).kind == "point"
    assert Patch.make([(0, 0, 0), (1, 1, 1), (2, 2, 2)]).kind == "segment"
    with pytest.raises(GeometryError):
        Patch.make([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])


def test_surface_intersections():
    big = square_x(1.0)
    small = square_x(1.0, 0.25, 0.5)
    assert same_points(intersect(big, small), small)
    assert covered_by(small, big) and not covered_by(big, small)
    assert intersect(big, square_x(2.0)).is_empty
    seg = Surface.segment((1, -1, 0.5), (1, 2, 0.5))
    assert same_points(intersect(big, seg), Surface.segment((1, 0, 0.5), (1, 1, 0.5)))


def test_tolerances_from_env():
    t = Tolerances.from_env({"SHAPECALC_EPS_LEN": "1e-7", "SHAPECALC_MAX_BISECT": "10"})
    assert t.eps_len == 1e-7 and t.max_bisect == 10 and t.eps_t == 1e-6
