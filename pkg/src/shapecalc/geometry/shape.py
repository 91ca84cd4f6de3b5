"""Basic and compound shapes, motion, contacts and well-formedness."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Union

import numpy as np

from .common import DEFAULT_TOL, GeometryError, Tolerances, Vec3, vec3
from .polytope import ConvexPolytope, overlap_lines, penetration, separating_axes
from .surface import EMPTY, POLYGON, Patch, Surface, intersect_patches, point_patch_distance, same_points, simplify


class ShapeError(GeometryError):
    """An ill-formed composition; ``report`` lists the violations."""

    def __init__(self, report: "WellFormedReport"):
        super().__init__("; ".join(str(v) for v in report.violations))
        self.report = report


@dataclass(frozen=True)
class BasicShape:
    """A convex polytope with mass, global reference point and velocity.

    ``polytope`` is expressed relative to ``ref``; the reference point must lie
    inside the polytope.  ``mass`` may be ``math.inf`` for immovable walls.
    """

    polytope: ConvexPolytope
    mass: float
    ref: Vec3
    velocity: Vec3 = Vec3(0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "ref", vec3(self.ref))
        object.__setattr__(self, "velocity", vec3(self.velocity))
        m = float(self.mass)
        if not (m > 0) or math.isnan(m):
            raise GeometryError(f"mass must be positive, got {self.mass!r}")
        object.__setattr__(self, "mass", m)
        if not self.polytope.contains((0.0, 0.0, 0.0), 1e-9):
            raise GeometryError("reference point lies outside the polytope")

    @property
    def global_vertices(self) -> np.ndarray:
        return self.polytope.array + np.asarray(self.ref)

    def key(self):
        return (self.ref, self.polytope.vertices, self.mass, self.velocity)


@dataclass(frozen=True)
class Compose:
    """Two shapes glued on a common contact surface (global coordinates)."""

    left: "Shape"
    contact: Surface
    right: "Shape"


Shape = Union[BasicShape, Compose]


# ------------------------------------------------------------------ accessors

def leaves(s: Shape) -> tuple[BasicShape, ...]:
    if isinstance(s, BasicShape):
        return (s,)
    return leaves(s.left) + leaves(s.right)


def mass(s: Shape) -> float:
    return float(sum(l.mass for l in leaves(s)))


def ref_point(s: Shape) -> Vec3:
    """Mass-weighted reference point; infinite-mass leaves are the sole contributors."""
    ls = leaves(s)
    if len(ls) == 1:
        return ls[0].ref
    inf = [l for l in ls if math.isinf(l.mass)]
    if inf:
        return vec3(np.mean([l.ref for l in inf], axis=0))
    m = np.array([l.mass for l in ls])
    return vec3(m @ np.array([l.ref for l in ls]) / m.sum())


def velocities(s: Shape) -> frozenset[Vec3]:
    return frozenset(l.velocity for l in leaves(s))


def vel(s: Shape) -> Vec3:
    """The (common) velocity of a shape; the first leaf's for ill-formed input."""
    return leaves(s)[0].velocity


def min_extent(s: Shape) -> float:
    return min(l.polytope.min_width for l in leaves(s))


def bounds(s: Shape) -> tuple[np.ndarray, np.ndarray]:
    lo = np.min([l.polytope.bounds[0] + l.ref for l in leaves(s)], axis=0)
    hi = np.max([l.polytope.bounds[1] + l.ref for l in leaves(s)], axis=0)
    return lo, hi


def contains_point(s: Shape, x, eps: float = DEFAULT_TOL.eps_len) -> bool:
    x = np.asarray(x, dtype=float)
    return any(l.polytope.contains(x - np.asarray(l.ref), eps) for l in leaves(s))


def _probe_dirs(normals: list[np.ndarray]) -> list[np.ndarray]:
    out = list(normals)
    for k in (2, 3):
        for combo in itertools.combinations(normals, k):
            v = np.sum(combo, axis=0)
            n = np.linalg.norm(v)
            if n > 1e-9:
                out.append(v / n)
    return out


def on_boundary_point(s: Shape, x, eps: float = DEFAULT_TOL.eps_len) -> bool:
    """Is ``x`` a boundary point of the union of the leaves (within ``eps``)?"""
    x = np.asarray(x, dtype=float)
    ls = leaves(s)
    active = []
    inside = False
    for l in ls:
        loc = x - np.asarray(l.ref)
        g = l.polytope.normals @ loc - l.polytope.offsets
        if np.all(g <= eps):
            inside = True
            act = l.polytope.normals[g >= -eps]
            active.extend(act)
    if not inside:
        return False
    if not active:
        return False
    if len(ls) == 1:
        return True
    r = max(1e3 * eps, 1e-7)
    for d in _probe_dirs(active):
        p = x + r * d
        if not any(l.polytope.contains(p - np.asarray(l.ref), eps) for l in ls):
            return True
    return False


@lru_cache(maxsize=65536)
def _patch_on_basic(poly: ConvexPolytope, local: Patch, eps: float) -> bool:
    a = local.array
    g = a @ poly.normals.T - poly.offsets
    if np.any(g > eps):
        return False
    return bool(np.any(np.all(np.abs(g) <= eps, axis=0)))


def _internal_contacts(s: Shape, eps: float) -> tuple[Patch, ...]:
    ls = leaves(s)
    if len(ls) == 1:
        return ()
    r0 = np.asarray(ls[0].ref)
    key = tuple((l.polytope, tuple(np.asarray(l.ref) - r0)) for l in ls)
    local = _internal_contacts_local(key, eps)
    return tuple(p.translated(r0) for p in local)


@lru_cache(maxsize=4096)
def _internal_contacts_local(key, eps: float) -> tuple[Patch, ...]:
    out = []
    for (pa, ra), (pb, rb) in itertools.combinations(key, 2):
        surf = _leaf_contact(pa, ra, pb, rb, eps)
        out.extend(p for p in surf.patches if p.kind == POLYGON)
    return tuple(out)


def _in_relative_interior(x, poly: Patch, eps: float) -> bool:
    o, e1, e2, n = poly.plane
    d = np.asarray(x) - o
    if abs(float(d @ n)) > eps:
        return False
    q = np.array([d @ e1, d @ e2])
    ring = poly.coords2d
    k = len(ring)
    for i in range(k):
        a, b = ring[i], ring[(i + 1) % k]
        e = b - a
        cr = e[0] * (q[1] - a[1]) - e[1] * (q[0] - a[0])
        if cr / np.hypot(*e) <= 10 * eps:
            return False
    return True


def surface_on_boundary(s: Shape, X: Surface, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Is every point of ``X`` (global) on the boundary of ``s`` within tolerance?"""
    eps = tol.eps_len
    if X.is_empty:
        return False
    ls = leaves(s)
    if len(ls) == 1:
        l = ls[0]
        return all(_patch_on_basic(l.polytope, p.translated(-np.asarray(l.ref)), eps) for p in X.patches)
    contacts = _internal_contacts(s, eps)
    for p in X.patches:
        if not all(on_boundary_point(s, x, eps) for x in p.samples()):
            return False
        for c in contacts:
            r = intersect_patches(p, c, eps)
            if r is not None and _in_relative_interior(r.centroid, c, eps):
                return False
    return True


class ShapeInfo(NamedTuple):
    points: Callable[[object], bool]
    mass: float
    ref: Vec3
    velocities: frozenset
    boundary: Callable[[object], bool]


def shape_accessors(s: Shape, tol: Tolerances = DEFAULT_TOL) -> ShapeInfo:
    eps = tol.eps_len
    return ShapeInfo(
        points=lambda x: contains_point(s, x, eps),
        mass=mass(s),
        ref=ref_point(s),
        velocities=velocities(s),
        boundary=lambda x: on_boundary_point(s, x, eps),
    )


# ------------------------------------------------------------------ motion

def translate_over_time(s: Shape, t: float) -> Shape:
    if t < 0:
        raise GeometryError(f"cannot move a shape by negative time {t}")
    if t == 0:
        return s
    if isinstance(s, BasicShape):
        return BasicShape(s.polytope, s.mass, np.asarray(s.ref) + t * np.asarray(s.velocity), s.velocity)
    shift = t * np.asarray(vel(s))
    return Compose(translate_over_time(s.left, t), s.contact.translated(shift), translate_over_time(s.right, t))


def translate(s: Shape, d) -> Shape:
    """Rigid displacement by a vector (used by tests and placement code)."""
    d = np.asarray(d, dtype=float)
    if isinstance(s, BasicShape):
        return BasicShape(s.polytope, s.mass, np.asarray(s.ref) + d, s.velocity)
    return Compose(translate(s.left, d), s.contact.translated(d), translate(s.right, d))


def update_velocity(s: Shape, w) -> Shape:
    w = vec3(w)
    if isinstance(s, BasicShape):
        return s if s.velocity == w else BasicShape(s.polytope, s.mass, s.ref, w)
    return Compose(update_velocity(s.left, w), s.contact, update_velocity(s.right, w))


def local_to_global(X: Surface, p) -> Surface:
    return X.translated(np.asarray(p, dtype=float))


# ------------------------------------------------------------------ contacts

def _leaf_contact(pa: ConvexPolytope, ra, pb: ConvexPolytope, rb, eps: float) -> Surface:
    """Contact set of two touching leaves (empty when apart by more than ``eps``)."""
    a, _ = overlap_lines(pa, ra, (0, 0, 0), pb, rb, (0, 0, 0))
    pen = float(a.min())
    if pen < -eps:
        return EMPTY
    if pen > eps:
        raise GeometryError(f"shapes interpenetrate (depth {pen:.3g})")
    ax = separating_axes(pa, pb)
    k = len(ax.dirs)
    # prefer faces of A, then faces of B, then edge-edge axes
    best = None
    for i in np.argsort(ax.source, kind="stable"):
        for j, sgn in ((i, 1.0), (i + k, -1.0)):
            if abs(a[j]) <= eps:
                best = (ax.dirs[i] * sgn)
                break
        if best is not None:
            break
    if best is None:
        return EMPTY
    d = best
    ga = pa.array + np.asarray(ra)
    gb = pb.array + np.asarray(rb)
    pa_ = ga @ d
    pb_ = gb @ d
    fa = ga[pa_ >= pa_.max() - eps]
    fb = gb[pb_ <= pb_.min() + eps]
    patch = intersect_patches(Patch.make(fa, eps), Patch.make(fb, eps), eps)
    return EMPTY if patch is None else Surface((patch,))


def leaf_contact(a: BasicShape, b: BasicShape, tol: Tolerances = DEFAULT_TOL) -> Surface:
    return _leaf_contact(a.polytope, a.ref, b.polytope, b.ref, tol.eps_len)


def leaf_penetration(a: BasicShape, b: BasicShape) -> float:
    la, _ = overlap_lines(a.polytope, a.ref, (0, 0, 0), b.polytope, b.ref, (0, 0, 0))
    return penetration(la, np.zeros_like(la))


def _aabb_near(a: BasicShape, b: BasicShape, eps: float) -> bool:
    lo_a, hi_a = a.polytope.bounds
    lo_b, hi_b = b.polytope.bounds
    ra, rb = np.asarray(a.ref), np.asarray(b.ref)
    return bool(np.all(lo_a + ra <= hi_b + rb + eps) and np.all(lo_b + rb <= hi_a + ra + eps))


def interpenetrates(s1: Shape, s2: Shape, tol: Tolerances = DEFAULT_TOL) -> bool:
    eps = tol.eps_len
    for a in leaves(s1):
        for b in leaves(s2):
            if _aabb_near(a, b, eps) and leaf_penetration(a, b) > eps:
                return True
    return False


def contact_surface(s1: Shape, s2: Shape, tol: Tolerances = DEFAULT_TOL) -> Surface | None:
    """Global contact set of two non-interpenetrating shapes, or None when apart."""
    eps = tol.eps_len
    pats = []
    for a in leaves(s1):
        for b in leaves(s2):
            if _aabb_near(a, b, eps):
                pats.extend(leaf_contact(a, b, tol).patches)
    if not pats:
        return None
    return simplify(Surface(tuple(pats)), eps)


# ------------------------------------------------------------------ well-formedness

@dataclass(frozen=True)
class Violation:
    path: str
    condition: int
    message: str

    def __str__(self):
        return f"{self.path or 'root'}: condition {self.condition}: {self.message}"


@dataclass(frozen=True)
class WellFormedReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _velocity_singleton(s: Shape, atol: float = 1e-12) -> bool:
    vs = np.array([l.velocity for l in leaves(s)])
    return bool(np.all(np.abs(vs - vs[0]) <= atol * np.maximum(1.0, np.abs(vs[0]))))


def _node_violations(node: Compose, tol: Tolerances, path: str) -> list[Violation]:
    out = []
    if node.contact.is_empty:
        out.append(Violation(path, 1, "empty contact surface"))
    if interpenetrates(node.left, node.right, tol):
        out.append(Violation(path, 2, "components interpenetrate"))
    else:
        real = contact_surface(node.left, node.right, tol)
        if real is None:
            out.append(Violation(path, 2, "components do not touch"))
        elif not node.contact.is_empty and not same_points(node.contact, real, 10 * tol.eps_len):
            out.append(Violation(path, 2, "contact surface differs from the common boundary"))
    if not _velocity_singleton(node):
        out.append(Violation(path, 3, "components have different velocities"))
    return out


def is_well_formed_shape(s: Shape, tol: Tolerances = DEFAULT_TOL) -> WellFormedReport:
    out: list[Violation] = []

    def walk(n, path):
        if isinstance(n, BasicShape):
            return
        walk(n.left, path + "L")
        walk(n.right, path + "R")
        out.extend(_node_violations(n, tol, path))

    walk(s, "")
    return WellFormedReport(tuple(out))


def compose(s1: Shape, X: Surface | None, s2: Shape, tol: Tolerances = DEFAULT_TOL, check: bool = True) -> Compose:
    """Glue two shapes on ``X``; pass ``X=None`` to use their computed contact surface."""
    inferred = X is None
    if inferred:
        X = contact_surface(s1, s2, tol) if not interpenetrates(s1, s2, tol) else None
        X = X if X is not None else EMPTY
    node = Compose(s1, X, s2)
    if check:
        vs = _node_violations(node, tol, "")
        if inferred:
            # an inferred contact is empty only because of a condition-2 failure
            vs = [v for v in vs if v.condition != 1]
        rep = WellFormedReport(tuple(vs))
        if not rep.ok:
            raise ShapeError(rep)
    return node


# ------------------------------------------------------------------ congruence

@dataclass(frozen=True)
class CanonicalShape:
    """Order-free form of a shape: its leaves as a sorted multiset plus all contact points."""

    leaves: tuple[BasicShape, ...]
    contacts: Surface = field(compare=False)

    def equivalent(self, other: "CanonicalShape", eps: float = DEFAULT_TOL.eps_len) -> bool:
        if len(self.leaves) != len(other.leaves):
            return False
        for a, b in zip(self.leaves, other.leaves):
            if a.polytope != b.polytope or a.mass != b.mass:
                return False
            if not np.allclose(a.ref, b.ref, rtol=0, atol=eps) or not np.allclose(a.velocity, b.velocity, rtol=0, atol=eps):
                return False
        return same_points(self.contacts, other.contacts, 10 * eps)


def _contacts(s: Shape) -> list[Patch]:
    if isinstance(s, BasicShape):
        return []
    return _contacts(s.left) + list(s.contact.patches) + _contacts(s.right)


def canonical_shape(s: Shape, tol: Tolerances = DEFAULT_TOL) -> CanonicalShape:
    ls = tuple(sorted(leaves(s), key=lambda l: l.key()))
    return CanonicalShape(ls, simplify(Surface(tuple(_contacts(s))), tol.eps_len))


def shapes_congruent(s1: Shape, s2: Shape, tol: Tolerances = DEFAULT_TOL) -> bool:
    return canonical_shape(s1, tol).equivalent(canonical_shape(s2, tol), tol.eps_len)
