"""First time of contact, colliding pairs, and elastic / inelastic response."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import (
    DEFAULT_TOL,
    BasicShape,
    GeometryError,
    Shape,
    Surface,
    Tolerances,
    Vec3,
    contact_surface,
    leaves,
    mass,
    min_extent,
    vec3,
    vel,
)
from .geometry.polytope import entry_time, overlap_lines, positive_interval, separating_axes

INF = math.inf


class InterpenetrationError(GeometryError):
    """Two shapes overlap by more than the length tolerance."""


class TunnelingError(ValueError):
    """The movement time step is too long for the fastest relative motion."""


@dataclass(frozen=True)
class CollisionTuple:
    id_a: int
    id_b: int
    surface: Surface

    def __post_init__(self):
        if self.id_a == self.id_b:
            raise ValueError("a shape cannot collide with itself")
        if self.surface.is_empty:
            raise ValueError("collision surface is empty")

    def sort_key(self):
        return (min(self.id_a, self.id_b), max(self.id_a, self.id_b), self.surface.key())


@dataclass(frozen=True)
class Elastic:
    w_a: Vec3
    w_b: Vec3


@dataclass(frozen=True)
class Inelastic:
    v: Vec3


# --------------------------------------------------------------------- leaf pairs

def _lines(a: BasicShape, b: BasicShape):
    return overlap_lines(a.polytope, a.ref, a.velocity, b.polytope, b.ref, b.velocity)


def leaf_contact_time(a: BasicShape, b: BasicShape, horizon: float, tol: Tolerances = DEFAULT_TOL,
                      method: str = "bisect") -> float:
    """Earliest t in [0, horizon] at which ``a`` and ``b`` touch and then interpenetrate.

    ``method="bisect"`` bisects the interpenetration predicate between 0 and a
    witness instant of deep overlap; ``"sweep"`` solves the overlap lines
    directly.  Both return ``inf`` when the leaves never interpenetrate by the horizon.
    """
    A, B = _lines(a, b)
    eps = tol.eps_len
    if A.min() > eps:
        raise InterpenetrationError(f"leaves interpenetrate at the start (depth {A.min():.3g})")
    w = positive_interval(A, B, eps, 0.0, horizon)
    if w is None:
        return INF
    if method == "sweep":
        return entry_time(A, B)
    if method != "bisect":
        raise ValueError(f"unknown ftoc method {method!r}")
    if A.min() > 0.0:
        return 0.0
    lo, hi = 0.0, 0.5 * (w[0] + w[1])
    for _ in range(tol.max_bisect):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if float(np.min(A + B * mid)) > 0.0:
            hi = mid
        else:
            lo = mid
    return lo


def _swept_boxes(items: Sequence[tuple[int, BasicShape]], horizon: float, eps: float):
    out = []
    h = 0.0 if not math.isfinite(horizon) else horizon
    for sid, l in items:
        lo, hi = l.polytope.bounds
        r, v = np.asarray(l.ref), np.asarray(l.velocity)
        if math.isfinite(horizon):
            lo2, hi2 = lo + r + h * v, hi + r + h * v
            lo_ = np.minimum(lo + r, lo2) - eps
            hi_ = np.maximum(hi + r, hi2) + eps
        else:
            lo_ = np.where(v < 0, -INF, lo + r - eps)
            hi_ = np.where(v > 0, INF, hi + r + eps)
        out.append((sid, l, lo_, hi_))
    return out


def candidate_pairs(shapes: Mapping[int, Shape], horizon: float, eps: float):
    """Leaf pairs from different shapes whose swept bounding boxes overlap (sort and sweep on x)."""
    items = [(sid, l) for sid in sorted(shapes) for l in leaves(shapes[sid])]
    boxes = _swept_boxes(items, horizon, eps)
    boxes.sort(key=lambda b: (b[2][0], b[0]))
    active: list = []
    for box in boxes:
        sid, l, lo, hi = box
        active = [o for o in active if o[3][0] >= lo[0]]
        for o in active:
            if o[0] != sid and np.all(o[2] <= hi) and np.all(lo <= o[3]):
                i, j = (o[0], sid) if o[0] < sid else (sid, o[0])
                la, lb = (o[1], l) if o[0] < sid else (l, o[1])
                yield i, j, la, lb
        active.append(box)


def _as_mapping(shapes) -> Mapping[int, Shape]:
    if isinstance(shapes, Mapping):
        return shapes
    return dict(enumerate(shapes))


def ftoc(shapes, horizon: float, tol: Tolerances = DEFAULT_TOL, method: str = "bisect") -> float:
    """First time of contact among an indexed set of shapes within ``horizon`` (``inf`` if none).

    Pairs that touch but separate or slide do not trigger.  Raises
    `InterpenetrationError` if some pair already overlaps.
    """
    best = INF
    for _, _, la, lb in candidate_pairs(_as_mapping(shapes), horizon, tol.eps_len):
        t = leaf_contact_time(la, lb, min(horizon, best) if math.isfinite(best) else horizon, tol, method)
        if t < best:
            best = t
    return best


def _approaching(la: BasicShape, lb: BasicShape, tol: Tolerances) -> bool:
    A, B = _lines(la, lb)
    eps = tol.eps_len
    pen0 = float(A.min())
    if pen0 < -eps:
        return False
    if pen0 > eps:
        raise InterpenetrationError(f"leaves interpenetrate (depth {pen0:.3g})")
    if positive_interval(A, B, eps, 0.0, INF) is None:
        return False
    return entry_time(A, B) <= tol.eps_t


def colliding_pair(s1: Shape, s2: Shape, tol: Tolerances = DEFAULT_TOL) -> bool:
    return any(
        _approaching(la, lb, tol)
        for la in leaves(s1) for lb in leaves(s2)
    )


def colliding(shapes, tol: Tolerances = DEFAULT_TOL) -> list[CollisionTuple]:
    """Pairs touching now whose continued motion would interpenetrate, with their contact surface."""
    shapes = _as_mapping(shapes)
    hits: set[tuple[int, int]] = set()
    for i, j, la, lb in candidate_pairs(shapes, 0.0, tol.eps_len):
        if (i, j) not in hits and _approaching(la, lb, tol):
            hits.add((i, j))
    out = []
    for i, j in sorted(hits):
        X = contact_surface(shapes[i], shapes[j], tol)
        if X is not None:
            out.append(CollisionTuple(i, j, X))
    out.sort(key=CollisionTuple.sort_key)
    return out


def tunneling_violations(shapes, delta: float) -> list[tuple[int, int, float, float]]:
    """Pairs whose relative displacement over ``delta`` exceeds the smaller body's extent."""
    shapes = _as_mapping(shapes)
    ids = sorted(shapes)
    vs = {i: np.asarray(vel(shapes[i])) for i in ids}
    ext = {i: min_extent(shapes[i]) for i in ids}
    out = []
    for k, i in enumerate(ids):
        for j in ids[k + 1:]:
            disp = float(np.linalg.norm(vs[i] - vs[j])) * delta
            lim = min(ext[i], ext[j])
            if disp > lim * (1 + 1e-12):
                out.append((i, j, disp, lim))
    return out


# --------------------------------------------------------------------- response

def elastic_velocities(m1: float, v1, m2: float, v2, n) -> tuple[Vec3, Vec3]:
    """Perfectly elastic exchange along unit normal ``n`` (pointing from body 1 to body 2).

    Infinite masses are handled as limits; two infinite masses behave like equal masses.
    """
    n = np.asarray(n, dtype=float)
    nn = float(n @ n)
    if nn <= 0.0 or not math.isfinite(nn):
        raise GeometryError("degenerate contact normal")
    v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
    rel = float((v1 - v2) @ n) / nn
    if math.isinf(m1) and math.isinf(m2):
        im1 = im2 = 1.0
    else:
        im1 = 0.0 if math.isinf(m1) else 1.0 / m1
        im2 = 0.0 if math.isinf(m2) else 1.0 / m2
    lam = 2.0 * rel / (im1 + im2)
    return vec3(v1 - lam * im1 * n), vec3(v2 + lam * im2 * n)


def inelastic_velocity(m1: float, v1, m2: float, v2) -> Vec3:
    """Common velocity after a perfectly inelastic collision (momentum conserving)."""
    v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
    if math.isinf(m1) and math.isinf(m2):
        return vec3((v1 + v2) / 2.0)
    if math.isinf(m1):
        return vec3(v1)
    if math.isinf(m2):
        return vec3(v2)
    return vec3((m1 * v1 + m2 * v2) / (m1 + m2))


def contact_normal(la: BasicShape, lb: BasicShape, tol: Tolerances = DEFAULT_TOL):
    """Unit normal (from ``la`` towards ``lb``) of a touching, approaching leaf pair, else None.

    Faces of ``la`` are preferred, then faces of ``lb``, then edge-edge axes.
    """
    A, B = _lines(la, lb)
    eps = tol.eps_len
    ax = separating_axes(la.polytope, lb.polytope)
    k = len(ax.dirs)
    fallback = None
    for i in np.argsort(ax.source, kind="stable"):
        for j, sgn in ((i, 1.0), (i + k, -1.0)):
            if abs(A[j]) <= eps:
                # B[j] is the rate at which the overlap along this axis grows
                if B[j] > 0:
                    return sgn * ax.dirs[i]
                if fallback is None:
                    fallback = sgn * ax.dirs[i]
    return None if fallback is None else fallback


def elastic_response(s1: Shape, s2: Shape, X: Surface | None = None, tol: Tolerances = DEFAULT_TOL,
                     max_iter: int = 32) -> tuple[Vec3, Vec3]:
    """Post-collision velocities of two touching bodies.

    The impulse acts along the contact normal of an approaching leaf pair.  For
    compound bodies touching in several places, impulses are repeated until no
    leaf pair approaches; if that does not settle the pair falls back to the
    common momentum-conserving velocity.
    """
    m1, m2 = mass(s1), mass(s2)
    w1, w2 = np.asarray(vel(s1)), np.asarray(vel(s2))
    pairs = [(la, lb) for la in leaves(s1) for lb in leaves(s2)]
    for _ in range(max_iter):
        n = None
        for la, lb in pairs:
            a_ = BasicShape(la.polytope, la.mass, la.ref, w1)
            b_ = BasicShape(lb.polytope, lb.mass, lb.ref, w2)
            if _approaching(a_, b_, tol):
                n = contact_normal(a_, b_, tol)
                if n is not None and float((w1 - w2) @ n) > 0:
                    break
                n = None
        if n is None:
            return vec3(w1), vec3(w2)
        r1, r2 = elastic_velocities(m1, w1, m2, w2, n)
        w1, w2 = np.asarray(r1), np.asarray(r2)
    v = inelastic_velocity(m1, w1, m2, w2)
    return v, v


def inelastic_response(s1: Shape, s2: Shape) -> Vec3:
    return inelastic_velocity(mass(s1), vel(s1), mass(s2), vel(s2))
