"""Surfaces: finite unions of convex planar patches (points, segments, polygons).

A single convex feature of a polytope (vertex, edge, face, or a convex piece of a
face) is a `Patch`.  Binding sites and contact sets are `Surface` objects, i.e.
unions of patches, because a site such as "the whole boundary of a cube" or the
contact between two compound shapes is not convex.

All set operations take an absolute tolerance ``eps``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .common import GeometryError, Vec3, vec3

POINT, SEGMENT, POLYGON = "point", "segment", "polygon"


# --------------------------------------------------------------------------- 2D helpers

def _cross2(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull2d(pts: np.ndarray, eps: float) -> list[int]:
    """Indices of the convex hull of ``pts`` (k, 2), counter-clockwise, collinear points dropped."""
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))
    if len(order) <= 2:
        return order

    def half(seq):
        out: list[int] = []
        for i in seq:
            while len(out) >= 2:
                o, a = pts[out[-2]], pts[out[-1]]
                ob = np.hypot(*(pts[i] - o))
                if _cross2(o, a, pts[i]) <= eps * max(ob, 1.0):
                    out.pop()
                else:
                    break
            out.append(i)
        return out

    lower = half(order)
    upper = half(reversed(order))
    hull = lower[:-1] + upper[:-1]
    return hull if hull else order[:1]


def _seg_dist2d(p, a, b) -> float:
    ab = b - a
    den = float(ab @ ab)
    s = 0.0 if den == 0.0 else min(max(float((p - a) @ ab) / den, 0.0), 1.0)
    return float(np.hypot(*(a + s * ab - p)))


def _dist2d(p: np.ndarray, poly: np.ndarray) -> float:
    """Distance from ``p`` to a convex 2D set given by CCW vertices (1, 2 or more)."""
    k = len(poly)
    if k == 1:
        return float(np.hypot(*(poly[0] - p)))
    if k == 2:
        return _seg_dist2d(p, poly[0], poly[1])
    inside = True
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        if _cross2(a, b, p) < 0.0:
            inside = False
            break
    if inside:
        return 0.0
    return min(_seg_dist2d(p, poly[i], poly[(i + 1) % k]) for i in range(k))


def _edges2d(poly: np.ndarray):
    k = len(poly)
    if k == 1:
        return []
    if k == 2:
        return [(poly[0], poly[1])]
    return [(poly[i], poly[(i + 1) % k]) for i in range(k)]


def _seg_seg2d(a0, a1, b0, b1, eps):
    da, db = a1 - a0, b1 - b0
    den = da[0] * db[1] - da[1] * db[0]
    la, lb = np.hypot(*da), np.hypot(*db)
    if abs(den) <= 1e-12 * max(la * lb, 1e-300):
        return None
    w = b0 - a0
    s = (w[0] * db[1] - w[1] * db[0]) / den
    u = (w[0] * da[1] - w[1] * da[0]) / den
    ts, tu = eps / max(la, 1e-300), eps / max(lb, 1e-300)
    if -ts <= s <= 1 + ts and -tu <= u <= 1 + tu:
        return a0 + min(max(s, 0.0), 1.0) * da
    return None


def _convex_intersection_2d(P: np.ndarray, Q: np.ndarray, eps: float, P3=None, Q3=None, lift=None):
    """Candidate points spanning P ∩ Q for convex 2D sets, or None when disjoint.

    When 3D counterparts ``P3``/``Q3`` and a ``lift`` map are given, the result is
    3D and input vertices keep their exact coordinates.
    """
    cands = [(P3[i] if P3 is not None else p) for i, p in enumerate(P) if _dist2d(p, Q) <= eps]
    cands += [(Q3[i] if Q3 is not None else q) for i, q in enumerate(Q) if _dist2d(q, P) <= eps]
    for a0, a1 in _edges2d(P):
        for b0, b1 in _edges2d(Q):
            x = _seg_seg2d(a0, a1, b0, b1, eps)
            if x is not None:
                cands.append(lift(x) if lift is not None else x)
    if not cands:
        return None
    return np.array(cands, dtype=float)


# --------------------------------------------------------------------------- patch

def _pca_frame(pts: np.ndarray):
    origin = pts.mean(axis=0)
    centred = pts - origin
    if len(pts) == 1:
        return origin, np.eye(3), np.zeros((1, 3))
    _, _, vt = np.linalg.svd(centred, full_matrices=True)
    return origin, vt, centred @ vt.T


def _dedupe_idx(pts: np.ndarray, eps: float) -> list[int]:
    keep: list[int] = []
    for i, p in enumerate(pts):
        if all(np.linalg.norm(p - pts[j]) > eps for j in keep):
            keep.append(i)
    return keep


def _dedupe(pts: np.ndarray, eps: float) -> np.ndarray:
    return pts[_dedupe_idx(pts, eps)]


@dataclass(frozen=True)
class Patch:
    """A convex planar piece: one point, one segment, or a convex polygon.

    Polygon vertices are stored in cyclic order.  Use `Patch.make` to build a
    canonical patch from an unordered point cloud.
    """

    vertices: tuple[Vec3, ...]

    def __post_init__(self):
        verts = tuple(vec3(v) for v in self.vertices)
        if not verts:
            raise GeometryError("a patch needs at least one vertex")
        object.__setattr__(self, "vertices", verts)

    def __hash__(self):
        return hash(self.vertices)

    @classmethod
    def make(cls, points, eps: float = 1e-9) -> "Patch":
        pts = _dedupe(np.atleast_2d(np.asarray(points, dtype=float)), eps)
        if len(pts) == 1:
            return cls((tuple(pts[0]),))
        origin, vt, coords = _pca_frame(pts)
        spread = np.abs(coords).max(axis=0)
        if spread[0] <= eps:
            return cls((tuple(origin),))
        if spread[2] > eps:
            raise GeometryError("patch points are not coplanar")
        if spread[1] <= eps:
            lo, hi = int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))
            a, b = sorted([tuple(pts[lo]), tuple(pts[hi])])
            return cls((a, b))
        idx = _hull2d(coords[:, :2], eps)
        if len(idx) < 3:
            lo, hi = int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))
            a, b = sorted([tuple(pts[lo]), tuple(pts[hi])])
            return cls((a, b))
        ring = [tuple(pts[i]) for i in idx]
        start = ring.index(min(ring))
        ring = ring[start:] + ring[:start]
        # orientation convention: Newell normal points to the lexicographically positive side
        n = _newell(np.array(ring))
        nz = next((c for c in n if abs(c) > 1e-12), 1.0)
        if nz < 0:
            ring = [ring[0]] + ring[1:][::-1]
        return cls(tuple(ring))

    @property
    def kind(self) -> str:
        return (POINT, SEGMENT)[len(self.vertices) - 1] if len(self.vertices) < 3 else POLYGON

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.array.mean(axis=0)

    @cached_property
    def plane(self):
        """(origin, e1, e2, normal) for polygons; normal is unit length."""
        if self.kind != POLYGON:
            raise GeometryError("only polygon patches have a plane")
        n = _newell(self.array)
        n = n / np.linalg.norm(n)
        o = self.centroid
        e1 = self.array[0] - o
        e1 = e1 - (e1 @ n) * n
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return o, e1, e2, n

    @cached_property
    def coords2d(self) -> np.ndarray:
        o, e1, e2, _ = self.plane
        d = self.array - o
        return np.stack([d @ e1, d @ e2], axis=1)

    def translated(self, d) -> "Patch":
        d = np.asarray(d, dtype=float)
        return Patch(tuple(tuple(v) for v in self.array + d))

    def samples(self) -> np.ndarray:
        """Vertices, edge midpoints and centroid: a cheap witness set for containment tests."""
        a = self.array
        if len(a) == 1:
            return a
        mids = (a + np.roll(a, -1, axis=0)) / 2.0
        return np.vstack([a, mids, a.mean(axis=0, keepdims=True)])

    def measure(self) -> float:
        """Length of a segment, area of a polygon, 0 for a point."""
        if self.kind == POINT:
            return 0.0
        if self.kind == SEGMENT:
            return float(np.linalg.norm(self.array[1] - self.array[0]))
        return 0.5 * float(np.linalg.norm(_newell(self.array)))


def _newell(ring: np.ndarray) -> np.ndarray:
    nxt = np.roll(ring, -1, axis=0)
    return np.array([
        np.sum((ring[:, 1] - nxt[:, 1]) * (ring[:, 2] + nxt[:, 2])),
        np.sum((ring[:, 2] - nxt[:, 2]) * (ring[:, 0] + nxt[:, 0])),
        np.sum((ring[:, 0] - nxt[:, 0]) * (ring[:, 1] + nxt[:, 1])),
    ])


def point_patch_distance(x, patch: Patch) -> float:
    x = np.asarray(x, dtype=float)
    a = patch.array
    if patch.kind == POINT:
        return float(np.linalg.norm(x - a[0]))
    if patch.kind == SEGMENT:
        ab = a[1] - a[0]
        s = min(max(float((x - a[0]) @ ab) / float(ab @ ab), 0.0), 1.0)
        return float(np.linalg.norm(a[0] + s * ab - x))
    o, e1, e2, n = patch.plane
    d = x - o
    h = float(d @ n)
    d2 = _dist2d(np.array([d @ e1, d @ e2]), patch.coords2d)
    return float(np.hypot(h, d2))


def _clip_halfspace(ring: list[np.ndarray], n: np.ndarray, c: float) -> list[np.ndarray]:
    """Sutherland-Hodgman step keeping {x : n·x <= c}."""
    if not ring:
        return []
    if len(ring) == 1:
        return ring if ring[0] @ n <= c else []
    out = []
    k = len(ring)
    for i in range(k):
        p, q = ring[i], ring[(i + 1) % k]
        fp, fq = p @ n - c, q @ n - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            out.append(p + (fp / (fp - fq)) * (q - p))
    return out


def _segment_segment(p: Patch, q: Patch, eps: float) -> Patch | None:
    a0, a1 = p.array
    b0, b1 = q.array
    da = a1 - a0
    la = np.linalg.norm(da)
    u = da / la
    # collinear?
    off0 = b0 - a0 - ((b0 - a0) @ u) * u
    off1 = b1 - a0 - ((b1 - a0) @ u) * u
    if np.linalg.norm(off0) <= eps and np.linalg.norm(off1) <= eps:
        s0, s1 = sorted([float((b0 - a0) @ u), float((b1 - a0) @ u)])
        lo, hi = max(0.0, s0), min(la, s1)
        if hi < lo - eps:
            return None
        if hi - lo <= eps:
            m = (max(lo, min(hi, la)) + lo) / 2.0 if hi >= lo else lo
            return Patch.make(a0 + u * min(max(m, 0.0), la), eps)
        return Patch.make(np.array([a0 + lo * u, a0 + hi * u]), eps)
    db = b1 - b0
    # closest points between the two segments
    r = a0 - b0
    aa, ee, ff = da @ da, db @ db, db @ r
    cc, bb = da @ r, da @ db
    den = aa * ee - bb * bb
    s = min(max((bb * ff - cc * ee) / den, 0.0), 1.0) if den > 1e-300 else 0.0
    t = (bb * s + ff) / ee
    if t < 0.0:
        t, s = 0.0, min(max(-cc / aa, 0.0), 1.0)
    elif t > 1.0:
        t, s = 1.0, min(max((bb - cc) / aa, 0.0), 1.0)
    pa, pb = a0 + s * da, b0 + t * db
    if np.linalg.norm(pa - pb) <= eps:
        return Patch.make((pa + pb) / 2.0, eps)
    return None


def intersect_patches(p: Patch, q: Patch, eps: float = 1e-9) -> Patch | None:
    """Convex intersection of two patches within tolerance ``eps`` (None if they are apart)."""
    if p.kind == POINT or q.kind == POINT:
        pt, other = (p, q) if p.kind == POINT else (q, p)
        if point_patch_distance(pt.array[0], other) <= eps:
            return pt
        return None
    if q.kind != POLYGON and p.kind == POLYGON:
        p, q = q, p
    if q.kind != POLYGON:
        return _segment_segment(p, q, eps)
    o, e1, e2, n = q.plane
    c = float(o @ n)
    ring = [v for v in p.array]
    ring = _clip_halfspace(ring, n, c + eps)
    ring = _clip_halfspace(ring, -n, -c + eps)
    if not ring:
        return None
    ring3 = np.array(ring)
    d = ring3 - o
    pc = np.stack([d @ e1, d @ e2], axis=1)
    keep = _dedupe_idx(pc, eps * 1e-3)
    ring3, pc = ring3[keep], pc[keep]
    if len(pc) > 2:
        h = _hull2d(pc, eps * 1e-3)
        ring3, pc = ring3[h], pc[h]
    pts = _convex_intersection_2d(pc, q.coords2d, eps, ring3, q.array, lambda x: o + x[0] * e1 + x[1] * e2)
    if pts is None:
        return None
    return Patch.make(pts, eps)


# --------------------------------------------------------------------------- surface

@dataclass(frozen=True)
class Surface:
    """A finite union of convex patches.  ``label`` is presentation only."""

    patches: tuple[Patch, ...]
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        pats = tuple(p if isinstance(p, Patch) else Patch(p) for p in self.patches)
        object.__setattr__(self, "patches", pats)

    def __hash__(self):
        return hash(self.patches)

    @classmethod
    def of(cls, *patches: Patch, label: str | None = None) -> "Surface":
        return cls(tuple(patches), label)

    @classmethod
    def polygon(cls, points, label: str | None = None, eps: float = 1e-9) -> "Surface":
        return cls((Patch.make(points, eps),), label)

    @classmethod
    def point(cls, p, label: str | None = None) -> "Surface":
        return cls((Patch((tuple(p),)),), label)

    @classmethod
    def segment(cls, a, b, label: str | None = None, eps: float = 1e-9) -> "Surface":
        return cls((Patch.make([a, b], eps),), label)

    @property
    def is_empty(self) -> bool:
        return not self.patches

    @property
    def kind(self) -> str:
        if len(self.patches) == 1:
            return self.patches[0].kind
        return "empty" if not self.patches else "region"

    @property
    def vertices(self) -> tuple[Vec3, ...]:
        return tuple(v for p in self.patches for v in p.vertices)

    def translated(self, d) -> "Surface":
        d = np.asarray(d, dtype=float)
        if not d.any():
            return self
        return Surface(tuple(p.translated(d) for p in self.patches), self.label)

    def samples(self) -> np.ndarray:
        if not self.patches:
            return np.zeros((0, 3))
        return np.vstack([p.samples() for p in self.patches])

    def bounds(self):
        a = np.array(self.vertices, dtype=float)
        return a.min(axis=0), a.max(axis=0)

    def distance(self, x) -> float:
        if not self.patches:
            return float("inf")
        return min(point_patch_distance(x, p) for p in self.patches)

    def key(self):
        return tuple(p.vertices for p in self.patches)

    def __str__(self):
        if self.label:
            return self.label
        return " | ".join(f"{p.kind}[{', '.join(str(v) for v in p.vertices)}]" for p in self.patches)


EMPTY = Surface(())


def _bbox_apart(a: Patch, b: Patch, eps: float) -> bool:
    return bool(np.any(a.array.min(0) - eps > b.array.max(0)) or np.any(b.array.min(0) - eps > a.array.max(0)))


def simplify(surface: Surface, eps: float = 1e-9) -> Surface:
    """Drop patches contained in another patch (e.g. the edges of a contact face)."""
    rank = {POINT: 0, SEGMENT: 1, POLYGON: 2}
    pats = sorted(surface.patches, key=lambda p: (-rank[p.kind], -p.measure()))
    kept: list[Patch] = []
    for p in pats:
        covered = any(
            not _bbox_apart(p, k, eps) and all(point_patch_distance(v, k) <= eps for v in p.array)
            for k in kept
        )
        if not covered:
            kept.append(p)
    kept.sort(key=lambda p: p.vertices)
    return Surface(tuple(kept), surface.label)


def intersect(s1: Surface, s2: Surface, eps: float = 1e-9) -> Surface:
    out = []
    for p in s1.patches:
        for q in s2.patches:
            if _bbox_apart(p, q, eps):
                continue
            r = intersect_patches(p, q, eps)
            if r is not None:
                out.append(r)
    return simplify(Surface(tuple(out)), eps)


def intersects(s1: Surface, s2: Surface, eps: float = 1e-9) -> bool:
    for p in s1.patches:
        for q in s2.patches:
            if not _bbox_apart(p, q, eps) and intersect_patches(p, q, eps) is not None:
                return True
    return False


def covered_by(s1: Surface, s2: Surface, eps: float = 1e-9) -> bool:
    """Every witness point of ``s1`` lies within ``eps`` of ``s2``."""
    return all(s2.distance(x) <= eps for x in s1.samples())


def same_points(s1: Surface, s2: Surface, eps: float = 1e-9) -> bool:
    """Tolerant point-set equality of two surfaces (mutual witness coverage)."""
    if s1.is_empty or s2.is_empty:
        return s1.is_empty and s2.is_empty
    return covered_by(s1, s2, eps) and covered_by(s2, s1, eps)


def union(*surfaces: Surface) -> Surface:
    return Surface(tuple(p for s in surfaces for p in s.patches))


def patches_of(items: Iterable[Patch] | Sequence[Patch]) -> Surface:
    return Surface(tuple(items))
