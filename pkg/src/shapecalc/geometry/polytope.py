"""Convex polytopes in vertex representation and the separating-axis kernel.

Because shapes only translate, the set of candidate separating axes of two
polytopes never changes.  Along every axis the projected overlap of the two
bodies is an affine function of time, so the penetration depth

    pen(t) = min over axes of overlap(t)

is concave and piecewise linear.  Every contact query in the package reduces to
evaluating or solving these affine lines.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .common import GeometryError, Vec3, vec3
from .surface import Patch


@dataclass(frozen=True, eq=False)
class ConvexPolytope:
    """A full-dimensional convex polytope given by its extreme points.

    Vertices are local coordinates, relative to the owning shape's reference
    point.  The constructor rejects inputs with duplicate or non-extreme
    vertices; use `from_points` to take the hull of an arbitrary cloud.
    """

    vertices: tuple[Vec3, ...]

    def __post_init__(self):
        verts = tuple(vec3(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 4:
            raise GeometryError("a polytope needs at least 4 non-coplanar vertices")
        try:
            hull = ConvexHull(np.array(verts, dtype=float))
        except QhullError as exc:
            raise GeometryError(f"degenerate polytope: {str(exc).splitlines()[0]}") from None
        if len(hull.vertices) != len(verts):
            raise GeometryError("polytope vertices must all be extreme points of the hull")
        if hull.volume <= 1e-15:
            raise GeometryError("polytope has zero volume")
        object.__setattr__(self, "_hull", hull)

    @cached_property
    def _vertex_set(self) -> tuple[Vec3, ...]:
        return tuple(sorted(self.vertices))

    def __eq__(self, other):
        # same solid regardless of vertex order
        return isinstance(other, ConvexPolytope) and self._vertex_set == other._vertex_set

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self._vertex_set)
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return f"ConvexPolytope({len(self.vertices)} vertices)"

    @classmethod
    def from_points(cls, points) -> "ConvexPolytope":
        pts = np.asarray(points, dtype=float)
        try:
            hull = ConvexHull(pts)
        except QhullError as exc:
            raise GeometryError(f"degenerate point cloud: {str(exc).splitlines()[0]}") from None
        return cls(tuple(tuple(pts[i]) for i in sorted(hull.vertices)))

    @classmethod
    def box(cls, size=(1.0, 1.0, 1.0), centre=(0.0, 0.0, 0.0)) -> "ConvexPolytope":
        """Axis-aligned box with side lengths ``size`` centred at ``centre`` (local frame)."""
        sx, sy, sz = (float(s) / 2.0 for s in size)
        cx, cy, cz = (float(c) for c in centre)
        if min(sx, sy, sz) <= 0:
            raise GeometryError("box sides must be positive")
        return cls(tuple(
            (cx + i * sx, cy + j * sy, cz + k * sz)
            for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)
        ))

    # ---------------------------------------------------------------- derived data

    @cached_property
    def array(self) -> np.ndarray:
        a = np.array(self.vertices, dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def _planes(self):
        """Merged hull facets: unit normals, offsets and the vertex indices on each face."""
        eq = self._hull.equations
        scale = max(float(np.abs(self.array).max()), 1.0)
        reps: dict[tuple, np.ndarray] = {}
        for row in eq:
            key = tuple(np.round(row[:3], 7)) + (round(float(-row[3]) / scale, 7),)
            reps.setdefault(key, row)
        keys = sorted(reps)
        N = np.array([reps[k][:3] for k in keys])
        N /= np.linalg.norm(N, axis=1)[:, None]
        proj = self.array @ N.T
        offs = proj.max(axis=0)
        tol = max(1e-9 * scale, 1e-7 * scale)
        idx = tuple(np.nonzero(proj[:, f] >= offs[f] - tol)[0] for f in range(len(keys)))
        N.setflags(write=False)
        offs.setflags(write=False)
        return N, offs, idx, scale

    @property
    def normals(self) -> np.ndarray:
        """Outward unit face normals (F, 3); faces satisfy ``normals @ x <= offsets``."""
        return self._planes[0]

    @property
    def offsets(self) -> np.ndarray:
        return self._planes[1]

    @cached_property
    def face_patches(self) -> tuple[Patch, ...]:
        """Face polygons in local coordinates, in the same order as `normals`."""
        _, _, idx, scale = self._planes
        return tuple(Patch.make(self.array[i], eps=1e-7 * scale) for i in idx)

    @cached_property
    def _rings(self) -> tuple[np.ndarray, ...]:
        """Vertex indices of each face in angular order around its normal."""
        out = []
        for n, idx in zip(self.normals, self._planes[2]):
            P = self.array[idx]
            c = P.mean(axis=0)
            e1 = P[0] - c
            e1 = e1 / np.linalg.norm(e1)
            e2 = np.cross(n, e1)
            d = P - c
            out.append(idx[np.argsort(np.arctan2(d @ e2, d @ e1))])
        return tuple(out)

    @cached_property
    def edges(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        seen = set()
        out = []
        for ring in self._rings:
            for i in range(len(ring)):
                a, b = int(ring[i]), int(ring[(i + 1) % len(ring)])
                k = (a, b) if self.vertices[a] <= self.vertices[b] else (b, a)
                if k not in seen:
                    seen.add(k)
                    out.append((self.array[k[0]].copy(), self.array[k[1]].copy()))
        return tuple(out)

    @cached_property
    def edge_dirs(self) -> np.ndarray:
        """Unit edge directions, unique up to sign."""
        dirs: list[np.ndarray] = []
        for a, b in self.edges:
            d = b - a
            d = d / np.linalg.norm(d)
            if not any(abs(abs(float(d @ e)) - 1.0) < 1e-10 for e in dirs):
                dirs.append(d)
        return np.array(dirs)

    @cached_property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.array.min(axis=0), self.array.max(axis=0)

    @cached_property
    def min_width(self) -> float:
        """Smallest extent over the face normals: a lower bound on what can be tunnelled."""
        proj = self.array @ self.normals.T
        return float((proj.max(axis=0) - proj.min(axis=0)).min())

    @cached_property
    def centroid(self) -> np.ndarray:
        """Centre of mass of the solid (uniform density)."""
        hull = self._hull
        c0 = self.array.mean(axis=0)
        vol, acc = 0.0, np.zeros(3)
        for simplex in hull.simplices:
            a, b, c = self.array[simplex]
            v = abs(np.dot(a - c0, np.cross(b - c0, c - c0))) / 6.0
            vol += v
            acc += v * (a + b + c + c0) / 4.0
        return acc / vol

    @property
    def volume(self) -> float:
        return float(self._hull.volume)

    def contains(self, x, eps: float = 1e-9) -> bool:
        """Closed membership with slack ``eps`` (local frame)."""
        return bool(np.all(self.normals @ np.asarray(x, dtype=float) - self.offsets <= eps))

    def depth(self, x) -> float:
        """Signed distance to the boundary, positive inside (exact for interior points)."""
        return float(np.min(self.offsets - self.normals @ np.asarray(x, dtype=float)))

    def translated(self, d) -> "ConvexPolytope":
        d = np.asarray(d, dtype=float)
        return ConvexPolytope(tuple(tuple(v) for v in self.array + d))


# ------------------------------------------------------------------- SAT kernel

@dataclass(frozen=True)
class AxisSet:
    """Candidate separating axes of an ordered polytope pair, with local projection extents."""

    dirs: np.ndarray      # (k, 3) unit axes
    source: np.ndarray    # 0 = face of A, 1 = face of B, 2 = edge x edge
    loA: np.ndarray
    hiA: np.ndarray
    loB: np.ndarray
    hiB: np.ndarray


@lru_cache(maxsize=8192)
def separating_axes(pa: ConvexPolytope, pb: ConvexPolytope) -> AxisSet:
    dirs = [pa.normals, pb.normals]
    source = [np.zeros(len(pa.normals), int), np.ones(len(pb.normals), int)]
    ea, eb = pa.edge_dirs, pb.edge_dirs
    if len(ea) and len(eb):
        cr = np.cross(ea[:, None, :], eb[None, :, :]).reshape(-1, 3)
        nrm = np.linalg.norm(cr, axis=1)
        keep = nrm > 1e-9
        cr = cr[keep] / nrm[keep, None]
        # drop duplicates (up to sign) and axes already covered by face normals
        base = np.vstack(dirs)
        uniq: list[np.ndarray] = []
        for c in cr:
            if np.any(np.abs(np.abs(base @ c) - 1.0) < 1e-10):
                continue
            if any(abs(abs(float(c @ u)) - 1.0) < 1e-10 for u in uniq):
                continue
            uniq.append(c)
        if uniq:
            dirs.append(np.array(uniq))
            source.append(np.full(len(uniq), 2))
    D = np.vstack(dirs)
    pA = pa.array @ D.T
    pB = pb.array @ D.T
    return AxisSet(D, np.concatenate(source), pA.min(0), pA.max(0), pB.min(0), pB.max(0))


def overlap_lines(pa: ConvexPolytope, posA, velA, pb: ConvexPolytope, posB, velB):
    """Intercepts ``a`` and slopes ``b`` of the 2k overlap lines ``a + b t``.

    The first k lines measure ``hi(A) - lo(B)`` along each axis, the last k
    measure ``hi(B) - lo(A)``.  Their minimum is the penetration depth: positive
    when the interiors overlap, zero when touching, minus the gap otherwise.
    """
    ax = separating_axes(pa, pb)
    off = (np.asarray(posA, float) - np.asarray(posB, float)) @ ax.dirs.T
    rate = (np.asarray(velA, float) - np.asarray(velB, float)) @ ax.dirs.T
    a = np.concatenate([ax.hiA - ax.loB + off, ax.hiB - ax.loA - off])
    b = np.concatenate([rate, -rate])
    return a, b


def penetration(a: np.ndarray, b: np.ndarray, t: float = 0.0) -> float:
    return float(np.min(a + b * t))


def positive_interval(a: np.ndarray, b: np.ndarray, level: float, t0: float, t1: float):
    """Sub-interval of [t0, t1] where every line ``a + b t`` exceeds ``level`` (or None)."""
    lo, hi = t0, t1
    flat = b == 0.0
    if np.any(a[flat] <= level):
        return None
    up, dn = b > 0.0, b < 0.0
    if np.any(up):
        lo = max(lo, float(np.max((level - a[up]) / b[up])))
    if np.any(dn):
        hi = min(hi, float(np.min((level - a[dn]) / b[dn])))
    if hi <= lo:
        return None
    return lo, hi


def entry_time(a: np.ndarray, b: np.ndarray) -> float:
    """Start of {t >= 0 : pen(t) >= 0}, assuming that set is non-empty."""
    up = b > 0.0
    t = 0.0
    if np.any(up):
        t = max(t, float(np.max(-a[up] / b[up])))
    return t
