"""Queryable solid models and the point-membership query (PMQ).

Two model backends are supported: constructive solid geometry trees over
analytic primitives (sphere, box, cylinder) and indexed triangle meshes.
Both answer the same three queries: point membership classification with an
accuracy band, unsigned distance to the boundary, and an axis-aligned
bounding box.  All coordinates are in millimetres.

The signed membership convention is negative inside, positive outside.  For
CSG leaves the value is the exact signed distance; for composite nodes the
min/max combination keeps the exact sign everywhere but its magnitude is
only a lower bound on the true distance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyModel, NonClosedMesh

# Area below this is treated as a collapsed triangle (mm^2).
DEGENERATE_AREA = 1e-15


class Classification(enum.Enum):
    INSIDE = -1
    BOUNDARY = 0
    OUTSIDE = 1


@dataclass(frozen=True)
class PmqResult:
    classification: Classification
    band_halfwidth: float


def _as_point(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# analytic primitives

@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_point(self.lo))
        object.__setattr__(self, "hi", _as_point(self.hi))
        if not np.all(self.lo < self.hi):
            raise ValueError("box must have positive extent on every axis")


@dataclass(frozen=True, eq=False)
class Cylinder:
    """Finite capped cylinder: base disc centre, unit axis, radius, height."""

    base: np.ndarray
    axis: np.ndarray
    radius: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "base", _as_point(self.base))
        axis = _as_point(self.axis)
        norm = float(np.linalg.norm(axis))
        if norm == 0.0:
            raise ValueError("cylinder axis must be nonzero")
        object.__setattr__(self, "axis", axis / norm)
        if not (self.radius > 0 and self.height > 0):
            raise ValueError("cylinder radius and height must be positive")


Primitive = Sphere | Box | Cylinder


# ---------------------------------------------------------------------------
# CSG tree

class CsgNode:
    """Base class for CSG tree nodes."""


@dataclass(frozen=True, eq=False)
class CsgLeaf(CsgNode):
    primitive: Primitive


@dataclass(frozen=True, eq=False)
class CsgUnion(CsgNode):
    left: CsgNode
    right: CsgNode


@dataclass(frozen=True, eq=False)
class CsgIntersection(CsgNode):
    left: CsgNode
    right: CsgNode


@dataclass(frozen=True, eq=False)
class CsgDifference(CsgNode):
    left: CsgNode
    right: CsgNode


def _primitive_signed(prim: Primitive, pts: np.ndarray) -> np.ndarray:
    """Exact signed distance of points (n, 3) to a primitive's boundary."""
    if isinstance(prim, Sphere):
        return np.linalg.norm(pts - prim.center, axis=-1) - prim.radius
    if isinstance(prim, Box):
        center = 0.5 * (prim.lo + prim.hi)
        half = 0.5 * (prim.hi - prim.lo)
        q = np.abs(pts - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside
    if isinstance(prim, Cylinder):
        rel = pts - prim.base
        along = rel @ prim.axis
        radial = np.linalg.norm(rel - along[..., None] * prim.axis, axis=-1)
        dr = radial - prim.radius
        da = np.maximum(-along, along - prim.height)
        corner = np.hypot(np.maximum(dr, 0.0), np.maximum(da, 0.0))
        return np.where((dr > 0) & (da > 0), corner, np.maximum(dr, da))
    raise TypeError(f"unknown primitive type: {type(prim).__name__}")


def signed_membership(node: CsgNode, pts: np.ndarray) -> np.ndarray:
    """Signed membership of points (n, 3) against a CSG tree.

    Negative inside, positive outside, zero on the boundary.  Union takes the
    pointwise min, intersection the max, and difference max(left, -right),
    which matches regularized set semantics sign-for-sign.
    """
    if isinstance(node, CsgLeaf):
        return _primitive_signed(node.primitive, pts)
    if isinstance(node, CsgUnion):
        return np.minimum(signed_membership(node.left, pts),
                          signed_membership(node.right, pts))
    if isinstance(node, CsgIntersection):
        return np.maximum(signed_membership(node.left, pts),
                          signed_membership(node.right, pts))
    if isinstance(node, CsgDifference):
        return np.maximum(signed_membership(node.left, pts),
                          -signed_membership(node.right, pts))
    raise TypeError(f"unknown CSG node type: {type(node).__name__}")


def _primitive_bbox(prim: Primitive) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(prim, Sphere):
        return prim.center - prim.radius, prim.center + prim.radius
    if isinstance(prim, Box):
        return prim.lo.copy(), prim.hi.copy()
    if isinstance(prim, Cylinder):
        mid = prim.base + 0.5 * prim.height * prim.axis
        # exact AABB of a capped cylinder: slab extent plus rim extent
        half = (0.5 * prim.height * np.abs(prim.axis)
                + prim.radius * np.sqrt(np.maximum(0.0, 1.0 - prim.axis ** 2)))
        return mid - half, mid + half
    raise TypeError(f"unknown primitive type: {type(prim).__name__}")


def _csg_bbox(node: CsgNode) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(node, CsgLeaf):
        return _primitive_bbox(node.primitive)
    if isinstance(node, CsgUnion):
        llo, lhi = _csg_bbox(node.left)
        rlo, rhi = _csg_bbox(node.right)
        return np.minimum(llo, rlo), np.maximum(lhi, rhi)
    if isinstance(node, CsgIntersection):
        llo, lhi = _csg_bbox(node.left)
        rlo, rhi = _csg_bbox(node.right)
        lo, hi = np.maximum(llo, rlo), np.minimum(lhi, rhi)
        if np.any(lo >= hi):
            raise EmptyModel("intersection bounding boxes do not overlap")
        return lo, hi
    if isinstance(node, CsgDifference):
        # subtracting material can only shrink the model
        return _csg_bbox(node.left)
    raise TypeError(f"unknown CSG node type: {type(node).__name__}")


# ---------------------------------------------------------------------------
# triangle meshes

@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle mesh.  Vertices (v, 3) float, triangles (t, 3) int.

    Construction rejects out-of-range indices and collapsed triangles;
    readers are expected to weld duplicates and drop degenerates first.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must have shape (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must have shape (n, 3)")
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        if len(t):
            areas = triangle_areas(v, t)
            if np.any(areas <= DEGENERATE_AREA):
                raise ValueError("mesh contains a degenerate triangle")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def weld(vertices: np.ndarray, triangles: np.ndarray,
         tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Merge nearby vertices and drop triangles that collapse.

    With tol == 0 only bit-identical vertices merge; with tol > 0 a vertex
    joins the first earlier vertex strictly closer than tol.  Survivors keep
    first-appearance order, so the result is deterministic.
    """
    vertices = np.ascontiguousarray(np.asarray(vertices, dtype=float))
    triangles = np.asarray(triangles, dtype=np.int64)
    if len(vertices) == 0:
        return vertices, triangles.reshape(0, 3)

    if tol == 0.0:
        view = vertices.view([("", vertices.dtype)] * 3).ravel()
        _, first, inverse = np.unique(view, return_index=True,
                                      return_inverse=True)
        order = np.argsort(first, kind="stable")
        rank = np.empty(len(order), dtype=np.int64)
        rank[order] = np.arange(len(order))
        new_vertices = vertices[first[order]]
        remap = rank[inverse]
    else:
        cells: dict[tuple[int, int, int], list[int]] = {}
        keep: list[int] = []
        remap = np.empty(len(vertices), dtype=np.int64)
        cell_ids = np.floor(vertices / tol).astype(np.int64)
        for i, v in enumerate(vertices):
            ci = tuple(cell_ids[i])
            target = -1
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        for j in cells.get((ci[0] + dx, ci[1] + dy,
                                            ci[2] + dz), ()):
                            if np.linalg.norm(vertices[keep[j]] - v) < tol:
                                target = j
                                break
                        if target >= 0:
                            break
                    if target >= 0:
                        break
                if target >= 0:
                    break
            if target < 0:
                target = len(keep)
                keep.append(i)
                cells.setdefault(ci, []).append(target)
            remap[i] = target
        new_vertices = vertices[keep]

    new_triangles = remap[triangles] if len(triangles) else triangles
    if len(new_triangles):
        distinct = ((new_triangles[:, 0] != new_triangles[:, 1])
                    & (new_triangles[:, 1] != new_triangles[:, 2])
                    & (new_triangles[:, 0] != new_triangles[:, 2]))
        new_triangles = new_triangles[distinct]
    if len(new_triangles):
        new_triangles = new_triangles[
            triangle_areas(new_vertices, new_triangles) > DEGENERATE_AREA]
    return new_vertices, new_triangles.reshape(-1, 3)


# ---------------------------------------------------------------------------
# queryable model facade

@dataclass(frozen=True, eq=False)
class QueryableModel:
    root: CsgNode | TriangleMesh
    units: str = "mm"

    @property
    def is_mesh(self) -> bool:
        return isinstance(self.root, TriangleMesh)


def bounding_box(model: QueryableModel) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box (lo, hi) of the model, in mm."""
    if model.is_mesh:
        mesh: TriangleMesh = model.root
        if len(mesh.vertices) == 0:
            raise EmptyModel("mesh has no vertices")
        return mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    return _csg_bbox(model.root)


def classify_batch(model: QueryableModel, pts: np.ndarray,
                   accuracy: float) -> np.ndarray:
    """Classify points (n, 3) in one call; returns int codes.

    Codes follow Classification values: -1 inside, 0 within the accuracy
    band of the boundary, +1 outside.  Boundary wins ties: any point whose
    unsigned distance is <= accuracy is Boundary.
    """
    if accuracy < 0:
        raise ValueError("accuracy must be >= 0")
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    if model.is_mesh:
        return _classify_mesh(model.root, pts, accuracy)
    d = signed_membership(model.root, pts)
    codes = np.where(d < 0, Classification.INSIDE.value,
                     Classification.OUTSIDE.value).astype(np.int8)
    codes[np.abs(d) <= accuracy] = Classification.BOUNDARY.value
    return codes


def pmq(model: QueryableModel, point, accuracy: float) -> PmqResult:
    """Point-membership query with an accuracy band of halfwidth `accuracy`."""
    code = classify_batch(model, _as_point(point)[None, :], accuracy)[0]
    return PmqResult(Classification(int(code)), accuracy)


def distance_batch(model: QueryableModel, pts: np.ndarray) -> np.ndarray:
    """Unsigned distance to the model boundary for points (n, 3).

    Exact for meshes and CSG leaves; for composite CSG nodes the value is a
    lower bound on the true distance (the sign information stays exact).
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    if model.is_mesh:
        return _mesh_distance(model.root, pts)
    return np.abs(signed_membership(model.root, pts))


def distance(model: QueryableModel, point) -> float:
    return float(distance_batch(model, _as_point(point)[None, :])[0])


# ---------------------------------------------------------------------------
# mesh queries

def _chunk_size(n_triangles: int) -> int:
    # keep (chunk, triangles, 3) temporaries around a few hundred MB at most
    return max(1, int(2 ** 22 // max(1, n_triangles)))


def _mesh_distance(mesh: TriangleMesh, pts: np.ndarray) -> np.ndarray:
    v = mesh.vertices
    t = mesh.triangles
    if len(t) == 0:
        raise EmptyModel("mesh has no triangles")
    v0, v1, v2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    out = np.empty(len(pts))
    step = _chunk_size(len(t))
    for s in range(0, len(pts), step):
        chunk = pts[s:s + step]
        out[s:s + step] = np.sqrt(_point_triangle_dist_sq(
            chunk, v0, v1, v2).min(axis=1))
    return out


def _segment_dist_sq(p, a, ab, ab_len_sq):
    # p (n, 1, 3); a, ab (t, 3)
    tt = np.einsum("nij,ij->ni", p - a, ab) / ab_len_sq
    np.clip(tt, 0.0, 1.0, out=tt)
    closest = a + tt[..., None] * ab
    diff = p - closest
    return np.einsum("nij,nij->ni", diff, diff)


def _point_triangle_dist_sq(pts, v0, v1, v2):
    """Squared distances, points (n, 3) x triangles (t, 3) -> (n, t).

    Exact: the closest point is either the in-plane projection (when its
    barycentric coordinates are inside) or lies on one of the clamped edges.
    """
    p = pts[:, None, :]
    e1 = v1 - v0
    e2 = v2 - v0
    d_sq = _segment_dist_sq(p, v0, e1, np.einsum("ij,ij->i", e1, e1))
    np.minimum(d_sq, _segment_dist_sq(p, v0, e2,
                                      np.einsum("ij,ij->i", e2, e2)),
               out=d_sq)
    e12 = v2 - v1
    np.minimum(d_sq, _segment_dist_sq(p, v1, e12,
                                      np.einsum("ij,ij->i", e12, e12)),
               out=d_sq)

    n = np.cross(e1, e2)
    nn = np.einsum("ij,ij->i", n, n)
    w = p - v0
    wn = np.einsum("nij,ij->ni", w, n)
    plane_sq = wn * wn / nn
    a = np.einsum("ij,ij->i", e1, e1)
    b = np.einsum("ij,ij->i", e1, e2)
    c = np.einsum("ij,ij->i", e2, e2)
    we1 = np.einsum("nij,ij->ni", w, e1)
    we2 = np.einsum("nij,ij->ni", w, e2)
    det = a * c - b * b
    s = (c * we1 - b * we2) / det
    u = (a * we2 - b * we1) / det
    inside = (s >= 0.0) & (u >= 0.0) & (s + u <= 1.0)
    return np.where(inside, np.minimum(d_sq, plane_sq), d_sq)


# jitter applied to the three axis rays; irrational so that lattice-aligned
# geometry cannot line up with a ray for every retry
_JITTER_A = 0.0031830988618379067
_JITTER_B = 0.0041421356237309515


def _jittered_axis(k: int, attempt: int) -> np.ndarray:
    d = np.zeros(3)
    d[k] = 1.0
    scale = 1.0 + 0.37 * attempt
    d[(k + 1) % 3] = _JITTER_A * scale
    d[(k + 2) % 3] = _JITTER_B * scale
    return d / np.linalg.norm(d)


def _ray_parity(mesh: TriangleMesh, pts: np.ndarray,
                direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Crossing parity of one ray per point; flags rays with grazing hits."""
    v = mesh.vertices
    t = mesh.triangles
    v0 = v[t[:, 0]]
    e1 = v[t[:, 1]] - v0
    e2 = v[t[:, 2]] - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    scale = float(np.abs(det).max(initial=0.0))
    ok = np.abs(det) > 1e-14 * max(scale, 1e-300)
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    diag = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
    teps = 1e-12 * max(diag, 1.0)
    eb = 1e-9

    parity = np.zeros(len(pts), dtype=bool)
    grazed = np.zeros(len(pts), dtype=bool)
    step = _chunk_size(len(t))
    for s in range(0, len(pts), step):
        p = pts[s:s + step]
        tvec = p[:, None, :] - v0
        uu = np.einsum("nij,ij->ni", tvec, pvec) * inv
        qvec = np.cross(tvec, e1)
        vv = np.einsum("nij,j->ni", qvec, direction) * inv
        tt = np.einsum("nij,ij->ni", qvec, e2) * inv
        strict = (ok & (uu > eb) & (vv > eb) & (uu + vv < 1.0 - eb)
                  & (tt > teps))
        loose = (ok & (uu > -eb) & (vv > -eb) & (uu + vv < 1.0 + eb)
                 & (tt > -teps))
        parity[s:s + step] = (strict.sum(axis=1) % 2).astype(bool)
        grazed[s:s + step] = (loose & ~strict).any(axis=1)
    return parity, ~grazed


def _mesh_inside(mesh: TriangleMesh, pts: np.ndarray,
                 max_attempts: int = 4) -> np.ndarray:
    """Inside/outside for points assumed farther than the band from the mesh.

    Each attempt casts three jittered axis rays.  Three clean unanimous
    votes decide; two clean agreeing votes outvote a grazing third.  Clean
    rays that disagree are retried with fresh jitter, and points that never
    settle signal a mesh that is not watertight.
    """
    n = len(pts)
    inside = np.zeros(n, dtype=bool)
    open_idx = np.arange(n)
    for attempt in range(max_attempts):
        if len(open_idx) == 0:
            return inside
        sub = pts[open_idx]
        votes = np.zeros(len(sub), dtype=np.int8)
        clean_n = np.zeros(len(sub), dtype=np.int8)
        for k in range(3):
            parity, clean = _ray_parity(mesh, sub, _jittered_axis(k, attempt))
            votes += np.where(clean, np.where(parity, 1, -1), 0)
            clean_n += clean
        decided = ((clean_n == 3) & (np.abs(votes) == 3)) | \
                  ((clean_n == 2) & (np.abs(votes) == 2))
        inside[open_idx[decided]] = votes[decided] > 0
        open_idx = open_idx[~decided]
    if len(open_idx):
        raise NonClosedMesh(
            f"ray parity votes disagree for {len(open_idx)} point(s) "
            f"after {max_attempts} retries; the mesh has naked edges "
            f"or is otherwise not watertight")
    return inside


def _classify_mesh(mesh: TriangleMesh, pts: np.ndarray,
                   accuracy: float) -> np.ndarray:
    dist = _mesh_distance(mesh, pts)
    codes = np.full(len(pts), Classification.OUTSIDE.value, dtype=np.int8)
    boundary = dist <= accuracy
    codes[boundary] = Classification.BOUNDARY.value
    far = ~boundary
    if far.any():
        inner = _mesh_inside(mesh, pts[far])
        far_codes = np.where(inner, Classification.INSIDE.value,
                             Classification.OUTSIDE.value).astype(np.int8)
        codes[far] = far_codes
    return codes
