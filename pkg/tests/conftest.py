"""Shared mesh builders.

These are the geometric fixtures the suite leans on: closed meshes with
known volume, area, and topology so tests can check against hand
computations instead of the code under test.
"""

from __future__ import annotations

import numpy as np
import pytest

from dtest.model import TriangleMesh

# 12-triangle axis-aligned box, outward orientation
_BOX_FACES = np.array([
    [0, 1, 3], [0, 3, 2],    # x = lo
    [4, 6, 7], [4, 7, 5],    # x = hi
    [0, 4, 5], [0, 5, 1],    # y = lo
    [2, 3, 7], [2, 7, 6],    # y = hi
    [0, 2, 6], [0, 6, 4],    # z = lo
    [1, 5, 7], [1, 7, 3],    # z = hi
], dtype=np.int64)


def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriangleMesh:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    verts = np.array([[x, y, z]
                      for x in (lo[0], hi[0])
                      for y in (lo[1], hi[1])
                      for z in (lo[2], hi[2])])
    return TriangleMesh(verts, _BOX_FACES.copy())


def octahedron_mesh(radius: float = 1.0) -> TriangleMesh:
    verts = radius * np.array([
        [1.0, 0, 0], [-1.0, 0, 0],
        [0, 1.0, 0], [0, -1.0, 0],
        [0, 0, 1.0], [0, 0, -1.0],
    ])
    tris = np.array([
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
    ], dtype=np.int64)
    return TriangleMesh(verts, tris)


def uv_sphere(radius: float = 1.0, n_lat: int = 24,
              n_lon: int = 48) -> TriangleMesh:
    """Closed latitude/longitude sphere with pole fans."""
    verts = [[0.0, 0.0, radius]]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        for j in range(n_lon):
            phi = 2 * np.pi * j / n_lon
            verts.append([radius * np.sin(theta) * np.cos(phi),
                          radius * np.sin(theta) * np.sin(phi),
                          radius * np.cos(theta)])
    verts.append([0.0, 0.0, -radius])
    south = len(verts) - 1

    def ring(i: int, j: int) -> int:
        return 1 + (i - 1) * n_lon + (j % n_lon)

    tris = []
    for j in range(n_lon):
        tris.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append([a, c, d])
            tris.append([a, d, b])
    for j in range(n_lon):
        tris.append([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)])
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64))


def torus_mesh(major: float = 1.0, minor: float = 0.35, n_u: int = 32,
               n_v: int = 16) -> TriangleMesh:
    verts = []
    for i in range(n_u):
        u = 2 * np.pi * i / n_u
        for j in range(n_v):
            v = 2 * np.pi * j / n_v
            w = major + minor * np.cos(v)
            verts.append([w * np.cos(u), w * np.sin(u),
                          minor * np.sin(v)])

    def vid(i: int, j: int) -> int:
        return (i % n_u) * n_v + (j % n_v)

    tris = []
    for i in range(n_u):
        for j in range(n_v):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append([a, b, d])
            tris.append([a, d, c])
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64))


def two_tets_sharing_vertex() -> TriangleMesh:
    """Two closed tetrahedra touching at one apex: a non-manifold vertex."""
    verts = np.array([
        [0.0, 0.0, 0.0],                       # shared apex
        [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0],
    ])
    tris = np.array([
        [0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3],
        [0, 4, 5], [0, 6, 4], [0, 5, 6], [4, 6, 5],
    ], dtype=np.int64)
    return TriangleMesh(verts, tris)


@pytest.fixture
def cube() -> TriangleMesh:
    return box_mesh()


@pytest.fixture
def octahedron() -> TriangleMesh:
    return octahedron_mesh()
