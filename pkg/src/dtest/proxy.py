"""Proxy models built from point-membership queries.

Three proxies are derived from a queryable model and a ball radius epsilon:

* an interior voxel grid with spacing h = epsilon / sqrt(3), so that a ball
  of radius epsilon around an occupied lattice point covers its whole cell;
* a boundary point cloud, found by bisecting every lattice edge whose
  endpoints classify Inside/Outside;
* a union of balls of radius epsilon centred on the occupied points.

Only query results are consumed here; the model's internal representation
never leaks into the proxies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud, EmptyModel, GridTooLarge
from .model import (Classification, QueryableModel, _mesh_inside,
                    bounding_box, classify_batch, signed_membership)

CELL_BUDGET = 2 ** 27
BISECTION_CAP = 20


@dataclass(frozen=True, eq=False)
class InteriorGrid:
    origin: np.ndarray            # lattice point (0, 0, 0), mm
    spacing: float                # h, mm
    dims: tuple[int, int, int]
    occupancy: np.ndarray         # bool, Inside-classified lattice points
    boundary: np.ndarray          # bool, Boundary-classified lattice points
    pmq_accuracy: float


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    sample_accuracy: float        # max distance of a point to the surface
    coverage: float               # sampling gap along the surface (2h)


@dataclass(frozen=True, eq=False)
class UnionOfBalls:
    centers: np.ndarray
    radius: float


def build_interior_grid(model: QueryableModel, epsilon: float,
                        pmq_accuracy: float,
                        cell_budget: int = CELL_BUDGET,
                        bounds: tuple[np.ndarray, np.ndarray] | None = None,
                        ) -> InteriorGrid:
    """Classify a lattice covering the model box inflated by 2h per side.

    `bounds` overrides the model's bounding box so that two models can be
    rasterized on a shared lattice.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    lo, hi = bounds if bounds is not None else bounding_box(model)
    h = epsilon / math.sqrt(3.0)
    origin = np.asarray(lo, dtype=float) - 2.0 * h
    span = np.asarray(hi, dtype=float) + 2.0 * h - origin
    dims = tuple(int(math.ceil(s / h)) + 1 for s in span)
    total = dims[0] * dims[1] * dims[2]
    if total > cell_budget:
        raise GridTooLarge(
            f"grid of {dims[0]}x{dims[1]}x{dims[2]} = {total} cells "
            f"exceeds the budget of {cell_budget}")

    occ = np.zeros(total, dtype=bool)
    bnd = np.zeros(total, dtype=bool)
    nyz = dims[1] * dims[2]
    chunk = 1 << 18
    for s in range(0, total, chunk):
        idx = np.arange(s, min(s + chunk, total))
        i = idx // nyz
        j = (idx // dims[2]) % dims[1]
        k = idx % dims[2]
        pts = origin + h * np.stack([i, j, k], axis=1).astype(float)
        codes = classify_batch(model, pts, pmq_accuracy)
        occ[idx] = codes == Classification.INSIDE.value
        bnd[idx] = codes == Classification.BOUNDARY.value
    return InteriorGrid(origin=origin, spacing=h, dims=dims,
                        occupancy=occ.reshape(dims),
                        boundary=bnd.reshape(dims),
                        pmq_accuracy=pmq_accuracy)


def grid_points(grid: InteriorGrid, mask: np.ndarray) -> np.ndarray:
    """Coordinates of the lattice points selected by a boolean mask."""
    idx = np.argwhere(mask)
    return grid.origin + grid.spacing * idx.astype(float)


def occupied_points(grid: InteriorGrid) -> np.ndarray:
    return grid_points(grid, grid.occupancy)


def _inside_sign(model: QueryableModel, pts: np.ndarray) -> np.ndarray:
    # exact membership sign; the closed boundary itself counts as inside
    if model.is_mesh:
        return _mesh_inside(model.root, pts)
    return signed_membership(model.root, pts) <= 0.0


def build_point_cloud(model: QueryableModel, epsilon: float,
                      pmq_accuracy: float,
                      grid: InteriorGrid | None = None) -> PointCloud:
    """Sample the model surface by refining Inside/Outside lattice edges."""
    if grid is None:
        grid = build_interior_grid(model, epsilon, pmq_accuracy)
    h = grid.spacing
    inside = grid.occupancy
    outside = ~grid.occupancy & ~grid.boundary

    starts = []
    axes = []
    for axis in range(3):
        sl_a = [slice(None)] * 3
        sl_b = [slice(None)] * 3
        sl_a[axis] = slice(None, -1)
        sl_b[axis] = slice(1, None)
        flip = ((inside[tuple(sl_a)] & outside[tuple(sl_b)])
                | (outside[tuple(sl_a)] & inside[tuple(sl_b)]))
        cells = np.argwhere(flip)
        if len(cells):
            starts.append(cells)
            axes.append(np.full(len(cells), axis))
    if not starts:
        raise EmptyCloud("no Inside/Outside lattice edge found")

    cells = np.vstack(starts).astype(float)
    axes = np.concatenate(axes)
    a = grid.origin + h * cells
    b = a.copy()
    b[np.arange(len(b)), axes] += h

    # orient each edge so `lo` is the inside endpoint
    a_inside = _inside_sign(model, a)
    lo = np.where(a_inside[:, None], a, b)
    hi = np.where(a_inside[:, None], b, a)

    bracket = h
    target = pmq_accuracy / 4.0
    for _ in range(BISECTION_CAP):
        if bracket <= target:
            break
        mid = 0.5 * (lo + hi)
        mid_inside = _inside_sign(model, mid)[:, None]
        lo = np.where(mid_inside, mid, lo)
        hi = np.where(mid_inside, hi, mid)
        bracket *= 0.5
    return PointCloud(points=0.5 * (lo + hi),
                      sample_accuracy=0.5 * bracket,
                      coverage=2.0 * h)


def build_union_of_balls(grid: InteriorGrid,
                         radius: float | None = None) -> UnionOfBalls:
    """Balls of radius epsilon on the occupied lattice points."""
    centers = occupied_points(grid)
    if len(centers) == 0:
        raise EmptyModel("no occupied lattice point")
    if radius is None:
        radius = grid.spacing * math.sqrt(3.0)
    return UnionOfBalls(centers=centers, radius=radius)


def balls_contain(balls: UnionOfBalls, pts: np.ndarray) -> np.ndarray:
    """True for each point lying in at least one ball (closed)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    dist, _ = cKDTree(balls.centers).query(pts)
    return dist <= balls.radius
