"""Structured criss-cross triangulations aligned with the region interfaces.

The enclosing rectangle is cut into square cells of side
``h = 2**-(level + 1)``; every cell is split into four triangles through its
centre node. Region interfaces fall on cell edges, so no triangle straddles a
jump of the weight and the per-triangle weight is read off the region list.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    ALL_DIRICHLET,
    DIRICHLET_EXCEPT_RIGHT_EDGE,
    DIRICHLET_ON_X1_NONPOSITIVE,
    BCRule,
    DomainSpec,
)

# relative slack when deciding whether a width is a whole number of cells
_GRID_RTOL = 1e-9


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TriMesh:
    nodes: np.ndarray          # (n_nodes, 2)
    triangles: np.ndarray      # (n_tri, 3), counterclockwise
    region_tag: np.ndarray     # (n_tri,) index into domain.regions
    dirichlet_nodes: np.ndarray  # sorted node indices
    level: int
    cell_size: float
    domain: DomainSpec
    xs: np.ndarray             # vertical grid lines
    ys: np.ndarray             # horizontal grid lines
    fit_strips: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_cells(self) -> tuple[int, int]:
        return len(self.xs) - 1, len(self.ys) - 1

    @property
    def free_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.dirichlet_nodes] = False
        return np.flatnonzero(mask)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def boundary_nodes(self) -> np.ndarray:
        nx, ny = self.n_cells
        ix, iy = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
        on = (ix == 0) | (ix == nx) | (iy == 0) | (iy == ny)
        return np.flatnonzero(on.ravel())

    def stats(self) -> dict:
        return {
            "level": self.level,
            "cell_size": self.cell_size,
            "n_nodes": self.n_nodes,
            "n_triangles": self.n_triangles,
            "n_dirichlet_nodes": int(len(self.dirichlet_nodes)),
        }


def cell_size(level: int) -> float:
    return 2.0 ** -(level + 1)


def snap_delta(delta: float, level: int) -> float:
    """Nearest positive whole multiple of the level's cell size."""
    h = cell_size(level)
    return max(1, int(round(delta / h))) * h


def _region_columns(domain: DomainSpec, h: float, fit_strips: bool = False) -> list[int]:
    cols = []
    for r in domain.regions:
        n = r.width / h
        k = int(round(n))
        if k < 1 or abs(n - k) > _GRID_RTOL * max(1.0, n):
            if fit_strips:
                cols.append(max(1, int(np.ceil(n - _GRID_RTOL))))
                continue
            snapped = max(1, k) * h
            raise MeshError(
                f"region {r.label!r} has width {r.width!r}, not a multiple of the "
                f"cell size {h!r}; nearest representable width is {snapped!r}")
        cols.append(k)
    return cols


def _grid_lines(domain: DomainSpec, h: float,
                fit_strips: bool = False) -> tuple[np.ndarray, np.ndarray]:
    xs = [domain.regions[0].x_lo]
    for r, n in zip(domain.regions, _region_columns(domain, h, fit_strips)):
        inner = r.x_lo + (r.x_hi - r.x_lo) * np.arange(1, n) / n
        xs.extend(inner.tolist())
        xs.append(r.x_hi)
    x0, x1, y0, y1 = domain.bounds
    ny = (y1 - y0) / h
    if abs(ny - round(ny)) > _GRID_RTOL * max(1.0, ny) or round(ny) < 1:
        raise MeshError(f"domain height {y1 - y0!r} is not a multiple of {h!r}")
    ny = int(round(ny))
    ys = y0 + (y1 - y0) * np.arange(ny + 1) / ny
    ys[-1] = y1
    return np.asarray(xs, dtype=float), ys


def triangulate(domain: DomainSpec, level: int, fit_strips: bool = False) -> TriMesh:
    """Criss-cross triangulation of ``domain`` at the given refinement level.

    A region whose width is not a whole number of cells is an error unless
    ``fit_strips`` is set, in which case it is split into
    ceil(width / h) equal columns (rectangular cells no wider than h).

    Nodes are numbered grid vertices first (row by row, x fastest), then cell
    centres in the same order. Each cell contributes the triangles
    bottom, right, top, left (in that order), all counterclockwise.
    """
    if int(level) != level or level < 1:
        raise MeshError(f"level must be an integer >= 1, got {level!r}")
    level = int(level)
    h = cell_size(level)
    xs, ys = _grid_lines(domain, h, fit_strips)
    nx, ny = len(xs) - 1, len(ys) - 1

    gx, gy = np.meshgrid(xs, ys)
    verts = np.column_stack([gx.ravel(), gy.ravel()])
    cx, cy = np.meshgrid(0.5 * (xs[:-1] + xs[1:]), 0.5 * (ys[:-1] + ys[1:]))
    centres = np.column_stack([cx.ravel(), cy.ravel()])
    nodes = np.vstack([verts, centres])

    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny))
    ix, iy = ix.ravel(), iy.ravel()
    p00 = iy * (nx + 1) + ix
    p10 = p00 + 1
    p01 = p00 + (nx + 1)
    p11 = p01 + 1
    c = len(verts) + iy * nx + ix
    tris = np.stack([
        np.column_stack([p00, p10, c]),
        np.column_stack([p10, p11, c]),
        np.column_stack([p11, p01, c]),
        np.column_stack([p01, p00, c]),
    ], axis=1).reshape(-1, 3)

    # region of each cell column from the interface positions
    col_mid = 0.5 * (xs[:-1] + xs[1:])
    region_of_col = np.searchsorted(np.asarray(domain.interfaces()), col_mid)
    region_tag = np.repeat(region_of_col[ix], 4)

    mesh = TriMesh(nodes, tris.astype(np.int64), region_tag.astype(np.int64),
                   np.empty(0, dtype=np.int64), level, h, domain, xs, ys, fit_strips)
    dirichlet = classify_boundary(mesh, domain.bc_rule)
    return TriMesh(nodes, mesh.triangles, mesh.region_tag, dirichlet, level, h,
                   domain, xs, ys, fit_strips)


def refine(mesh: TriMesh) -> TriMesh:
    """Regenerate the mesh at half the cell size."""
    return triangulate(mesh.domain, mesh.level + 1, mesh.fit_strips)


def classify_boundary(mesh: TriMesh, rule: BCRule) -> np.ndarray:
    """Indices of the clamped boundary nodes under ``rule``.

    Corners shared by a clamped and a free edge are clamped (closure of the
    Dirichlet part).
    """
    nx, ny = mesh.n_cells
    b = mesh.boundary_nodes()
    if rule.kind == ALL_DIRICHLET:
        return b
    x = mesh.nodes[b, 0]
    y_idx = b // (nx + 1)
    if rule.kind == DIRICHLET_EXCEPT_RIGHT_EDGE:
        on_right = b % (nx + 1) == nx
        corner = (y_idx == 0) | (y_idx == ny)
        return b[~on_right | corner]
    if rule.kind == DIRICHLET_ON_X1_NONPOSITIVE:
        scale = max(1.0, float(np.abs(mesh.xs).max()))
        return b[x <= rule.threshold + 1e-12 * scale]
    raise MeshError(f"unsupported boundary rule {rule.kind!r}")


def locate(mesh: TriMesh, points: np.ndarray, tol: float = 1e-10):
    """Containing triangle and barycentric coordinates for each point.

    Uses the grid structure: find the cell, then pick among its four
    triangles the one with the largest minimal barycentric coordinate.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nx, ny = mesh.n_cells
    ix = np.clip(np.searchsorted(mesh.xs, points[:, 0], side="right") - 1, 0, nx - 1)
    iy = np.clip(np.searchsorted(mesh.ys, points[:, 1], side="right") - 1, 0, ny - 1)
    cell = iy * nx + ix
    cand = 4 * cell[:, None] + np.arange(4)[None, :]           # (n, 4)
    p = mesh.nodes[mesh.triangles[cand]]                        # (n, 4, 3, 2)
    v0, v1, v2 = p[..., 0, :], p[..., 1, :], p[..., 2, :]
    det = ((v1[..., 0] - v0[..., 0]) * (v2[..., 1] - v0[..., 1])
           - (v1[..., 1] - v0[..., 1]) * (v2[..., 0] - v0[..., 0]))
    q = points[:, None, :] - v0
    l1 = (q[..., 0] * (v2[..., 1] - v0[..., 1]) - q[..., 1] * (v2[..., 0] - v0[..., 0])) / det
    l2 = ((v1[..., 0] - v0[..., 0]) * q[..., 1] - (v1[..., 1] - v0[..., 1]) * q[..., 0]) / det
    lam = np.stack([1.0 - l1 - l2, l1, l2], axis=-1)           # (n, 4, 3)
    best = lam.min(axis=-1).argmax(axis=1)
    rows = np.arange(len(points))
    lam_best = lam[rows, best]
    if (lam_best.min(axis=1) < -tol).any():
        raise MeshError("some points lie outside the mesh")
    return cand[rows, best], lam_best


def interpolate(coarse: TriMesh, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate a P1 nodal field of ``coarse`` at arbitrary points."""
    tri, lam = locate(coarse, points)
    vals = np.asarray(values)[coarse.triangles[tri]]          # (n, 3, ...)
    return np.einsum("nk,nk...->n...", lam, vals)
