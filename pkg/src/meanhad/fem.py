"""Vector-valued P1 assembly of the Dirichlet and cofactor forms.

For a field phi with nodal values v (interleaved: node 0 x, node 0 y,
node 1 x, ...) the discrete functional is

    I(phi) = v^T K1 v + 1/2 v^T K2 v,

with (K1)_ij = int grad phi_j : grad phi_i and
(K2)_ij = int f grad phi_j : cof grad phi_i. Gradients are constant on each
triangle and f is constant on each triangle, so one-point quadrature is
exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .domain import DomainSpec
from .mesh import TriMesh

# cof(G) = J G J^T for 2x2 G
_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class AssemblyError(ValueError):
    pass


def cof(G) -> np.ndarray:
    """Cofactor of a 2x2 matrix: [[a, b], [c, d]] -> [[d, -c], [-b, a]]."""
    G = np.asarray(G, dtype=float)
    return np.array([[G[1, 1], -G[1, 0]], [-G[0, 1], G[0, 0]]])


@dataclass(frozen=True)
class ElementKernel:
    grads: np.ndarray   # (3, 2)
    area: float
    weight: float = 0.0


def element_gradients(v0, v1, v2, weight: float = 0.0) -> ElementKernel:
    """Gradients of the three P1 hat functions on one triangle."""
    p = np.array([v0, v1, v2], dtype=float)
    d1, d2 = p[1] - p[0], p[2] - p[0]
    if not d1[0] * d2[1] - d1[1] * d2[0] > 0:
        raise AssemblyError("degenerate or clockwise triangle")
    grads, areas = _p1_gradients(p[None])
    return ElementKernel(grads[0], float(areas[0]), float(weight))


def _p1_gradients(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched hat-function gradients; ``p`` has shape (n, 3, 2).

    grad_i = rot90(v_{i+2} - v_{i+1}) / (2 area) with rot90(x, y) = (-y, x)
    for counterclockwise vertex order.
    """
    e = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)   # v_{i+2} - v_{i+1}
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    return grads, area


def triangle_weights(mesh: TriMesh, domain: DomainSpec | None = None) -> np.ndarray:
    domain = mesh.domain if domain is None else domain
    w = np.asarray(domain.weights, dtype=float)
    if mesh.region_tag.min() < 0 or mesh.region_tag.max() >= len(w):
        raise AssemblyError("region tags do not match the domain's regions")
    return w[mesh.region_tag]


def field_gradients(mesh: TriMesh, field: np.ndarray) -> np.ndarray:
    """Per-triangle 2x2 gradient of a nodal vector field, rows = components."""
    field = np.asarray(field, dtype=float).reshape(mesh.n_nodes, 2)
    grads, _ = _p1_gradients(mesh.nodes[mesh.triangles])
    vals = field[mesh.triangles]                              # (n, 3, 2)
    return np.einsum("nka,nkb->nab", vals, grads)


def _compress(rows, cols, vals, n) -> sp.csr_matrix:
    """Sum duplicate triplets in (row, col) order and build a CSR matrix."""
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    key = rows * n + cols
    start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    summed = np.add.reduceat(vals, start) if len(vals) else vals
    r, c = rows[start], cols[start]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, r + 1, 1)
    return sp.csr_matrix((summed, c, np.cumsum(indptr)), shape=(n, n))


def assemble_full(mesh: TriMesh, weights: np.ndarray | None = None):
    """Unreduced K1 and K2 over all 2 * n_nodes DOFs.

    ``weights`` overrides the per-triangle weight (defaults to the domain's).
    """
    if weights is None:
        weights = triangle_weights(mesh)
    weights = np.asarray(weights, dtype=float)
    grads, area = _p1_gradients(mesh.nodes[mesh.triangles])

    # scalar stiffness area * g_a . g_b, shape (n, 3, 3)
    gg = area[:, None, None] * np.einsum("nai,nbi->nab", grads, grads)
    # cofactor pairing of e_beta (x) g_b against e_alpha (x) g_a:
    # J[beta, alpha] * (g_b . J g_a)
    cross = np.einsum("nbi,ij,naj->nab", grads, _J, grads)   # [a, b] -> g_b . J g_a
    wc = (weights * area)[:, None, None] * cross

    n_tri = len(mesh.triangles)
    eye = np.eye(2)
    # local 6x6 blocks indexed (a, alpha, b, beta)
    k1 = gg[:, :, None, :, None] * eye[None, None, :, None, :]
    k2 = wc[:, :, None, :, None] * _J.T[None, None, :, None, :]
    dofs = (2 * mesh.triangles[:, :, None] + np.arange(2)[None, None, :]).reshape(n_tri, 6)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    n = 2 * mesh.n_nodes
    K1 = _compress(rows, cols, k1.reshape(n_tri, 36).ravel(), n)
    K2 = _compress(rows, cols, k2.reshape(n_tri, 36).ravel(), n)
    return K1, K2


def free_dofs(mesh: TriMesh) -> np.ndarray:
    """Global indices of the unconstrained DOFs, ascending."""
    nodes = mesh.free_nodes
    return (2 * nodes[:, None] + np.arange(2)[None, :]).ravel()


@dataclass(frozen=True, eq=False)
class OperatorSet:
    K1: sp.csr_matrix
    K2: sp.csr_matrix
    A: sp.csr_matrix
    free_dofs: np.ndarray   # matrix index -> global DOF (2 * node + component)

    @property
    def n_free(self) -> int:
        return len(self.free_dofs)

    def A_at(self, scale: float) -> sp.csr_matrix:
        """K1 + scale/2 * K2; with K2 assembled at unit weight this is A(scale)."""
        return (self.K1 + (0.5 * scale) * self.K2).tocsr()

    def extend(self, v: np.ndarray, n_nodes: int) -> np.ndarray:
        """Zero-extend a reduced vector to a (n_nodes, 2) nodal field."""
        full = np.zeros(2 * n_nodes)
        full[self.free_dofs] = v
        return full.reshape(n_nodes, 2)

    def restrict(self, field: np.ndarray) -> np.ndarray:
        return np.asarray(field, dtype=float).ravel()[self.free_dofs]


def assemble(mesh: TriMesh, domain: DomainSpec | None = None) -> OperatorSet:
    """Reduced K1, K2 and A = K1 + K2/2 with Dirichlet DOFs eliminated."""
    domain = mesh.domain if domain is None else domain
    if len(domain.regions) != len(mesh.domain.regions):
        raise AssemblyError("domain does not match the mesh's regions")
    K1, K2 = assemble_full(mesh, triangle_weights(mesh, domain))
    free = free_dofs(mesh)
    if len(free) == 0:
        raise AssemblyError("no free degrees of freedom")
    K1 = K1[free][:, free].tocsr()
    K2 = K2[free][:, free].tocsr()
    return OperatorSet(K1, K2, (K1 + 0.5 * K2).tocsr(), free)


def functional_value(mesh: TriMesh, domain: DomainSpec | None, field) -> float:
    """Integral of |grad phi|^2 + f det grad phi, summed triangle by triangle."""
    domain = mesh.domain if domain is None else domain
    G = field_gradients(mesh, field)
    _, area = _p1_gradients(mesh.nodes[mesh.triangles])
    f = triangle_weights(mesh, domain)
    density = np.einsum("nab,nab->n", G, G) + f * np.linalg.det(G)
    return float(np.dot(area, density))
