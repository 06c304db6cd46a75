from collections import Counter

import numpy as np
import pytest

from meanhad.domain import BCRule, DIRICHLET_EXCEPT_RIGHT_EDGE, build_preset
from meanhad.mesh import (
    MeshError,
    classify_boundary,
    interpolate,
    locate,
    refine,
    snap_delta,
    triangulate,
)
from tests.conftest import preset


def _edge_counts(mesh):
    c = Counter()
    for t in mesh.triangles:
        for i in range(3):
            a, b = t[i], t[(i + 1) % 3]
            c[(min(a, b), max(a, b))] += 1
    return c


def test_canonical_level1_counts_by_enumeration():
    m = triangulate(build_preset("canonical", {"c": 4}), 1)
    assert m.cell_size == 0.25
    assert m.n_cells == (8, 4)
    assert m.n_triangles == 128
    # distinct coordinates: (8+1)(4+1) grid vertices plus 32 centres
    distinct = {tuple(p) for p in m.nodes.tolist()}
    assert len(distinct) == m.n_nodes == 9 * 5 + 32 == 77


def test_half_level1():
    assert triangulate(build_preset("half", {"M": 4}), 1).n_triangles == 64


@pytest.mark.parametrize("name", ["canonical", "half", "neumann", "neumann0"])
def test_triangles_quadruple(name):
    d = preset(name)
    counts = [triangulate(d, L).n_triangles for L in (1, 2, 3)]
    assert counts[1] == 4 * counts[0] and counts[2] == 4 * counts[1]


@pytest.mark.parametrize("level", [1, 2, 3])
def test_mesh_invariants(any_preset, level):
    m = triangulate(any_preset, level, fit_strips=True)
    areas = m.signed_areas()
    assert (areas > 0).all()
    assert areas.sum() == pytest.approx(any_preset.area, rel=1e-13)

    edges = _edge_counts(m)
    bnodes = set(m.boundary_nodes().tolist())
    for (a, b), n in edges.items():
        on_boundary = a in bnodes and b in bnodes and (
            m.nodes[a, 0] == m.nodes[b, 0] in (m.xs[0], m.xs[-1])
            or m.nodes[a, 1] == m.nodes[b, 1] in (m.ys[0], m.ys[-1]))
        assert n == (1 if on_boundary else 2)

    # boundary nodes sit exactly on the bounding rectangle
    x0, x1, y0, y1 = any_preset.bounds
    pb = m.nodes[m.boundary_nodes()]
    assert np.all((pb[:, 0] == x0) | (pb[:, 0] == x1) | (pb[:, 1] == y0) | (pb[:, 1] == y1))

    # jump-set alignment: every triangle lies weakly on one side of each interface
    p = m.nodes[m.triangles][..., 0]
    for xi in any_preset.interfaces():
        assert np.all((p <= xi + 1e-14).all(axis=1) | (p >= xi - 1e-14).all(axis=1))

    # centroid determines the tag
    cx = m.centroids()[:, 0]
    for tag, r in enumerate(any_preset.regions):
        sel = m.region_tag == tag
        assert ((cx[sel] > r.x_lo) & (cx[sel] < r.x_hi)).all()


def test_mirror_symmetry_of_nodes():
    m = triangulate(build_preset("canonical", {"c": 1}), 3)
    a = np.round(m.nodes, 14) + 0.0
    b = np.round(m.nodes * [-1.0, 1.0], 14) + 0.0
    assert {tuple(p) for p in a.tolist()} == {tuple(p) for p in b.tolist()}


def test_refine_matches_level_and_tags():
    d = build_preset("canonical", {"c": 4})
    coarse = triangulate(d, 1)
    fine = refine(coarse)
    assert fine.level == 2
    assert fine.n_triangles == 4 * coarse.n_triangles
    tri, _ = locate(coarse, fine.centroids())
    assert np.array_equal(coarse.region_tag[tri], fine.region_tag)


def test_refine_preserves_dirichlet_set():
    d = build_preset("neumann", {"c": -4, "delta": 1})
    coarse = triangulate(d, 2)
    fine = refine(coarse)
    key = lambda m, idx: {tuple(p) for p in m.nodes[idx].tolist()}
    coarse_pos = {tuple(p) for p in coarse.nodes.tolist()}
    fine_on_coarse = {p for p in key(fine, fine.dirichlet_nodes) if p in coarse_pos}
    assert fine_on_coarse == key(coarse, coarse.dirichlet_nodes)


def test_interpolation_reproduces_coarse_field(rng):
    d = build_preset("canonical", {"c": 4})
    coarse = triangulate(d, 2)
    fine = refine(coarse)
    vals = rng.standard_normal((coarse.n_nodes, 2))
    on_fine = interpolate(coarse, vals, fine.nodes)
    # back at the fine centroids both P1 fields agree (fine space contains coarse)
    pts = fine.centroids()
    np.testing.assert_allclose(interpolate(fine, on_fine, pts),
                               interpolate(coarse, vals, pts), atol=1e-13)


def test_half_free_edge_and_corners():
    m = triangulate(build_preset("half", {"M": 4}), 1)
    dset = set(m.dirichlet_nodes.tolist())
    for i, (x, y) in enumerate(m.nodes):
        if x == 0.0 and abs(y) < 0.5:
            assert i not in dset
        if x == 0.0 and abs(y) == 0.5:
            assert i in dset


def test_all_dirichlet_frees_interior_only():
    m = triangulate(build_preset("canonical", {"c": 4}), 2)
    assert np.array_equal(m.dirichlet_nodes, m.boundary_nodes())
    x0, x1, y0, y1 = -1, 1, -0.5, 0.5
    p = m.nodes[m.free_nodes]
    assert ((p[:, 0] > x0) & (p[:, 0] < x1) & (p[:, 1] > y0) & (p[:, 1] < y1)).all()


def test_neumann_clamps_nonpositive_part():
    m = triangulate(build_preset("neumann", {"c": -4, "delta": 1}), 1)
    dset = set(m.dirichlet_nodes.tolist())
    for i in m.boundary_nodes():
        x = m.nodes[i, 0]
        assert (i in dset) == (x <= 0.0)


def test_rule_override():
    m = triangulate(build_preset("canonical", {"c": 4}), 1)
    free_right = classify_boundary(m, BCRule(DIRICHLET_EXCEPT_RIGHT_EDGE))
    assert len(free_right) == len(m.boundary_nodes()) - 3


def test_offgrid_strip_rejected_with_snapped_width():
    d = build_preset("thin", {"k": 3})
    with pytest.raises(MeshError, match="nearest representable width is 0.25"):
        triangulate(d, 1)
    m = triangulate(d, 1, fit_strips=True)
    assert m.xs[-1] == d.bounds[1]
    assert np.diff(m.xs).max() <= m.cell_size * (1 + 1e-12)


def test_snap_delta():
    assert snap_delta(0.01, 4) == 1 / 32
    assert snap_delta(0.05, 4) == 2 / 32
    assert snap_delta(0.5, 1) == 0.5


def test_bad_level():
    with pytest.raises(MeshError):
        triangulate(build_preset("half", {"M": 1}), 0)
