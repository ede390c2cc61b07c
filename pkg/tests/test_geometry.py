import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BOX, UNIT, kuhn_h
from oracles import p1_basis_at, sampled_crossings
from mixdim import kernels
from mixdim.geometry import TraversalError, build_quadrature, eval_trace, traverse
from mixdim.mesh import SegmentGeom, build_box_mesh, build_segment_meshes


def seg(p0, p1):
    return SegmentGeom(p0, p1, 1e-2, 1e2)


@pytest.fixture(scope="module")
def cube3():
    return build_box_mesh(BOX, kuhn_h(3))


def random_pairs(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        cells = int(rng.integers(2, 5))
        p = rng.uniform(-0.95, 0.95, size=(2, 3))
        out.append((cells, tuple(p[0]), tuple(p[1])))
    return out


def test_single_cube_main_diagonal():
    m = build_box_mesh(UNIT, np.sqrt(3.0))
    s = seg((0.1, 0.1, 0.1), (0.9, 0.9, 0.9))
    tm = traverse(m, s)
    n_star, breaks, runs = sampled_crossings(m, s.p0, s.p1)
    # the diagonal is the edge shared by all six tets: one containing set throughout
    assert len(runs) == 1 and len(runs[0]) == 6
    assert tm.n_star == n_star == 2
    assert tm.tets[0] in runs[0]


def test_segment_inside_one_tet():
    m = build_box_mesh(UNIT, np.sqrt(3.0))
    # points close to vertex 0 of tet 0, inside it
    v = m.nodes[m.tets[0]]
    a = 0.7 * v[0] + 0.1 * v[1] + 0.1 * v[2] + 0.1 * v[3]
    b = 0.6 * v[0] + 0.15 * v[1] + 0.1 * v[2] + 0.15 * v[3]
    tm = traverse(m, seg(a, b))
    assert tm.n_pieces == 1 and tm.n_star == 2
    assert tm.tets[0] == 0


def test_z_axis_n20():
    m = build_box_mesh(BOX, kuhn_h(20))
    s = seg((0, 0, -0.8), (0, 0, 0.8))
    tm = traverse(m, s)
    n_star, breaks, _ = sampled_crossings(m, s.p0, s.p1)
    # the line x=y=0 runs along cell edges: only the 15 interior z-planes plus both ends
    assert n_star == 17
    assert tm.n_star == n_star
    np.testing.assert_allclose(tm.breaks, breaks, atol=1.6 / 1e4)


@pytest.mark.parametrize("k", range(24))
def test_random_pairs_match_sampling_oracle(k):
    cells, p0, p1 = random_pairs(24, seed=2024)[k]
    m = build_box_mesh(BOX, kuhn_h(cells))
    s = seg(p0, p1)
    tm = traverse(m, s)
    n_star, breaks, runs = sampled_crossings(m, s.p0, s.p1)
    assert all(len(r) == 1 for r in runs)
    assert tm.n_star == n_star
    assert [next(iter(r)) for r in runs] == tm.tets.tolist()
    np.testing.assert_allclose(tm.breaks, breaks, atol=s.length / 1e4)


def check_trace_invariants(mesh, tm, s):
    S = s.length
    assert tm.breaks[0] == 0.0 and tm.breaks[-1] == S
    assert np.all(np.diff(tm.breaks) > 0)
    assert abs(np.diff(tm.breaks).sum() - S) <= 1e-10 * S
    for i in range(tm.n_pieces):
        for sv in tm.breaks[i:i + 2]:
            lam = tm.coef_a[i] + tm.coef_b[i] * sv
            assert lam.min() >= -1e-10 and lam.max() <= 1 + 1e-10
            np.testing.assert_allclose(lam.sum(), 1.0, atol=1e-12)
    # left and right tets describe the same point at interior breakpoints
    for i in range(1, tm.n_pieces):
        sv = tm.breaks[i]
        xl = (tm.coef_a[i - 1] + tm.coef_b[i - 1] * sv) @ mesh.nodes[tm.verts[i - 1]]
        xr = (tm.coef_a[i] + tm.coef_b[i] * sv) @ mesh.nodes[tm.verts[i]]
        np.testing.assert_allclose(xl, xr, atol=1e-10)
        np.testing.assert_allclose(xl, s.point(sv), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.tuples(*[st.floats(-1.0, 1.0)] * 6).filter(lambda v: np.linalg.norm(np.subtract(v[:3], v[3:])) > 1e-2))
def test_trace_invariants_property(cube3, coords):
    s = seg(coords[:3], coords[3:])
    tm = traverse(cube3, s)
    check_trace_invariants(cube3, tm, s)


def test_trace_continuity_all_basis(cube3):
    s = seg((-0.9, -0.2, -0.7), (0.8, 0.6, 0.9))
    tm = traverse(cube3, s)
    check_trace_invariants(cube3, tm, s)
    eps = 1e-13 * s.length
    for b in tm.breaks[1:-1]:
        for k in np.unique(tm.verts):
            left = eval_trace(tm, k, b - eps)
            right = eval_trace(tm, k, b + eps)
            assert abs(left - right) <= 1e-10


def test_eval_trace_support_and_unity(cube3):
    s = seg((-0.9, -0.2, -0.7), (0.8, 0.6, 0.9))
    tm = traverse(cube3, s)
    rng = np.random.default_rng(1)
    sv = rng.uniform(0, s.length, 100)
    far = np.setdiff1d(np.arange(cube3.n_nodes), tm.verts.ravel())
    assert len(far) > 0
    for k in far[:10]:
        assert np.all(eval_trace(tm, k, sv) == 0.0)
    total = sum(eval_trace(tm, k, sv) for k in np.unique(tm.verts))
    np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_eval_trace_matches_point_location(cube3):
    s = seg((0.31, -0.77, -0.9), (-0.4, 0.85, 0.66))
    tm = traverse(cube3, s)
    sv = np.random.default_rng(3).uniform(0, s.length, 50)
    ref = p1_basis_at(cube3, s.point(sv))
    for k in np.unique(tm.verts):
        np.testing.assert_allclose(eval_trace(tm, k, sv), ref[:, k], atol=1e-12)


def test_eval_trace_out_of_range(cube3):
    s = seg((0, 0, 0), (0.5, 0.5, 0.5))
    tm = traverse(cube3, s)
    with pytest.raises(ValueError):
        eval_trace(tm, 0, -0.01)
    with pytest.raises(ValueError):
        eval_trace(tm, 0, s.length * 1.01)


def test_endpoint_outside_box(cube3):
    with pytest.raises(TraversalError, match="outside"):
        traverse(cube3, seg((0, 0, 0), (0, 0, 1.2)))


def test_dead_end_names_last_tet():
    m = build_box_mesh(BOX, kuhn_h(3))
    s = seg((-0.9, -0.9, -0.9), (0.9, 0.85, 0.8))
    tm = traverse(m, s)
    # drop one traversed tet from every node star to simulate a hole in the mesh
    hole = int(tm.tets[len(tm.tets) // 2])
    ptr, idx = m.node_star
    keep = idx != hole
    new_idx = idx[keep]
    new_ptr = np.concatenate([[0], np.cumsum([keep[ptr[v]:ptr[v + 1]].sum() for v in range(m.n_nodes)])])
    m.__dict__["node_star"] = (new_ptr, new_idx)
    with pytest.raises(TraversalError, match="after tet"):
        traverse(m, s)


@pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")
@settings(max_examples=80, deadline=None)
@given(st.tuples(*[st.floats(-1.0, 1.0)] * 6).filter(lambda v: np.linalg.norm(np.subtract(v[:3], v[3:])) > 1e-3))
def test_backend_parity(cube3, coords):
    s = seg(coords[:3], coords[3:])
    a = traverse(cube3, s, backend="compiled")
    b = traverse(cube3, s, backend="python")
    np.testing.assert_array_equal(a.tets, b.tets)
    np.testing.assert_array_equal(a.breaks, b.breaks)


@pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")
def test_backend_parity_degenerate():
    m = build_box_mesh(BOX, kuhn_h(20))
    for p0, p1 in [((0, 0, -0.8), (0, 0, 0.8)), ((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5)), ((-1, 0.3, 0.1), (1, 0.3, 0.1))]:
        a = traverse(m, seg(p0, p1), backend="compiled")
        b = traverse(m, seg(p0, p1), backend="python")
        np.testing.assert_array_equal(a.tets, b.tets)
        np.testing.assert_array_equal(a.breaks, b.breaks)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get("fortran")


@pytest.fixture(scope="module")
def quad_case(cube3):
    s = seg((-0.83, 0.12, -0.6), (0.7, -0.35, 0.88))
    tm = traverse(cube3, s)
    meshes = build_segment_meshes(s, tm.n_star)
    return s, tm, meshes, build_quadrature(tm, meshes)


def test_quadrature_constant_and_monomials(quad_case):
    s, _, _, q = quad_case
    S = s.length
    assert abs(q.integrate(np.ones_like(q.s)) - S) <= 1e-13
    assert abs(q.integrate(q.s**2) - S**3 / 3) <= 1e-12
    assert q.integrate(q.s**3) == pytest.approx(S**4 / 4, rel=1e-13)


def test_quadrature_breaks_merge_everything(quad_case):
    s, tm, meshes, q = quad_case
    for pts in [tm.breaks] + [m.nodes for m in meshes]:
        d = np.abs(q.breaks[None, :] - pts[:, None]).min(axis=1)
        assert d.max() <= 1e-12 * s.length
    # each merged interval sits inside one piece and one element of each mesh
    mids = 0.5 * (q.breaks[1:] + q.breaks[:-1])
    for pts in [tm.breaks] + [m.nodes for m in meshes]:
        inner = pts[(pts > 1e-12) & (pts < s.length * (1 - 1e-12))]
        for b in inner:
            assert not np.any((q.breaks[:-1] < b - 1e-12) & (q.breaks[1:] > b + 1e-12))
    assert len(mids) == len(q.breaks) - 1
