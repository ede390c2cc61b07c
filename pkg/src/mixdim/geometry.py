"""Segment traversal of the tet mesh, traces of 3D basis functions, 1D quadrature."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._walk_py import DEAD_END, NO_START, line_coefficients
from .mesh import Mesh1D, MeshError, SegmentGeom, TetMesh3D

BARY_TOL = 1e-12
MERGE_TOL = 1e-12

_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)


class TraversalError(MeshError):
    pass


@dataclass(frozen=True, eq=False)
class TraceMap:
    """Piecewise description of one segment inside the mesh.

    Piece ``i`` covers ``[breaks[i], breaks[i+1]]`` inside tet ``tets[i]``;
    there the barycentric coordinate of vertex ``verts[i, j]`` is
    ``coef_a[i, j] + coef_b[i, j] * s``.
    """

    length: float
    breaks: np.ndarray
    tets: np.ndarray
    verts: np.ndarray
    coef_a: np.ndarray
    coef_b: np.ndarray

    @property
    def n_star(self) -> int:
        """Distinct crossing parameters, endpoints included."""
        return len(self.breaks)

    @property
    def n_pieces(self) -> int:
        return len(self.tets)

    def piece_of(self, s) -> np.ndarray:
        i = np.searchsorted(self.breaks, s, side="right") - 1
        return np.clip(i, 0, self.n_pieces - 1)

    def values(self, s, piece=None):
        """Vertex ids ``(q, 4)`` and barycentric values ``(q, 4)`` at arclengths ``s``."""
        s = np.asarray(s, dtype=float)
        if piece is None:
            piece = self.piece_of(s)
        return self.verts[piece], self.coef_a[piece] + self.coef_b[piece] * s[..., None]


def _start_candidates(mesh: TetMesh3D, p) -> np.ndarray:
    ptr, idx = mesh.node_star
    _, near = mesh.node_tree.query(p, k=min(4, mesh.n_nodes))
    near = np.atleast_1d(near)
    return np.unique(np.concatenate([idx[ptr[v]:ptr[v + 1]] for v in near]))


def traverse(mesh: TetMesh3D, seg: SegmentGeom, backend: str | None = None) -> TraceMap:
    """Walk ``seg`` through ``mesh`` and return its trace map."""
    for p in (seg.p0, seg.p1):
        if not mesh.contains(p):
            raise TraversalError(f"segment endpoint {p} lies outside the box")
    kern = kernels.get(backend)
    ptr, idx = mesh.node_star
    args = (mesh.nodes, mesh.tets, ptr, idx)
    length = seg.length
    merge = MERGE_TOL * length
    status, tets, breaks, last = kern.walk_segment(
        *args, _start_candidates(mesh, seg.p0), seg.p0, seg.p1, BARY_TOL, merge
    )
    if status == NO_START:
        status, tets, breaks, last = kern.walk_segment(
            *args, np.arange(mesh.n_tets), seg.p0, seg.p1, BARY_TOL, merge
        )
        if status == NO_START:
            raise TraversalError(f"no tet contains segment start {seg.p0}")
    if status == DEAD_END:
        raise TraversalError(
            f"traversal stuck after tet {last} at s={breaks[-1]:.6g} of {length:.6g}; mesh is not conforming"
        )
    # the kernel's own norm may differ from seg.length in the last ulp
    breaks[-1] = length
    a, b = line_coefficients(mesh.nodes, mesh.tets, tets, np.asarray(seg.p0, dtype=float), seg.tangent)
    return TraceMap(
        length=length,
        breaks=breaks,
        tets=tets,
        verts=mesh.tets[tets].copy(),
        coef_a=a,
        coef_b=b,
    )


def eval_trace(tm: TraceMap, k: int, s):
    """Value of the 3D basis function of node ``k`` at arclength ``s`` on the segment."""
    s_arr = np.asarray(s, dtype=float)
    tol = 1e-12 * tm.length
    if np.any(s_arr < -tol) or np.any(s_arr > tm.length + tol):
        raise ValueError(f"s outside [0, {tm.length}]")
    verts, vals = tm.values(s_arr)
    out = np.where(verts == k, vals, 0.0).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Quadrature1D:
    """Two-point Gauss rule on the merged breakpoints of one segment.

    For every quadrature point the containing trace piece, U-hat element,
    Psi element and Phi cell are precomputed.
    """

    breaks: np.ndarray
    s: np.ndarray
    w: np.ndarray
    piece: np.ndarray
    uhat_elem: np.ndarray
    psi_elem: np.ndarray
    phi_cell: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.w, values))


def _merge(points, tol):
    pts = np.sort(points)
    keep = np.concatenate([[True], np.diff(pts) > tol])
    return pts[keep]


def _element_of(nodes, s):
    return np.clip(np.searchsorted(nodes, s, side="right") - 1, 0, len(nodes) - 2)


def build_quadrature(tm: TraceMap, meshes: tuple[Mesh1D, Mesh1D, Mesh1D]) -> Quadrature1D:
    uhat, phi, psi = meshes
    S = tm.length
    merged = _merge(np.concatenate([tm.breaks, uhat.nodes, phi.nodes, psi.nodes]), 1e-12 * S)
    merged[0], merged[-1] = 0.0, S
    mid = 0.5 * (merged[:-1] + merged[1:])
    half = 0.5 * np.diff(merged)
    s = (mid[:, None] + half[:, None] * _GAUSS[None, :]).ravel()
    w = np.repeat(half, 2)
    mid2 = np.repeat(mid, 2)
    return Quadrature1D(
        breaks=merged,
        s=s,
        w=w,
        piece=tm.piece_of(mid2),
        uhat_elem=_element_of(uhat.nodes, mid2),
        psi_elem=_element_of(psi.nodes, mid2),
        phi_cell=_element_of(phi.nodes, mid2),
    )


def p1_values(mesh: Mesh1D, elem, s):
    """Local P1 shape values ``(q, 2)`` for nodes ``elem`` and ``elem + 1``."""
    x0 = mesh.nodes[elem]
    x1 = mesh.nodes[elem + 1]
    xi = (s - x0) / (x1 - x0)
    return np.column_stack([1.0 - xi, xi])
