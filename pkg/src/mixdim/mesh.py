"""Tetrahedral box meshes, segment geometry and the 1D meshes on each segment."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

FACE_TAGS = ("x-", "x+", "y-", "y+", "z-", "z+")

# local faces of a positively oriented tet, each listed so its normal points outward
_LOCAL_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])


class MeshError(ValueError):
    """Raised for malformed meshes or segment sets."""


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


def signed_volumes(nodes, tets):
    p = nodes[tets]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    e3 = p[:, 3] - p[:, 0]
    return np.einsum("ij,ij->i", e1, np.cross(e2, e3)) / 6.0


@dataclass(frozen=True, eq=False)
class TetMesh3D:
    """P1 tetrahedral mesh of an axis-aligned box.

    ``boundary_faces`` are outward-oriented triangles, ``face_tags`` index into
    :data:`FACE_TAGS` and ``face_owner`` is the single tet each face belongs to.
    """

    nodes: np.ndarray
    tets: np.ndarray
    boundary_faces: np.ndarray
    face_tags: np.ndarray
    face_owner: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray
    h: float

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    @property
    def box_edges(self) -> np.ndarray:
        return self.box_hi - self.box_lo

    def volumes(self) -> np.ndarray:
        return signed_volumes(self.nodes, self.tets)

    def diameters(self) -> np.ndarray:
        p = self.nodes[self.tets]
        d = np.zeros(len(self.tets))
        for i in range(4):
            for j in range(i + 1, 4):
                d = np.maximum(d, np.linalg.norm(p[:, i] - p[:, j], axis=1))
        return d

    def faces_with_tag(self, tag: str) -> np.ndarray:
        return np.flatnonzero(self.face_tags == FACE_TAGS.index(tag))

    def nodes_with_tag(self, tag: str) -> np.ndarray:
        return np.unique(self.boundary_faces[self.faces_with_tag(tag)])

    @cached_property
    def node_star(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR map node -> incident tets (``ptr``, ``idx``), tets sorted ascending."""
        flat = self.tets.ravel()
        order = np.argsort(flat, kind="stable")
        idx = (order // 4).astype(np.int64)
        counts = np.bincount(flat, minlength=self.n_nodes)
        ptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return _frozen(ptr, np.int64), _frozen(idx, np.int64)

    @cached_property
    def node_tree(self):
        from scipy.spatial import cKDTree

        return cKDTree(self.nodes)

    def contains(self, point, tol: float = 1e-12) -> bool:
        p = np.asarray(point, dtype=float)
        scale = max(1.0, float(np.max(np.abs(self.box_edges))))
        return bool(np.all(p >= self.box_lo - tol * scale) and np.all(p <= self.box_hi + tol * scale))


def _boundary(nodes, tets, box_lo, box_hi):
    """Derive boundary faces, their owners and box-face tags from connectivity."""
    faces = tets[:, _LOCAL_FACES].reshape(-1, 3)
    owner = np.repeat(np.arange(len(tets), dtype=np.int64), 4)
    key_sorted = np.sort(faces, axis=1).astype(np.int64)
    n = np.int64(len(nodes))
    keys = (key_sorted[:, 0] * n + key_sorted[:, 1]) * n + key_sorted[:, 2]
    uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    if np.any(counts > 2):
        bad = uniq[counts > 2][0]
        raise MeshError(
            f"non-manifold mesh: face ({bad // (n * n)}, {bad // n % n}, {bad % n}) "
            f"is shared by more than two tets"
        )
    on_boundary = counts[inverse] == 1
    bfaces = faces[on_boundary]
    bowner = owner[on_boundary]

    scale = max(1.0, float(np.max(np.abs(box_hi - box_lo))))
    tol = 1e-12 * scale
    pts = nodes[bfaces]
    tags = np.full(len(bfaces), -1, dtype=np.int8)
    for axis in range(3):
        for side, plane in enumerate((box_lo[axis], box_hi[axis])):
            hit = np.all(np.abs(pts[:, :, axis] - plane) <= tol, axis=1)
            tags[hit] = 2 * axis + side
    if np.any(tags < 0):
        f = int(np.flatnonzero(tags < 0)[0])
        raise MeshError(f"boundary face {bfaces[f].tolist()} does not lie on a face of the box")
    return bfaces, tags, bowner


def _finish_mesh(nodes, tets, box_lo=None, box_hi=None) -> TetMesh3D:
    nodes = np.asarray(nodes, dtype=np.float64)
    tets = np.asarray(tets, dtype=np.int64)
    if box_lo is None:
        box_lo, box_hi = nodes.min(axis=0), nodes.max(axis=0)
    bfaces, tags, bowner = _boundary(nodes, tets, np.asarray(box_lo), np.asarray(box_hi))
    mesh = TetMesh3D(
        nodes=_frozen(nodes, np.float64),
        tets=_frozen(tets, np.int64),
        boundary_faces=_frozen(bfaces, np.int64),
        face_tags=_frozen(tags, np.int8),
        face_owner=_frozen(bowner, np.int64),
        box_lo=_frozen(box_lo, np.float64),
        box_hi=_frozen(box_hi, np.float64),
        h=0.0,
    )
    object.__setattr__(mesh, "h", float(mesh.diameters().max()))
    return mesh


def _cells_per_axis(edge: float, h_target: float) -> int:
    # cube diagonal of a cell is its largest tet diameter, so each cell edge <= h/sqrt(3)
    return max(1, math.ceil(edge / (h_target / math.sqrt(3.0)) - 1e-9))


def build_box_mesh(box, h_target: float) -> TetMesh3D:
    """Structured Kuhn mesh of ``box = (lo, hi)`` with 6 tets per cell.

    The number of cells per axis is the smallest one giving a maximum tet
    diameter <= ``h_target``.
    """
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    edges = hi - lo
    if lo.shape != (3,) or hi.shape != (3,):
        raise MeshError("box must be a pair of 3D points")
    if np.any(edges <= 0.0):
        raise MeshError(f"degenerate box: edges {edges.tolist()}")
    if not h_target > 0.0:
        raise MeshError("h_target must be positive")

    n = [_cells_per_axis(e, h_target) for e in edges]
    axes = [np.linspace(lo[d], hi[d], n[d] + 1) for d in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    i, j, k = (a.ravel() for a in np.meshgrid(*(np.arange(m) for m in n), indexing="ij"))

    def vid(di, dj, dk):
        return ((i + di) * (n[1] + 1) + (j + dj)) * (n[2] + 1) + (k + dk)

    blocks = []
    # each tet follows a monotone path 000 -> 111 through the cell corners
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        corner = [0, 0, 0]
        verts = [vid(0, 0, 0)]
        for ax in perm:
            corner[ax] = 1
            verts.append(vid(*corner))
        blocks.append(np.column_stack(verts))
    # interleave so the 6 tets of a cell are contiguous
    tets = np.stack(blocks, axis=1).reshape(-1, 4)
    neg = signed_volumes(nodes, tets) < 0
    tets[neg] = tets[neg][:, [0, 1, 3, 2]]
    return _finish_mesh(nodes, tets, lo, hi)


def _data_lines(text: str):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def import_mesh(path) -> TetMesh3D:
    """Read the plain ``nodes``/``tets`` text format."""
    path = Path(path)
    lines = _data_lines(path.read_text())
    try:
        head, count = next(lines).split()
        if head != "nodes":
            raise MeshError(f"{path}: expected 'nodes <N>' header")
        nodes = np.array([[float(v) for v in next(lines).split()] for _ in range(int(count))])
        head, count = next(lines).split()
        if head != "tets":
            raise MeshError(f"{path}: expected 'tets <T>' header")
        tets = np.array([[int(v) for v in next(lines).split()] for _ in range(int(count))], dtype=np.int64)
    except StopIteration:
        raise MeshError(f"{path}: truncated mesh file") from None
    except ValueError as exc:
        raise MeshError(f"{path}: {exc}") from None
    if nodes.ndim != 2 or nodes.shape[1] != 3 or tets.ndim != 2 or tets.shape[1] != 4:
        raise MeshError(f"{path}: bad record width")
    if tets.min() < 0 or tets.max() >= len(nodes):
        raise MeshError(f"{path}: tet index out of range")
    vols = signed_volumes(nodes, tets)
    scale = np.abs(vols).max()
    bad = np.flatnonzero(vols <= 1e-14 * scale)
    if len(bad):
        raise MeshError(f"{path}: tet {int(bad[0])} is inverted or degenerate (volume {vols[bad[0]]:.3e})")
    return _finish_mesh(nodes, tets)


def export_mesh(mesh: TetMesh3D, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"nodes {mesh.n_nodes}\n")
        for x, y, z in mesh.nodes.tolist():
            fh.write(f"{x!r} {y!r} {z!r}\n")
        fh.write(f"tets {mesh.n_tets}\n")
        for t in mesh.tets:
            fh.write(f"{t[0]} {t[1]} {t[2]} {t[3]}\n")


@dataclass(frozen=True)
class SegmentGeom:
    """Straight inclusion centreline with its radius and conductivity.

    ``bc`` holds the endpoint conditions at s=0 and s=S: ``None`` is a
    homogeneous Neumann condition, a float is a Dirichlet value.
    """

    p0: tuple[float, float, float]
    p1: tuple[float, float, float]
    radius: float
    ktilde: float
    bc: tuple[float | None, float | None] = (None, None)

    def __post_init__(self):
        object.__setattr__(self, "p0", tuple(float(v) for v in self.p0))
        object.__setattr__(self, "p1", tuple(float(v) for v in self.p1))
        if not self.length > 0.0:
            raise MeshError("segment has zero length")
        if not self.radius > 0.0:
            raise MeshError("segment radius must be positive")
        if not self.ktilde > 0.0:
            raise MeshError("segment conductivity must be positive")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.p1, self.p0)))

    @property
    def tangent(self) -> np.ndarray:
        d = np.subtract(self.p1, self.p0)
        return d / np.linalg.norm(d)

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return np.asarray(self.p0) + s[..., None] * self.tangent


def check_segments(segments, mesh: TetMesh3D) -> None:
    """Reject segments leaving the box; warn about radii that are not thin."""
    min_edge = float(mesh.box_edges.min())
    for i, seg in enumerate(segments):
        for p in (seg.p0, seg.p1):
            if not mesh.contains(p):
                raise MeshError(f"segment {i}: endpoint {p} lies outside the box")
        if seg.radius > 0.1 * min_edge:
            warnings.warn(f"segment {i}: radius {seg.radius} is not small against the box", stacklevel=2)


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Uniform 1D mesh on a segment; ``kind`` is ``"P1"`` (nodal) or ``"P0"`` (cellwise)."""

    owner: int
    nodes: np.ndarray = field(repr=False)
    kind: str

    @property
    def n_dofs(self) -> int:
        return len(self.nodes) if self.kind == "P1" else len(self.nodes) - 1

    @property
    def n_cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def spacing(self) -> float:
        return float(self.nodes[1] - self.nodes[0])


def _uniform(length: float, n_nodes: int) -> np.ndarray:
    s = np.linspace(0.0, length, n_nodes)
    s[-1] = length
    return _frozen(s, np.float64)


def build_segment_meshes(seg: SegmentGeom, n_star: int, ratio: float = 0.5, owner: int = 0):
    """Return the (U-hat, Phi, Psi) meshes for one segment.

    U-hat gets ``n_star`` nodes, Psi ``round(ratio * n_star)`` nodes (at least 2),
    and Phi is piecewise constant on the Psi nodes.
    """
    if n_star < 3:
        warnings.warn(f"segment {owner}: n_star={n_star} raised to 3", stacklevel=2)
        n_star = 3
    n_psi = max(2, int(math.floor(ratio * n_star + 0.5)))
    S = seg.length
    uhat = Mesh1D(owner, _uniform(S, n_star), "P1")
    psi_nodes = _uniform(S, n_psi)
    phi = Mesh1D(owner, psi_nodes, "P0")
    psi = Mesh1D(owner, psi_nodes, "P1")
    return uhat, phi, psi
