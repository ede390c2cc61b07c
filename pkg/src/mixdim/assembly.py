"""Assembly of the bulk, segment and coupling blocks of the constrained problem.

Sign convention of the constraints (``W = (U, Uhat)``)::

    A U    - B Phi    - C^a Psi    = f
    Ahat Uhat + Bhat Phi - Chat^a Psi = g

i.e. ``calA W = calB Phi + calC^a Psi + calF`` with ``calB = [B; -Bhat]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import Quadrature1D, TraceMap, build_quadrature, p1_values, traverse
from .linalg import finalize
from .mesh import FACE_TAGS, Mesh1D, SegmentGeom, TetMesh3D, build_segment_meshes, check_segments

# 4-point tet rule, exact for quadratics
_TET_A = 0.5854101966249685
_TET_B = 0.1381966011250105
_TET_POINTS = np.full((4, 4), _TET_B) + np.eye(4) * (_TET_A - _TET_B)


class AssemblyError(ValueError):
    pass


def p1_gradients(nodes, tets):
    """Barycentric gradients ``(T, 4, 3)`` and volumes ``(T,)`` of positively oriented tets."""
    p = nodes[tets]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    e3 = p[:, 3] - p[:, 0]
    c23 = np.cross(e2, e3)
    det = np.einsum("ij,ij->i", e1, c23)
    g = np.empty((len(tets), 4, 3))
    g[:, 1] = c23 / det[:, None]
    g[:, 2] = np.cross(e3, e1) / det[:, None]
    g[:, 3] = np.cross(e1, e2) / det[:, None]
    g[:, 0] = -(g[:, 1] + g[:, 2] + g[:, 3])
    return g, det / 6.0


def _conductivity(K, tets_slice, n_tets):
    """Per-tet diagonal conductivity ``(t, 3)`` for a scalar, diagonal or per-tet ``K``."""
    K = np.asarray(K, dtype=float)
    if K.ndim == 0:
        return np.full((len(range(*tets_slice.indices(n_tets))), 3), float(K))
    if K.shape == (3,):
        return np.broadcast_to(K, (len(range(*tets_slice.indices(n_tets))), 3))
    if K.shape == (n_tets,):
        return np.repeat(K[tets_slice, None], 3, axis=1)
    if K.shape == (n_tets, 3):
        return K[tets_slice]
    raise AssemblyError(f"conductivity of shape {K.shape} not understood")


def stiffness_matrix(mesh: TetMesh3D, K=1.0, chunk: int = 250_000) -> sp.csr_matrix:
    """P1 stiffness ``(K grad phi_k, grad phi_l)`` over the whole mesh."""
    n = mesh.n_nodes
    out = sp.csr_matrix((n, n))
    for start in range(0, mesh.n_tets, chunk):
        sl = slice(start, min(start + chunk, mesh.n_tets))
        tets = mesh.tets[sl]
        g, vol = p1_gradients(mesh.nodes, tets)
        kd = _conductivity(K, sl, mesh.n_tets)
        ke = np.einsum("tid,td,tjd->tij", g, kd, g) * vol[:, None, None]
        rows = np.repeat(tets, 4, axis=1).ravel()
        cols = np.tile(tets, (1, 4)).ravel()
        out = out + sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    return finalize(out)


def load_vector(mesh: TetMesh3D, source: Callable | None, chunk: int = 250_000) -> np.ndarray:
    """``f_k = (f, phi_k)`` with the 4-point tet rule; ``source`` maps ``(q, 3)`` points to values."""
    f = np.zeros(mesh.n_nodes)
    if source is None:
        return f
    for start in range(0, mesh.n_tets, chunk):
        tets = mesh.tets[start:start + chunk]
        _, vol = p1_gradients(mesh.nodes, tets)
        p = mesh.nodes[tets]
        for lam in _TET_POINTS:
            x = np.einsum("j,tjd->td", lam, p)
            val = np.broadcast_to(np.asarray(source(x), dtype=float), (len(tets),)) * vol / 4.0
            np.add.at(f, tets, val[:, None] * lam[None, :])
    return f


def reference_stiffness() -> np.ndarray:
    """Stiffness of the unit reference tet (0,e1,e2,e3) with K=1, for checks."""
    nodes = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    g, vol = p1_gradients(nodes, np.array([[0, 1, 2, 3]]))
    return (g[0] @ g[0].T) * vol[0]


@dataclass(frozen=True, eq=False)
class SegmentData:
    """Everything the assembly needs about one segment."""

    seg: SegmentGeom
    trace: TraceMap
    uhat: Mesh1D
    phi: Mesh1D
    psi: Mesh1D
    quad: Quadrature1D


def prepare_segments(mesh: TetMesh3D, segments: Sequence[SegmentGeom], ratio: float = 0.5,
                     backend: str | None = None) -> list[SegmentData]:
    """Traverse each segment, size its 1D meshes from the crossing count, build its quadrature."""
    check_segments(segments, mesh)
    out = []
    for i, seg in enumerate(segments):
        tm = traverse(mesh, seg, backend=backend)
        uhat, phi, psi = build_segment_meshes(seg, tm.n_star, ratio, owner=i)
        quad = build_quadrature(tm, (uhat, phi, psi))
        out.append(SegmentData(seg, tm, uhat, phi, psi, quad))
    return out


def _coo(rows, cols, data, shape):
    return sp.csr_matrix((np.ravel(data), (np.ravel(rows), np.ravel(cols))), shape=shape)


def _pairs(ra, ca, va, vb):
    """Row/col/value triplets of all products ``va[:, i] * vb[:, j]``."""
    na, nb = va.shape[1], vb.shape[1]
    rows = np.repeat(ra, nb, axis=1)
    cols = np.tile(ca, (1, na))
    vals = (va[:, :, None] * vb[:, None, :]).reshape(len(va), na * nb)
    return rows, cols, vals


@dataclass
class SegmentIntegrals:
    """Unscaled integrals of one segment: 3D rows use global node ids, 1D rows are local."""

    line_mass: sp.csr_matrix   # (phi_k, phi_l) over the segment, N x N
    B: sp.csr_matrix           # (|Gamma| phi_k, theta_l), N x Nphi_i
    C: sp.csr_matrix           # (phi_k, eta_l), N x Npsi_i
    Bhat: sp.csr_matrix        # (|Gamma| phihat_k, theta_l)
    Chat: sp.csr_matrix        # (phihat_k, eta_l)
    Ghat: sp.csr_matrix        # (phihat_k, phihat_l)
    Gpsi: sp.csr_matrix        # (eta_k, eta_l)
    stiff1d: sp.csr_matrix     # (d phihat_k/ds, d phihat_l/ds)


def segment_integrals(sd: SegmentData, n_nodes: int) -> SegmentIntegrals:
    q = sd.quad
    w = q.w
    verts, vals3 = sd.trace.values(q.s, q.piece)
    nu = p1_values(sd.uhat, q.uhat_elem, q.s)
    npsi = p1_values(sd.psi, q.psi_elem, q.s)
    u_ids = np.column_stack([q.uhat_elem, q.uhat_elem + 1])
    p_ids = np.column_stack([q.psi_elem, q.psi_elem + 1])
    c_ids = q.phi_cell[:, None]
    one = np.ones((len(w), 1))
    nh, nphi, npsi_n = sd.uhat.n_dofs, sd.phi.n_dofs, sd.psi.n_dofs
    perim = sd.seg.perimeter

    def block(ra, ca, va, vb, shape, scale=1.0):
        r, c, v = _pairs(ra, ca, va, vb)
        return _coo(r, c, v * (scale * w)[:, None], shape)

    h = np.diff(sd.uhat.nodes)
    e = np.arange(len(h))
    k_loc = (np.array([1.0, -1.0, -1.0, 1.0])[None, :] / h[:, None]).ravel()
    stiff = _coo(np.column_stack([e, e, e + 1, e + 1]), np.column_stack([e, e + 1, e, e + 1]), k_loc, (nh, nh))

    return SegmentIntegrals(
        line_mass=block(verts, verts, vals3, vals3, (n_nodes, n_nodes)),
        B=block(verts, c_ids, vals3, one, (n_nodes, nphi), perim),
        C=block(verts, p_ids, vals3, npsi, (n_nodes, npsi_n)),
        Bhat=block(u_ids, c_ids, nu, one, (nh, nphi), perim),
        Chat=block(u_ids, p_ids, nu, npsi, (nh, npsi_n)),
        Ghat=block(u_ids, u_ids, nu, nu, (nh, nh)),
        Gpsi=block(p_ids, p_ids, npsi, npsi, (npsi_n, npsi_n)),
        stiff1d=finalize(stiff),
    )


def assemble_A(mesh: TetMesh3D, segdata: Sequence[SegmentData], K=1.0, alpha: float = 1.0,
               integrals: Sequence[SegmentIntegrals] | None = None) -> sp.csr_matrix:
    """Bulk stiffness plus ``alpha * sum_i |Gamma_i| (phi_k, phi_l)_Lambda_i`` (before boundary conditions)."""
    if integrals is None:
        integrals = [segment_integrals(sd, mesh.n_nodes) for sd in segdata]
    A = stiffness_matrix(mesh, K)
    for sd, si in zip(segdata, integrals):
        A = A + (alpha * sd.seg.perimeter) * si.line_mass
    return finalize(A)


def find_junctions(segments: Sequence[SegmentGeom], tol: float) -> list[list[tuple[int, int]]]:
    """Groups of coincident endpoints as lists of ``(segment, end)`` with end 0 or 1."""
    from scipy.spatial import cKDTree

    pts = np.array([p for s in segments for p in (s.p0, s.p1)], dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return []
    parent = list(range(len(pts)))

    def root(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in sorted(cKDTree(pts).query_pairs(tol)):
        ra, rb = root(a), root(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for k in range(len(pts)):
        groups.setdefault(root(k), []).append(k)
    return [[(k // 2, k % 2) for k in sorted(g)] for _, g in sorted(groups.items()) if len(g) > 1]


def assemble_Ahat(segdata: Sequence[SegmentData], alpha_hat: float = 1.0, tol: float = 1e-9,
                  integrals: Sequence[SegmentIntegrals] | None = None):
    """Per-segment 1D operators and the junction constraint rows ``Q``.

    Returns ``(blocks, Q)``; blocks are ``Ktilde |Sigma| stiffness + alpha_hat |Gamma| mass``
    before endpoint Dirichlet elimination. ``tol`` is the absolute distance below
    which endpoints are considered the same junction.
    """
    if integrals is None:
        integrals = [segment_integrals(sd, int(sd.trace.verts.max()) + 1) for sd in segdata]
    blocks = []
    for sd, si in zip(segdata, integrals):
        seg = sd.seg
        blocks.append(finalize(seg.ktilde * seg.area * si.stiff1d + alpha_hat * seg.perimeter * si.Ghat))
    offsets = np.concatenate([[0], np.cumsum([b.shape[0] for b in blocks])]).astype(int)
    rows, cols, vals = [], [], []
    r = 0
    for group in find_junctions([sd.seg for sd in segdata], tol):
        for (si_a, end_a), (si_b, end_b) in zip(group[:-1], group[1:]):
            for si, end in ((si_a, end_a), (si_b, end_b)):
                if segdata[si].seg.bc[end] is not None:
                    raise AssemblyError(
                        f"segment {si} endpoint {end} is both Dirichlet-constrained and joined to another segment"
                    )
            ia = offsets[si_a] + (0 if end_a == 0 else blocks[si_a].shape[0] - 1)
            ib = offsets[si_b] + (0 if end_b == 0 else blocks[si_b].shape[0] - 1)
            rows += [r, r]
            cols += [ia, ib]
            vals += [1.0, -1.0]
            r += 1
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(r, int(offsets[-1])))
    return blocks, Q


def _source_for(g_source, i):
    if g_source is None:
        return None
    if callable(g_source):
        return g_source
    return g_source[i]


def assemble_rhs(mesh: TetMesh3D, segdata: Sequence[SegmentData], f_source=None, g_source=None):
    """Bulk load ``f`` and per-segment loads ``g_i = (|Sigma| gbar, phihat_k)`` (no lifting)."""
    f = load_vector(mesh, f_source)
    gs = []
    for i, sd in enumerate(segdata):
        gi = np.zeros(sd.uhat.n_dofs)
        src = _source_for(g_source, i)
        if src is not None:
            q = sd.quad
            vals = np.broadcast_to(np.asarray(src(q.s), dtype=float), q.s.shape) * q.w * sd.seg.area
            nu = p1_values(sd.uhat, q.uhat_elem, q.s)
            np.add.at(gi, q.uhat_elem, vals * nu[:, 0])
            np.add.at(gi, q.uhat_elem + 1, vals * nu[:, 1])
        gs.append(gi)
    return f, gs


def _eliminate(M, rhs, fixed, values):
    """Symmetric Dirichlet elimination: identity rows/cols on ``fixed``, lifting moved to ``rhs``."""
    n = M.shape[0]
    lift = np.zeros(n)
    lift[fixed] = values
    rhs = rhs - M @ lift
    rhs[fixed] = values
    keep = np.ones(n)
    keep[fixed] = 0.0
    D = sp.diags(keep)
    M = D @ M @ D + sp.diags(1.0 - keep)
    return finalize(M), rhs


def _zero_rows(M, rows):
    keep = np.ones(M.shape[0])
    keep[rows] = 0.0
    return finalize(sp.diags(keep) @ M)


def dirichlet_nodes(mesh: TetMesh3D, dirichlet: dict[str, float]):
    """Nodes and values of the Dirichlet faces; on shared edges the later face in FACE_TAGS order wins."""
    values = {}
    for tag in FACE_TAGS:
        if tag in dirichlet and dirichlet[tag] is not None:
            for k in mesh.nodes_with_tag(tag):
                values[int(k)] = float(dirichlet[tag])
    nodes = np.array(sorted(values), dtype=np.int64)
    return nodes, np.array([values[k] for k in nodes], dtype=float)


@dataclass(eq=False)
class CoupledSystem:
    """All assembled blocks after boundary conditions.

    ``Ahat`` is the bordered saddle matrix of size ``Nhat + n_mult``; all
    U-hat-side matrices and ``g`` carry ``n_mult`` zero rows for the multipliers.
    """

    mesh: TetMesh3D
    segdata: list[SegmentData]
    A: sp.csr_matrix
    Ahat: sp.csr_matrix
    Ahat_blocks: list[sp.csr_matrix]
    Q: sp.csr_matrix
    B: sp.csr_matrix
    Bhat: sp.csr_matrix
    Calpha: sp.csr_matrix
    Chat_alpha: sp.csr_matrix
    C: sp.csr_matrix
    Chat: sp.csr_matrix
    G: sp.csr_matrix
    Ghat: sp.csr_matrix
    Gpsi: sp.csr_matrix
    f: np.ndarray
    g: np.ndarray
    alpha: float
    alpha_hat: float
    K: object
    dirichlet_nodes: np.ndarray
    dirichlet_values: np.ndarray
    uhat_offsets: np.ndarray
    phi_offsets: np.ndarray
    psi_offsets: np.ndarray
    n_mult: int
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def Nhat(self) -> int:
        return int(self.uhat_offsets[-1])

    @property
    def Nphi(self) -> int:
        return int(self.phi_offsets[-1])

    @property
    def Npsi(self) -> int:
        return int(self.psi_offsets[-1])

    @property
    def segments(self) -> list[SegmentGeom]:
        return [sd.seg for sd in self.segdata]


def _offsets(sizes):
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


def assemble_system(mesh: TetMesh3D, segments: Sequence[SegmentGeom], K=1.0, dirichlet=None,
                    alpha: float = 1.0, alpha_hat: float = 1.0, ratio: float = 0.5,
                    f_source=None, g_source=None, junction_tol: float | None = None,
                    backend: str | None = None, segdata: Sequence[SegmentData] | None = None) -> CoupledSystem:
    """Traverse, mesh and assemble the whole constrained problem.

    ``dirichlet`` maps face tags (``"z+"`` ...) to values; other faces are
    homogeneous Neumann.
    """
    if not alpha > 0.0 or not alpha_hat > 0.0:
        raise AssemblyError("alpha and alpha_hat must be positive")
    dirichlet = dict(dirichlet or {})
    unknown = set(dirichlet) - set(FACE_TAGS)
    if unknown:
        raise AssemblyError(f"unknown face tags {sorted(unknown)}")
    if segdata is None:
        segdata = prepare_segments(mesh, segments, ratio, backend=backend)
    segdata = list(segdata)
    N = mesh.n_nodes
    ints = [segment_integrals(sd, N) for sd in segdata]
    if junction_tol is None:
        junction_tol = 1e-9 * float(mesh.box_edges.max())

    uoff = _offsets([sd.uhat.n_dofs for sd in segdata])
    foff = _offsets([sd.phi.n_dofs for sd in segdata])
    poff = _offsets([sd.psi.n_dofs for sd in segdata])

    A_raw = assemble_A(mesh, segdata, K, alpha, integrals=ints)
    blocks, Q = assemble_Ahat(segdata, alpha_hat, junction_tol, integrals=ints)
    f, gs = assemble_rhs(mesh, segdata, f_source, g_source)

    def hstack(mats, n_rows):
        return finalize(sp.hstack(mats, format="csr")) if mats else sp.csr_matrix((n_rows, 0))

    def bdiag(mats):
        return finalize(sp.block_diag(mats, format="csr")) if mats else sp.csr_matrix((0, 0))

    scale = [sd.seg.perimeter for sd in segdata]
    B = hstack([si.B for si in ints], N)
    C = hstack([si.C for si in ints], N)
    Calpha = hstack([alpha * p * si.C for p, si in zip(scale, ints)], N)
    G = finalize(sum((si.line_mass for si in ints), sp.csr_matrix((N, N))))
    Bhat_l = [si.Bhat for si in ints]
    Chat_l = [si.Chat for si in ints]
    Chat_alpha_l = [alpha_hat * p * si.Chat for p, si in zip(scale, ints)]
    Ghat = bdiag([si.Ghat for si in ints])
    Gpsi = bdiag([si.Gpsi for si in ints])

    # endpoint Dirichlet conditions on each segment's own block
    for i, sd in enumerate(segdata):
        fixed, vals = [], []
        for end, value in enumerate(sd.seg.bc):
            if value is not None:
                fixed.append(0 if end == 0 else sd.uhat.n_dofs - 1)
                vals.append(float(value))
        if fixed:
            blocks[i], gs[i] = _eliminate(blocks[i], gs[i], np.array(fixed), np.array(vals))
            Bhat_l[i] = _zero_rows(Bhat_l[i], fixed)
            Chat_alpha_l[i] = _zero_rows(Chat_alpha_l[i], fixed)

    m = Q.shape[0]
    nhat = int(uoff[-1])

    def padded(mats, n_cols):
        top = bdiag(mats) if mats else sp.csr_matrix((0, n_cols))
        return finalize(sp.vstack([top, sp.csr_matrix((m, n_cols))], format="csr"))

    Bhat = padded(Bhat_l, int(foff[-1]))
    Chat = padded(Chat_l, int(poff[-1]))
    Chat_alpha = padded(Chat_alpha_l, int(poff[-1]))
    Ghat_p = finalize(sp.block_diag([Ghat, sp.csr_matrix((m, m))], format="csr")) if m else Ghat
    Adiag = bdiag(blocks)
    if m:
        Ahat = finalize(sp.bmat([[Adiag, Q.T], [Q, None]], format="csr"))
    else:
        Ahat = Adiag
    g = np.concatenate(gs + [np.zeros(m)]) if segdata else np.zeros(m)

    dnodes, dvals = dirichlet_nodes(mesh, dirichlet)
    raw = {"A": A_raw, "f": f.copy()}
    if len(dnodes):
        A, f = _eliminate(A_raw, f, dnodes, dvals)
        B = _zero_rows(B, dnodes)
        Calpha = _zero_rows(Calpha, dnodes)
    else:
        A = A_raw

    if Ahat.shape[0] != nhat + m:
        raise AssemblyError("inconsistent 1D block sizes")
    return CoupledSystem(
        mesh=mesh, segdata=segdata, A=A, Ahat=Ahat, Ahat_blocks=blocks, Q=Q,
        B=B, Bhat=Bhat, Calpha=Calpha, Chat_alpha=Chat_alpha, C=C, Chat=Chat,
        G=G, Ghat=Ghat_p, Gpsi=Gpsi, f=f, g=g, alpha=alpha, alpha_hat=alpha_hat, K=K,
        dirichlet_nodes=dnodes, dirichlet_values=dvals,
        uhat_offsets=uoff, phi_offsets=foff, psi_offsets=poff, n_mult=m, raw=raw,
    )


@dataclass(eq=False)
class BlockOperators:
    """The stacked operators acting on ``W = (U, Uhat, multipliers)``."""

    A: sp.csr_matrix
    Ahat: sp.csr_matrix
    calA: sp.csr_matrix
    calB: sp.csr_matrix
    calCa: sp.csr_matrix
    calC: sp.csr_matrix
    calG: sp.csr_matrix
    Gpsi: sp.csr_matrix
    calF: np.ndarray
    N: int
    n_hat: int
    n_phi: int
    n_psi: int
    n_mult: int = 0

    @property
    def n_w(self) -> int:
        return self.N + self.n_hat

    @property
    def n_x(self) -> int:
        return self.n_phi + self.n_psi


def build_blocks(sys: CoupledSystem) -> BlockOperators:
    N, nh = sys.N, sys.Ahat.shape[0]
    nphi, npsi = sys.Nphi, sys.Npsi
    shapes = {
        "B": (sys.B.shape, (N, nphi)), "Bhat": (sys.Bhat.shape, (nh, nphi)),
        "Calpha": (sys.Calpha.shape, (N, npsi)), "Chat_alpha": (sys.Chat_alpha.shape, (nh, npsi)),
        "C": (sys.C.shape, (N, npsi)), "Chat": (sys.Chat.shape, (nh, npsi)),
        "G": (sys.G.shape, (N, N)), "Ghat": (sys.Ghat.shape, (nh, nh)),
        "Gpsi": (sys.Gpsi.shape, (npsi, npsi)), "A": (sys.A.shape, (N, N)),
    }
    for name, (got, want) in shapes.items():
        if tuple(got) != want:
            raise AssemblyError(f"block {name} has shape {got}, expected {want}")
    if sys.f.shape != (N,) or sys.g.shape != (nh,):
        raise AssemblyError("load vectors do not match the block sizes")
    return BlockOperators(
        A=sys.A,
        Ahat=sys.Ahat,
        calA=finalize(sp.block_diag([sys.A, sys.Ahat], format="csr")),
        calB=finalize(sp.vstack([sys.B, -sys.Bhat], format="csr")),
        calCa=finalize(sp.vstack([sys.Calpha, sys.Chat_alpha], format="csr")),
        calC=finalize(sp.vstack([sys.C, sys.Chat], format="csr")),
        calG=finalize(sp.block_diag([sys.G, sys.Ghat], format="csr")),
        Gpsi=sys.Gpsi,
        calF=np.concatenate([sys.f, sys.g]),
        N=N,
        n_hat=nh,
        n_phi=nphi,
        n_psi=npsi,
        n_mult=sys.n_mult,
    )


def dump_blocks(sys: CoupledSystem, directory) -> list:
    """Write every named block in coordinate text format; returns the written paths."""
    from pathlib import Path

    from .linalg import write_matrix

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ("A", "Ahat", "Q", "B", "Bhat", "Calpha", "Chat_alpha", "C", "Chat", "G", "Ghat", "Gpsi"):
        path = directory / f"{name}.mtx"
        write_matrix(path, getattr(sys, name), comment=name)
        written.append(path)
    return written


__all__ = [
    "AssemblyError",
    "BlockOperators",
    "CoupledSystem",
    "SegmentData",
    "assemble_A",
    "assemble_Ahat",
    "assemble_rhs",
    "assemble_system",
    "build_blocks",
    "dirichlet_nodes",
    "dump_blocks",
    "find_junctions",
    "load_vector",
    "prepare_segments",
    "reference_stiffness",
    "segment_integrals",
    "stiffness_matrix",
]
