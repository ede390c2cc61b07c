"""Boundary fluxes, equivalent transmissivity and field export."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import _conductivity, p1_gradients
from .mesh import FACE_TAGS, TetMesh3D


class PostprocessError(ValueError):
    pass


@dataclass
class FluxReport:
    """Signed boundary fluxes per box face (outflow positive).

    ``inlet`` and ``outlet`` are face tags when a single pressure-drop pair is
    declared, else ``None``.
    """

    sigma: dict
    areas: dict
    inlet: str | None = None
    outlet: str | None = None
    keq: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def total_mismatch(self) -> float:
        return abs(float(sum(self.sigma.values())))

    @property
    def rel_mismatch(self) -> float | None:
        if self.inlet is None or self.outlet is None:
            return None
        out = abs(self.sigma[self.outlet])
        if out == 0.0:
            return None
        return abs(out - abs(self.sigma[self.inlet])) / out

    def as_row(self) -> dict:
        row = {f"sigma_{t.replace('-', 'm').replace('+', 'p')}": self.sigma[t] for t in FACE_TAGS}
        row["total_mismatch"] = self.total_mismatch
        row["rel_mismatch"] = self.rel_mismatch
        row["Keq"] = self.keq
        return row


def pressure_drop_pair(dirichlet: dict):
    """``(inlet, outlet)`` if exactly two faces carry distinct Dirichlet values, else ``(None, None)``."""
    faces = {t: v for t, v in (dirichlet or {}).items() if v is not None}
    if len(faces) != 2:
        return None, None
    (t0, v0), (t1, v1) = sorted(faces.items(), key=lambda kv: kv[1])
    if v0 == v1:
        return None, None
    return t1, t0


def boundary_fluxes(mesh: TetMesh3D, U, K=1.0, inlet: str | None = None, outlet: str | None = None) -> FluxReport:
    """``sigma_i = -sum area * K grad U . n`` over the faces of each box side.

    The P1 gradient of the owning tet is used on each face.
    """
    U = np.asarray(U, dtype=float)
    if U.shape != (mesh.n_nodes,):
        raise PostprocessError(f"U has length {U.shape}, mesh has {mesh.n_nodes} nodes")
    owners = mesh.face_owner
    g, _ = p1_gradients(mesh.nodes, mesh.tets[owners])
    grad = np.einsum("tjd,tj->td", g, U[mesh.tets[owners]])
    kd = np.asarray(_conductivity(K, slice(None), mesh.n_tets))[owners]
    p = mesh.nodes[mesh.boundary_faces]
    # faces are outward oriented, so half the cross product is area times the outward normal
    an = 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    contrib = -np.einsum("fd,fd->f", kd * grad, an)
    area = np.linalg.norm(an, axis=1)
    sigma, areas = {}, {}
    for k, tag in enumerate(FACE_TAGS):
        sel = mesh.face_tags == k
        sigma[tag] = float(contrib[sel].sum())
        areas[tag] = float(area[sel].sum())
    return FluxReport(sigma=sigma, areas=areas, inlet=inlet, outlet=outlet)


def equivalent_transmissivity(report: FluxReport, drop: float, edge_length: float) -> float:
    """``|sigma_out| / (|outlet area| * drop / edge_length)``."""
    if report.outlet is None:
        raise PostprocessError("no outlet declared")
    if not drop > 0:
        raise PostprocessError("pressure drop must be positive")
    area = report.areas[report.outlet]
    if area <= 0.0:
        raise PostprocessError(f"outlet {report.outlet} has zero area")
    return abs(report.sigma[report.outlet]) / (area * drop / edge_length)


def write_flux_csv(path, report: FluxReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["face", "sigma"])
        for tag in FACE_TAGS:
            w.writerow([tag, repr(report.sigma[tag])])


def write_vtk(path, mesh: TetMesh3D, point_data: dict, title: str = "mixdim solution") -> None:
    """Legacy ASCII unstructured grid with scalar point data."""
    n, t = mesh.n_nodes, mesh.n_tets
    with open(path, "w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n} double\n")
        np.savetxt(fh, mesh.nodes, fmt="%.17g")
        fh.write(f"CELLS {t} {5 * t}\n")
        np.savetxt(fh, np.column_stack([np.full(t, 4), mesh.tets]), fmt="%d")
        fh.write(f"CELL_TYPES {t}\n")
        np.savetxt(fh, np.full(t, 10), fmt="%d")
        fh.write(f"POINT_DATA {n}\n")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (n,):
                raise PostprocessError(f"point data {name!r} has shape {values.shape}")
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, values, fmt="%.17g")


def read_vtk(path):
    """Read back what :func:`write_vtk` writes: ``(points, tets, point_data)``."""
    tokens = Path(path).read_text().split("\n")
    it = iter(tokens)
    points = tets = None
    data = {}
    n_points = 0
    for line in it:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "POINTS":
            n_points = int(parts[1])
            points = np.array([next(it).split() for _ in range(n_points)], dtype=float)
        elif parts[0] == "CELLS":
            rows = np.array([next(it).split() for _ in range(int(parts[1]))], dtype=np.int64)
            tets = rows[:, 1:]
        elif parts[0] == "SCALARS":
            next(it)  # lookup table line
            data[parts[1]] = np.array([float(next(it)) for _ in range(n_points)])
    if points is None or tets is None:
        raise PostprocessError(f"{path}: not an unstructured grid file")
    return points, tets, data


def segment_samples(sd, uhat, phi, psi):
    """Sample one segment's fields at the union of its 1D nodes.

    ``Phi`` is taken from the cell to the right of each node (last cell at the end).
    """
    s = np.unique(np.concatenate([sd.uhat.nodes, sd.psi.nodes]))
    u = np.interp(s, sd.uhat.nodes, uhat)
    p = np.interp(s, sd.psi.nodes, psi)
    cell = np.clip(np.searchsorted(sd.phi.nodes, s, side="right") - 1, 0, sd.phi.n_cells - 1)
    return s, u, p, np.asarray(phi)[cell]


def write_segment_csv(path, sd, uhat, phi, psi) -> None:
    s, u, p, f = segment_samples(sd, uhat, phi, psi)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "Uhat", "Psi", "Phi"])
        for row in zip(s, u, p, f):
            w.writerow([repr(float(v)) for v in row])


def export_fields(sys, U, uhat, phi, psi, out_dir) -> list[Path]:
    """Write ``solution.vtk`` and one ``segment_<i>.csv`` per segment into ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PostprocessError(f"cannot create {out_dir}: {exc}") from None
    paths = [out_dir / "solution.vtk"]
    write_vtk(paths[0], sys.mesh, {"U": U})
    for i, sd in enumerate(sys.segdata):
        u0, u1 = sys.uhat_offsets[i], sys.uhat_offsets[i + 1]
        f0, f1 = sys.phi_offsets[i], sys.phi_offsets[i + 1]
        p0, p1 = sys.psi_offsets[i], sys.psi_offsets[i + 1]
        path = out_dir / f"segment_{i}.csv"
        write_segment_csv(path, sd, uhat[u0:u1], phi[f0:f1], psi[p0:p1])
        paths.append(path)
    return paths


__all__ = [
    "FluxReport",
    "PostprocessError",
    "boundary_fluxes",
    "equivalent_transmissivity",
    "export_fields",
    "pressure_drop_pair",
    "read_vtk",
    "segment_samples",
    "write_flux_csv",
    "write_segment_csv",
    "write_vtk",
]
