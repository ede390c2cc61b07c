import csv

import numpy as np
import pytest

from conftest import BOX, kuhn_h
from mixdim.assembly import prepare_segments
from mixdim.mesh import FACE_TAGS, SegmentGeom, build_box_mesh
from mixdim.postprocess import (
    FluxReport,
    PostprocessError,
    boundary_fluxes,
    equivalent_transmissivity,
    export_fields,
    pressure_drop_pair,
    read_vtk,
    segment_samples,
    write_flux_csv,
    write_vtk,
)


@pytest.fixture(scope="module")
def cube3():
    return build_box_mesh(BOX, kuhn_h(3))


def test_linear_field_fluxes(cube3):
    U = (cube3.nodes[:, 2] + 1.0) / 2.0
    rep = boundary_fluxes(cube3, U, inlet="z+", outlet="z-")
    assert rep.sigma["z-"] == pytest.approx(2.0, rel=1e-12)
    assert rep.sigma["z+"] == pytest.approx(-2.0, rel=1e-12)
    for tag in ("x-", "x+", "y-", "y+"):
        assert abs(rep.sigma[tag]) <= 1e-12
    assert rep.total_mismatch <= 1e-12
    assert rep.rel_mismatch <= 1e-12
    assert all(a == pytest.approx(4.0, rel=1e-12) for a in rep.areas.values())
    assert equivalent_transmissivity(rep, 1.0, 2.0) == pytest.approx(1.0, rel=1e-12)


def test_anisotropic_flux(cube3):
    U = cube3.nodes[:, 0]
    rep = boundary_fluxes(cube3, U, K=(3.0, 1.0, 1.0))
    assert rep.sigma["x+"] == pytest.approx(-12.0, rel=1e-12)
    assert rep.sigma["x-"] == pytest.approx(12.0, rel=1e-12)
    assert rep.rel_mismatch is None


def test_constant_field_zero_flux(cube3):
    rep = boundary_fluxes(cube3, np.full(cube3.n_nodes, 3.7))
    assert all(v == 0.0 for v in rep.sigma.values())


@pytest.mark.parametrize("sigma_out,keq", [(2.44, 1.22), (2.00, 1.00)])
def test_keq_examples(sigma_out, keq):
    sigma = {t: 0.0 for t in FACE_TAGS}
    sigma["z-"] = sigma_out
    sigma["z+"] = -sigma_out
    rep = FluxReport(sigma, {t: 4.0 for t in FACE_TAGS}, inlet="z+", outlet="z-")
    assert equivalent_transmissivity(rep, 1.0, 2.0) == pytest.approx(keq, rel=1e-12)


def test_keq_errors():
    sigma = {t: 0.0 for t in FACE_TAGS}
    rep = FluxReport(sigma, {t: 4.0 for t in FACE_TAGS})
    with pytest.raises(PostprocessError, match="outlet"):
        equivalent_transmissivity(rep, 1.0, 2.0)
    rep.outlet = "z-"
    with pytest.raises(PostprocessError, match="positive"):
        equivalent_transmissivity(rep, 0.0, 2.0)
    rep.areas["z-"] = 0.0
    with pytest.raises(PostprocessError, match="zero area"):
        equivalent_transmissivity(rep, 1.0, 2.0)


def test_pressure_drop_pair():
    assert pressure_drop_pair({"z-": 0.0, "z+": 1.0}) == ("z+", "z-")
    assert pressure_drop_pair({"x-": 2.0, "x+": -1.0}) == ("x-", "x+")
    assert pressure_drop_pair({"z-": 1.0, "z+": 1.0}) == (None, None)
    assert pressure_drop_pair({"z-": 0.0}) == (None, None)
    assert pressure_drop_pair({"z-": 0.0, "z+": 1.0, "x-": 0.5}) == (None, None)
    assert pressure_drop_pair({"z-": 0.0, "z+": 1.0, "x-": None}) == ("z+", "z-")


def test_flux_length_checked(cube3):
    with pytest.raises(PostprocessError):
        boundary_fluxes(cube3, np.zeros(3))


def test_as_row_columns(cube3):
    rep = boundary_fluxes(cube3, cube3.nodes[:, 2], inlet="z+", outlet="z-")
    row = rep.as_row()
    assert list(row)[:6] == ["sigma_xm", "sigma_xp", "sigma_ym", "sigma_yp", "sigma_zm", "sigma_zp"]
    assert list(row)[6:] == ["total_mismatch", "rel_mismatch", "Keq"]


def test_flux_csv(tmp_path, cube3):
    rep = boundary_fluxes(cube3, cube3.nodes[:, 2])
    write_flux_csv(tmp_path / "flux.csv", rep)
    rows = list(csv.reader(open(tmp_path / "flux.csv")))
    assert rows[0] == ["face", "sigma"]
    assert [r[0] for r in rows[1:]] == list(FACE_TAGS)
    assert float(rows[5][1]) == rep.sigma["z-"]


def test_vtk_roundtrip(tmp_path, cube3):
    U = (cube3.nodes[:, 2] + 1.0) / 2.0
    write_vtk(tmp_path / "s.vtk", cube3, {"U": U})
    pts, tets, data = read_vtk(tmp_path / "s.vtk")
    np.testing.assert_array_equal(pts, cube3.nodes)
    np.testing.assert_array_equal(tets, cube3.tets)
    np.testing.assert_array_equal(data["U"], U)
    assert data["U"].min() == 0.0 and data["U"].max() == 1.0


def test_vtk_bad_data(tmp_path, cube3):
    with pytest.raises(PostprocessError):
        write_vtk(tmp_path / "s.vtk", cube3, {"U": np.zeros(5)})
    (tmp_path / "x.vtk").write_text("# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\n")
    with pytest.raises(PostprocessError, match="unstructured"):
        read_vtk(tmp_path / "x.vtk")


def test_segment_samples_phi_piecewise_constant(cube3):
    s = SegmentGeom((-0.8, 0.1, -0.7), (0.6, 0.3, 0.8), 1e-2, 1e2)
    sd = prepare_segments(cube3, [s])[0]
    phi = np.arange(1.0, sd.phi.n_dofs + 1)
    uhat = sd.uhat.nodes.copy()
    psi = 2.0 * sd.psi.nodes
    t, u, p, f = segment_samples(sd, uhat, phi, psi)
    assert t[0] == 0.0 and t[-1] == s.length
    np.testing.assert_allclose(u, t, atol=1e-14)
    np.testing.assert_allclose(p, 2.0 * t, atol=1e-14)
    cells = np.clip(np.searchsorted(sd.phi.nodes, t, side="right") - 1, 0, sd.phi.n_cells - 1)
    np.testing.assert_array_equal(f, phi[cells])
    assert f[-1] == phi[-1]


def test_export_fields(tmp_path, small_system):
    s = small_system
    U = np.zeros(s.N)
    paths = export_fields(s, U, np.zeros(s.Nhat), np.zeros(s.Nphi), np.zeros(s.Npsi), tmp_path / "out")
    assert [p.name for p in paths] == ["solution.vtk", "segment_0.csv", "segment_1.csv"]
    rows = list(csv.reader(open(paths[1])))
    assert rows[0] == ["s", "Uhat", "Psi", "Phi"]


def test_export_fields_unwritable(tmp_path, small_system):
    blocker = tmp_path / "file"
    blocker.write_text("")
    s = small_system
    with pytest.raises(PostprocessError, match="cannot create"):
        export_fields(s, np.zeros(s.N), np.zeros(s.Nhat), np.zeros(s.Nphi), np.zeros(s.Npsi), blocker / "sub")
