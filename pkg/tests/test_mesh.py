import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlswe.mesh import OUTFLOW, SLIP, Mesh, build_cartesian, read_mesh, write_mesh


def test_single_unit_cell():
    m = build_cartesian(1, 1, 1.0, 1.0, bc="slip")
    assert m.n_cells == 1
    assert m.area[0] == 1.0
    assert m.perimeter[0] == 4.0
    assert m.n_edges == 4
    assert np.all(m.boundary)
    assert np.all(m.edge_length == 1.0)
    assert np.all(m.tag == SLIP)


def test_periodic_closure_has_no_boundary_edges():
    m = build_cartesian(2, 2, 1.0, 1.0, bc="periodic")
    assert not m.boundary.any()
    assert m.n_edges == 8


def test_edge_delta_on_uniform_squares():
    h = 0.25
    m = build_cartesian(4, 4, 1.0, 1.0, bc="periodic")
    np.testing.assert_allclose(m.edge_delta(), h / 4, rtol=1e-14)


def test_edge_delta_two_unit_squares():
    m = build_cartesian(2, 1, 2.0, 1.0, bc="slip")
    inner = np.nonzero(~m.boundary)[0]
    assert inner.size == 1
    assert m.inv_delta[inner[0]] == pytest.approx(4.0)


def test_edge_delta_mixed_cell_sizes():
    # cells of sides h and 2h sharing an edge: 1/Delta = (4/h + 2/h) / 2 = 3/h
    h = 0.5
    area = np.array([h * h, 4 * h * h])
    perimeter = np.array([4 * h, 8 * h])
    m = Mesh(area=area, perimeter=perimeter, centroid=np.array([[0.5 * h, 0.5 * h], [2 * h, h]]),
             edge_length=np.array([h]), edge_mid=np.array([[h, 0.5 * h]]), normal=np.array([[1.0, 0.0]]),
             left=np.array([0]), right=np.array([1]), tag=np.array([0], dtype=np.int8),
             offset=np.array([[1.5 * h, 0.5 * h]]))
    assert m.inv_delta[0] == pytest.approx(3.0 / h)


def test_boundary_edge_delta_mirrors_inner_cell():
    m = build_cartesian(3, 3, 3.0, 3.0, bc="slip")
    b = m.boundary
    np.testing.assert_allclose(m.inv_delta[b], m.boundary_ratio[m.left[b]])


@settings(max_examples=30, deadline=None)
@given(nx=st.integers(1, 7), ny=st.integers(1, 7),
       Lx=st.floats(0.1, 1e6), Ly=st.floats(0.1, 1e6),
       bc=st.sampled_from(["slip", "periodic", "outflow"]))
def test_geometric_invariants(nx, ny, Lx, Ly, bc):
    m = build_cartesian(nx, ny, Lx, Ly, bc=bc)
    scale = max(Lx / nx, Ly / ny)
    assert np.max(np.abs(m.gauss_residual())) <= 1e-12 * scale
    assert m.area.sum() == pytest.approx(Lx * Ly, rel=1e-12)
    per = m.accumulate(m.edge_length, signed=False)
    np.testing.assert_allclose(per, m.perimeter, rtol=1e-12)
    assert np.all(m.area > 0) and np.all(m.edge_length > 0)
    np.testing.assert_allclose(np.linalg.norm(m.normal, axis=1), 1.0)


def test_interior_normals_are_opposite_from_each_side():
    m = build_cartesian(3, 2, 3.0, 2.0, bc="slip")
    inner = ~m.boundary
    # the normal points from left to right, so it is aligned with the centroid offset
    assert np.all(np.sum(m.normal[inner] * m.offset[inner], axis=1) > 0)


def test_deterministic_enumeration():
    a = build_cartesian(5, 4, 1.0, 2.0, bc={"west": "outflow", "east": "slip", "south": "slip", "north": "slip"})
    b = build_cartesian(5, 4, 1.0, 2.0, bc={"west": "outflow", "east": "slip", "south": "slip", "north": "slip"})
    for name in ("left", "right", "tag", "normal", "edge_mid"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert np.sum(a.tag == OUTFLOW) == 4


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        build_cartesian(0, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        build_cartesian(2, 2, -1.0, 1.0)
    with pytest.raises(ValueError):
        build_cartesian(2, 2, 1.0, 1.0, bc={"west": "periodic", "east": "slip", "south": "slip", "north": "slip"})
    with pytest.raises(ValueError):
        build_cartesian(2, 2, 1.0, 1.0, bc="sticky")


def test_mesh_file_round_trip(tmp_path):
    m = build_cartesian(3, 2, 3.0, 1.0, bc={"west": "outflow", "east": "slip", "south": "slip", "north": "slip"})
    path = tmp_path / "mesh.txt"
    write_mesh(m, path)
    r = read_mesh(path)
    for name in ("area", "perimeter", "centroid", "edge_length", "edge_mid", "normal", "left", "right", "tag", "offset"):
        np.testing.assert_array_equal(getattr(r, name), getattr(m, name), err_msg=name)


def test_mesh_file_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("nodes 3\n")
    with pytest.raises(ValueError):
        read_mesh(path)
