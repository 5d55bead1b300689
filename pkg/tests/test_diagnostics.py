import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlswe.diagnostics import (DiagnosticsRecord, convergence_order, energy_monotonicity_check, l2_error,
                               positivity_margin, relative_mass_drift, restrict, track_vortex)
from mlswe.mesh import build_cartesian
from mlswe.physics import LayerStack, State


def test_monotone_series_passes_all_modes():
    e = [5.0, 4.0, 4.0, 3.5]
    for mode in ("strict", "growth", "net-growth"):
        assert energy_monotonicity_check(e, mode).passed


def test_single_uptick():
    e = [1.0, 0.9, 0.9 * (1 + 1e-6), 0.8]
    v = energy_monotonicity_check(e, "strict")
    assert not v.passed and v.first_violation == 2
    assert energy_monotonicity_check(e, "growth").passed


def test_strict_tolerance():
    assert energy_monotonicity_check([1.0, 1.0 + 5e-13], "strict").passed
    assert not energy_monotonicity_check([1.0, 1.0 + 5e-12], "strict").passed


def test_geometric_doubling_fails_growth_at_crossing():
    e = [2.0 ** k for k in range(8)]
    v = energy_monotonicity_check(e, "growth", growth_factor=10.0)
    assert not v.passed and v.first_violation == 4


def test_net_growth_ignores_transients():
    assert energy_monotonicity_check([1.0, 1.3, 0.9], "net-growth", growth_factor=1.0).passed
    assert not energy_monotonicity_check([1.0, 0.9, 1.1], "net-growth", growth_factor=1.0).passed
    assert not energy_monotonicity_check([1.0, math.nan, 0.5], "net-growth").passed


def test_monotonicity_needs_two_samples():
    with pytest.raises(ValueError):
        energy_monotonicity_check([1.0])
    with pytest.raises(ValueError):
        energy_monotonicity_check([1.0, 0.5], "sideways")


def test_mass_drift():
    m = np.array([[10.0, 5.0], [10.0 + 1e-9, 5.0], [10.0 - 2e-9, 5.0]])
    np.testing.assert_allclose(relative_mass_drift(m), [2e-10, 0.0])


def _uniform(stack, mesh, h):
    return State.from_primitive(stack, np.full((mesh.n_cells, stack.n_layers), h), 0.0, np.zeros(mesh.n_cells))


def test_positivity_margin_rest_state():
    mesh = build_cartesian(3, 3, 3.0, 3.0, bc="slip")
    stack = LayerStack((1.0,), g=9.81)
    m = positivity_margin(_uniform(stack, mesh, 2.0), mesh, stack, gamma=0.5, dt=0.1)
    assert m == pytest.approx(0.25 / 1.25)


def test_positivity_margin_near_vacuum_goes_negative():
    mesh = build_cartesian(2, 1, 2.0, 1.0, bc="slip")
    stack = LayerStack((1.0,), g=9.81)
    s = State.from_primitive(stack, np.array([[1e-6], [1.0]]), 0.0, np.zeros(2))
    assert positivity_margin(s, mesh, stack, gamma=0.5, dt=0.01) < 0


def test_l2_error_basics():
    mesh = build_cartesian(4, 4, 1.0, 1.0, bc="slip")
    f = np.random.default_rng(0).normal(size=16)
    assert l2_error(f, f, mesh) == 0.0
    assert l2_error(f + 0.3, f, mesh) == pytest.approx(0.3)


def test_restriction_of_linear_field_is_exact():
    fine = build_cartesian(8, 8, 1.0, 1.0, bc="slip")
    coarse = build_cartesian(4, 4, 1.0, 1.0, bc="slip")
    lin = lambda m: 2 * m.centroid[:, 0] - 3 * m.centroid[:, 1] + 1
    assert l2_error(lin(coarse), lin(fine), coarse, (8, 8)) == pytest.approx(0.0, abs=1e-14)


def test_non_nested_reference_rejected():
    coarse = build_cartesian(4, 4, 1.0, 1.0)
    with pytest.raises(ValueError):
        l2_error(np.zeros(16), np.zeros(36), coarse, (6, 6))
    with pytest.raises(ValueError):
        restrict(np.zeros(25), (5, 5), (2, 2))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_l2_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    mesh = build_cartesian(5, 3, 2.0, 1.0)
    a, b, c = rng.normal(size=(3, 15))
    assert l2_error(a, c, mesh) <= l2_error(a, b, mesh) + l2_error(b, c, mesh) + 1e-12


def test_convergence_orders():
    assert convergence_order([4e-2, 1e-2]) == pytest.approx([2.0])
    assert convergence_order([1.21e-3, 3.00e-4], [160, 320])[0] == pytest.approx(2.01, abs=0.005)
    assert convergence_order([1.0]) == []
    assert convergence_order([1.0, 0.0]) == [math.inf]


def _gauss_field(mesh, x0, y0, w):
    x, y = mesh.centroid.T
    return np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2 * w * w))


def test_track_symmetric_peak_at_cell_centre():
    mesh = build_cartesian(9, 9, 9.0, 9.0)
    fix = track_vortex(_gauss_field(mesh, 4.5, 4.5, 1.5), mesh)
    assert fix.flag == "ok"
    assert (fix.x, fix.y) == pytest.approx((4.5, 4.5), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(x0=st.floats(3.0, 7.0), y0=st.floats(3.0, 7.0))
def test_track_synthetic_gaussian_within_tenth_of_cell(x0, y0):
    mesh = build_cartesian(10, 10, 10.0, 10.0)
    fix = track_vortex(_gauss_field(mesh, x0, y0, 2.0), mesh)
    assert fix.flag == "ok"
    assert abs(fix.x - x0) <= 0.1 and abs(fix.y - y0) <= 0.1


def test_track_minimum_and_flags():
    mesh = build_cartesian(10, 10, 10.0, 10.0)
    fix = track_vortex(-_gauss_field(mesh, 5.2, 4.7, 2.0), mesh, kind="min")
    assert abs(fix.x - 5.2) <= 0.1 and abs(fix.y - 4.7) <= 0.1
    assert track_vortex(np.ones(100), mesh).flag == "degenerate"
    assert track_vortex(_gauss_field(mesh, 0.5, 5.0, 2.0), mesh).flag == "boundary"


def test_record_csv(tmp_path):
    rec = DiagnosticsRecord(2, with_vortex=True)
    rec.append(0.0, 1.0, 0.5, [3.0, 4.0], 0.1, 2.0, 0.2)
    rec.append(1.0, 0.9, 0.4, [3.0, 4.0], 0.1, 2.0, 0.2)
    with pytest.raises(ValueError):
        rec.append(1.0, 0.8, 0.4, [3.0, 4.0], 0.1, 2.0, 0.2)
    path = tmp_path / "d.csv"
    rec.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time,E,K,mass_1,mass_2,minH,maxU,cfl2_margin,vx,vy,vamp"
    assert len(lines) == 3
    np.testing.assert_array_equal(rec.energy, [1.0, 0.9])
    assert rec.masses.shape == (2, 2)
