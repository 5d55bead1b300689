import math

import numpy as np
import pytest

from mlswe.physics import potential, surfaces
from mlswe.scenarios import (SCENARIOS, BumpSetup, LinearWaveSetup, VortexSetup, apparent_phase_speed, build_case,
                             bump_depth, bump_mesh, cyclostrophic_speed, init_baroclinic_vortex, init_gaussian_bump,
                             init_lake, init_linear_waves, init_random_layers, lake_mesh, lake_topography,
                             linear_wave_mesh, linear_wave_reference, mode_speeds, random_layers_mesh,
                             surface_deviations, vortex_mesh, wave_matrix)
from mlswe.scheme import SchemeParams, tendency


def test_single_layer_wave_reference_is_scalar_standing_wave():
    setup = LinearWaveSetup(n_layers=1, thickness=5000.0, g=10.0)
    kx, ky = setup.wavenumber
    x, y = np.array([1e4, 3.3e4]), np.array([2e4, 7e4])
    for t in (0.0, 100.0, 1234.5):
        expect = math.cos(math.sqrt(10.0 * 5000.0) * math.hypot(kx, ky) * t) * np.cos(kx * x) * np.cos(ky * y)
        np.testing.assert_allclose(linear_wave_reference(setup, t, x, y)[:, 0], expect, atol=1e-12)


def test_wave_reference_round_trip_at_t0():
    setup = LinearWaveSetup()
    mesh = linear_wave_mesh(12)
    case = init_linear_waves(mesh, setup)
    ref = linear_wave_reference(setup, 0.0, *mesh.centroid.T)
    dev = case.state.H / case.stack.rho - setup.thickness
    np.testing.assert_allclose(ref, dev, atol=1e-12)
    # only the top surface is displaced initially
    eta = surface_deviations(ref)
    np.testing.assert_allclose(eta[:, 1:], 0.0, atol=1e-12)


def test_wave_matrix_eigenvalues_two_routes():
    A = wave_matrix(LinearWaveSetup())
    dense = np.sort(np.linalg.eigvals(A).real)
    roots = np.sort(np.roots(np.poly(A)).real)
    np.testing.assert_allclose(roots, dense, rtol=1e-8)
    assert np.all(dense > 0)


def test_fastest_mode_speed():
    setup = LinearWaveSetup()
    c = mode_speeds(setup)
    assert c[0] <= math.sqrt(setup.g * setup.thickness * setup.n_layers)
    # crests of the diagonal wave cross an x section at about 316 m/s
    assert apparent_phase_speed(setup) == pytest.approx(316.0, rel=0.02)


def test_bump_profile():
    s = BumpSetup()
    assert bump_depth(s, 0.0, 0.0) == pytest.approx(5010.0)
    assert bump_depth(s, 1e9, 0.0) == pytest.approx(5000.0)
    assert bump_depth(s, s.sigma, 0.0) == pytest.approx(5000 + 10 * math.exp(-0.5))
    assert bump_depth(s, s.sigma, 0.0) == pytest.approx(5006.065, abs=1e-3)
    case = init_gaussian_bump(bump_mesh(10))
    assert case.state.H.max() < 5010.0 and case.state.H.min() >= 5000.0


def test_lake_setup():
    assert lake_topography(0.9, 0.5) == pytest.approx(0.8)
    mesh = lake_mesh(200, 10)
    case = init_lake(mesh, perturbed=True)
    eta = surfaces(case.stack, case.state.H, case.state.zb)[:, 0]
    x = mesh.centroid[:, 0]
    np.testing.assert_allclose(eta[np.abs(x - 0.1) < 0.02], 1.01)
    np.testing.assert_allclose(eta[x > 0.2], 1.0)
    calm = init_lake(mesh)
    np.testing.assert_allclose(surfaces(calm.stack, calm.state.H, calm.state.zb), 1.0, rtol=1e-15)


def test_vortex_peak_and_far_field():
    s = VortexSetup()
    assert s.peak == pytest.approx(s.f0 * s.u_max * s.radius * math.sqrt(math.e) / s.g)
    assert s.peak == pytest.approx(0.730, abs=1e-3)
    case = init_baroclinic_vortex(vortex_mesh(40), s)
    eta = surfaces(case.stack, case.state.H, case.state.zb)[:, 0]
    r = np.hypot(*case.mesh.centroid.T)
    assert np.abs(case.state.velocity[r > 8 * s.radius]).max() < 1e-6
    assert eta.max() < s.peak


def test_vortex_still_layers():
    case = init_baroclinic_vortex(vortex_mesh(30))
    s = case.extras["setup"].still_layer
    assert s == 5
    phi = potential(case.stack, case.state.H, case.state.zb)
    phi_rest = potential(case.stack, case.rest.H, case.rest.zb)
    scale = np.abs(phi - phi_rest)[:, 0].max()
    assert np.abs(phi - phi_rest)[:, s:].max() <= 1e-10 * scale
    np.testing.assert_array_equal(case.state.velocity[:, s:], 0.0)
    assert np.all(np.abs(case.state.velocity[:, :s]).max(axis=(0, 2)) > 0)


def test_vortex_densities_follow_linear_law():
    s = VortexSetup()
    d = s.layer_thickness * (np.arange(s.n_layers) + 0.5)
    np.testing.assert_allclose(s.densities, s.rho0 * (1 + s.brunt ** 2 * d / s.g))
    assert np.all(np.diff(s.densities) > 0)


def test_cyclostrophic_balance_and_strong_anticyclone():
    f, r = 1e-4, 5e4
    dphi = 1e-4
    v = cyclostrophic_speed(dphi, r, f)
    assert v * v / r + f * v == pytest.approx(dphi, rel=1e-12)
    with pytest.raises(ValueError):
        cyclostrophic_speed(-1.0, 1e3, 1e-4)


def test_vortex_discrete_balance_improves_with_resolution():
    def residual(n):
        mesh = vortex_mesh(n)
        case = init_baroclinic_vortex(mesh)
        s = case.state
        dH, dq = tendency(s, mesh, case.stack, SchemeParams(gamma=0.0, alpha=0.0, order_space=2), 1.0)
        u = s.velocity
        f = case.coriolis.f0
        dv = (dq - u * dH[..., None]) / s.H[..., None]
        res = dv + np.stack([f * u[..., 1], -f * u[..., 0]], axis=-1)
        return np.sqrt(np.mean(res ** 2))
    coarse, fine = residual(60), residual(240)
    assert math.log(coarse / fine) / math.log(4.0) >= 1.5


def test_random_layers_reproducible():
    mesh = random_layers_mesh()
    a = init_random_layers(mesh, seed=3)
    b = init_random_layers(mesh, seed=3)
    c = init_random_layers(mesh, seed=4)
    np.testing.assert_array_equal(a.state.H, b.state.H)
    assert not np.array_equal(a.state.H, c.state.H)
    assert np.all(np.diff(a.stack.rho) > 0)


def test_registry_builds_every_scenario():
    for name, spec in SCENARIOS.items():
        small = (8, 4) if name == "lake" else (6, 6)
        case = build_case(name, small)
        assert case.mesh.n_cells == small[0] * small[1]
        assert case.state.H.shape == (case.mesh.n_cells, case.stack.n_layers)
        assert np.all(case.state.H > 0)


def test_registry_rejects_unknowns():
    with pytest.raises(KeyError):
        build_case("tsunami")
    with pytest.raises(KeyError):
        build_case("lake", params={"depth": 3.0})
    with pytest.raises(ValueError):
        build_case("gaussian_bump", (4, 6))
