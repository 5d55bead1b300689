import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlswe.stability import (amplification_matrix, amplification_matrix_closed_form, guaranteed_constants,
                             max_amplification, max_stable_cfl, relaxed_bounds, rho_epsilon, scan_constants,
                             scan_stability, spectral_radius, split_constants, write_stability_csv)


def test_rho_epsilon_example_and_closed_form():
    # 1D unit cells: Delta_e = 1/2, (H/Delta) = H = 1
    r = rho_epsilon(dt=0.1, eps=1.0, c_h=10.0, delta_e=0.5, h_over_delta=1.0)
    assert r * r == pytest.approx(0.4)
    assert r == pytest.approx(2 * 0.1 * math.sqrt(10.0), rel=1e-14)
    assert rho_epsilon(0.2, 1.0, 10.0, 0.5, 1.0) == pytest.approx(2 * r)


def test_rho_epsilon_rejects_nonpositive():
    with pytest.raises(ValueError):
        rho_epsilon(0.0, 1.0, 1.0, 1.0, 1.0)


def test_guaranteed_constants():
    assert guaranteed_constants() == (4.0, 2.0)


def test_relaxed_bounds_examples():
    b = relaxed_bounds(0.0)
    assert (b.gamma_lo, b.alpha_lo) == (0.5, 0.5)
    assert math.isinf(b.gamma_hi) and math.isinf(b.alpha_hi)
    b = relaxed_bounds(math.sqrt(0.4))
    assert b.gamma_lo == pytest.approx(0.5635, abs=1e-4)
    assert b.gamma_hi == pytest.approx(4.4365, abs=1e-4)
    b = relaxed_bounds(1.0)
    assert b.gamma_lo == pytest.approx(1.0) and b.gamma_hi == pytest.approx(1.0)
    assert b.alpha_empty


def test_relaxed_bounds_emptiness_thresholds():
    below, above = relaxed_bounds(1.0 - 1e-12), relaxed_bounds(1.0 + 1e-12)
    assert not below.gamma_empty and above.gamma_empty
    s = 1 / math.sqrt(2)
    assert not relaxed_bounds(s * (1 - 1e-12)).alpha_empty
    assert relaxed_bounds(s * (1 + 1e-12)).alpha_empty


@settings(max_examples=100)
@given(r=st.floats(1e-2, 1.0))
def test_relaxed_bounds_match_printed_formulas(r):
    b = relaxed_bounds(r)
    s = math.sqrt(max(0.0, 1 - r * r))
    assert b.gamma_lo == pytest.approx((1 - s) / r**2, rel=1e-6, abs=1e-9)
    assert b.gamma_hi == pytest.approx((1 + s) / r**2, rel=1e-12)
    if 2 * r * r <= 1:
        t = math.sqrt(1 - 2 * r * r)
        assert b.alpha_lo == pytest.approx((1 - t) / (2 * r * r), rel=1e-6, abs=1e-9)
        assert b.alpha_hi == pytest.approx((1 + t) / (2 * r * r), rel=1e-12)
    # the guaranteed constants are admissible once rho is small enough
    if r <= 0.5:
        assert b.gamma_lo <= 4 <= b.gamma_hi
    if r <= 1 / (2 * math.sqrt(2)):
        assert b.alpha_lo <= 2 <= b.alpha_hi


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(0, 2 * math.pi), cfl=st.floats(0.01, 1.5), gamma=st.floats(0, 3), alpha=st.floats(0, 3),
       u=st.floats(-0.9, 0.9), h=st.floats(0.1, 10), g=st.floats(0.5, 20))
def test_generic_matrix_matches_closed_form(theta, cfl, gamma, alpha, u, h, g):
    a = amplification_matrix(theta, cfl, gamma, alpha, u_bar=u, h_bar=h, g=g)
    b = amplification_matrix_closed_form(theta, cfl, gamma, alpha, u_bar=u, h_bar=h, g=g)
    np.testing.assert_allclose(a, b, atol=1e-12 * max(1.0, np.abs(b).max()))


@pytest.mark.parametrize("kw", [dict(), dict(order_space=2, order_time=2), dict(dim=2),
                                dict(rho=[1000.0, 1050.0, 1100.0], h_bar=100.0, g=10.0)])
def test_constant_mode_is_identity(kw):
    G = amplification_matrix(0.0, 0.7, 0.4, 0.6, **kw)
    np.testing.assert_allclose(G, np.eye(G.shape[0]), atol=1e-14)
    assert spectral_radius(G) == pytest.approx(1.0)


def test_spectral_radius_symmetric_in_theta():
    for th in np.linspace(0.1, 3.0, 7):
        a = spectral_radius(amplification_matrix(th, 0.8, 0.3, 0.4, order_space=2, order_time=2))
        b = spectral_radius(amplification_matrix(2 * math.pi - th, 0.8, 0.3, 0.4, order_space=2, order_time=2))
        assert a == pytest.approx(b, rel=1e-12)


def test_max_stable_cfl_one_dimension():
    assert max_stable_cfl(0.5, 0.5) == pytest.approx(1.0, abs=0.02)
    assert max_stable_cfl(1.0, 0.0) == pytest.approx(1 / math.sqrt(2), abs=0.02)
    assert max_stable_cfl(0.0, 1.0) == pytest.approx(1 / math.sqrt(2), abs=0.02)
    assert max_amplification(0.8, 1.0, 0.0) > 1.0


@pytest.mark.parametrize("gamma,alpha", [(0.5, 0.5), (1.0, 0.0)])
def test_two_dimensional_cfl_is_one_dimensional_over_sqrt2(gamma, alpha):
    c1 = max_stable_cfl(gamma, alpha, n_theta=64)
    c2 = max_stable_cfl(gamma, alpha, n_theta=32, dim=2, iters=25)
    assert c2 == pytest.approx(c1 / math.sqrt(2), rel=0.01)


def test_first_order_boundary_is_gamma_plus_alpha_one():
    sums = np.round(np.arange(0.0, 2.01, 0.1), 2)
    for cfl in (0.05, 0.5):
        pts = scan_stability([cfl], sums, n_theta=128)
        stable = [round(p.gamma + p.alpha, 2) for p in pts if p.stable]
        assert min(stable) == pytest.approx(1.0, abs=0.1)
        assert all(s in stable for s in sums if s >= 1.0)


def test_second_order_boundary_near_015():
    # CFL 0.25 per direction is the square-cell Courant number of the adaptive step at 0.5
    sums = np.round(np.arange(0.0, 0.61, 0.05), 2)
    for kw in (dict(n_theta=128), dict(n_theta=32, dim=2)):
        pts = scan_stability([0.25], sums, order_space=2, order_time=2, **kw)
        first = min(p.gamma + p.alpha for p in pts if p.stable)
        assert first == pytest.approx(0.15, abs=0.05 + 1e-9)


def test_split_constants():
    assert split_constants(1.0, "equal") == (0.5, 0.5)
    assert split_constants(1.0, "gamma-only") == (1.0, 0.0)
    assert split_constants(1.0, "alpha-only") == (0.0, 1.0)
    with pytest.raises(ValueError):
        split_constants(1.0, "random")


def test_scan_constants_and_csv(tmp_path):
    pts = scan_constants(0.25, [0.0, 0.5], [0.5], n_theta=32)
    assert [(p.gamma, p.alpha) for p in pts] == [(0.0, 0.5), (0.5, 0.5)]
    assert [p.stable for p in pts] == [False, True]
    path = tmp_path / "s.csv"
    write_stability_csv(pts, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "CFL,gamma,alpha,rho_max,stable"
    assert len(lines) == 3 and lines[2].endswith(",1")


def test_bad_arguments():
    with pytest.raises(ValueError):
        amplification_matrix(0.1, 0.5, 0.5, 0.5, dim=3)
    with pytest.raises(ValueError):
        amplification_matrix(0.1, 0.5, 0.5, 0.5, order_time=3)
