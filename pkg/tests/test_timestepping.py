import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlswe.mesh import build_cartesian
from mlswe.physics import LayerStack, State
from mlswe.scheme import SchemeParams
from mlswe.timestepping import (CoriolisParams, Integrator, adaptive_dt, coriolis_cn, coriolis_exact, heun_step,
                                imex_hcn222_step)

finite = st.floats(-1e3, 1e3)


def test_adaptive_dt_unit_cell():
    mesh = build_cartesian(1, 1, 1.0, 1.0)
    stack = LayerStack((1.0,), g=10.0)
    s = State.from_primitive(stack, np.array([[2.5]]), 0.0, np.zeros(1))
    assert adaptive_dt(s, mesh, SchemeParams(cfl=0.5), stack) == pytest.approx(0.05)
    assert adaptive_dt(s, mesh, SchemeParams(cfl=1.0), stack) == pytest.approx(0.1)


def test_adaptive_dt_uses_total_depth_and_mean_velocity():
    mesh = build_cartesian(1, 1, 1.0, 1.0)
    stack = LayerStack((1000.0, 1050.0), g=10.0)
    s = State.from_primitive(stack, np.array([[1.5, 1.0]]), np.array([[[2.0, 0.0], [-3.0, 0.0]]]), np.zeros(1))
    u_bar = (1.5 * 2.0 - 1.0 * 3.0) / 2.5
    expect = 0.5 * 2.0 / (4.0 * (abs(u_bar) + 5.0))
    assert adaptive_dt(s, mesh, SchemeParams(cfl=0.5), stack) == pytest.approx(expect)


def test_faster_cell_only_decreases_dt():
    mesh = build_cartesian(2, 1, 2.0, 1.0)
    stack = LayerStack((1.0,), g=10.0)
    slow = State.from_primitive(stack, np.array([[1.0], [1.0]]), 0.0, np.zeros(2))
    fast = State.from_primitive(stack, np.array([[1.0], [1.0]]), np.array([[[0.0, 0.0]], [[5.0, 0.0]]]), np.zeros(2))
    p = SchemeParams()
    assert adaptive_dt(fast, mesh, p, stack) < adaptive_dt(slow, mesh, p, stack)


def test_adaptive_dt_all_dry():
    mesh = build_cartesian(1, 1, 1.0, 1.0)
    stack = LayerStack()
    s = State(np.zeros((1, 1)), np.zeros((1, 1, 2)), np.zeros(1))
    with pytest.raises(ValueError):
        adaptive_dt(s, mesh, SchemeParams(), stack)


def _scalar_state(v):
    return State(np.array([[v]]), np.zeros((1, 1, 2)), np.zeros(1))


def test_heun_scalar_decay():
    op = lambda s: (-s.H, np.zeros_like(s.q))
    out = heun_step(_scalar_state(1.0), 0.1, op)
    assert out.H[0, 0] == pytest.approx(0.905, abs=1e-15)
    assert abs(out.H[0, 0] - math.exp(-0.1)) < 2e-4


def test_heun_zero_operator_is_identity():
    op = lambda s: (np.zeros_like(s.H), np.zeros_like(s.q))
    s = State(np.array([[2.0, 3.0]]), np.ones((1, 2, 2)), np.zeros(1))
    out = heun_step(s, 0.3, op)
    np.testing.assert_array_equal(out.H, s.H)
    np.testing.assert_array_equal(out.q, s.q)


def test_heun_reproduces_second_order_taylor_polynomial(rng):
    A = rng.normal(size=(4, 4))
    dt = 0.07
    x0 = rng.uniform(1, 2, 4)
    op = lambda s: ((A @ s.H[0])[None, :], np.zeros_like(s.q))
    out = heun_step(State(x0[None, :].copy(), np.zeros((1, 4, 2)), np.zeros(1)), dt, op)
    P = np.eye(4) + dt * A + 0.5 * (dt * A) @ (dt * A)
    np.testing.assert_allclose(out.H[0], P @ x0, rtol=1e-13)


def test_coriolis_examples():
    assert coriolis_exact(1.0, 0.0, 0.0, 1.0) == (1.0, 0.0)
    u, v = coriolis_exact(1.0, 0.0, math.pi / 2, 1.0)
    assert u == pytest.approx(0.0, abs=1e-15) and v == pytest.approx(-1.0)
    u, v = coriolis_cn(1.0, 0.0, 2.0, 1.0)
    assert u == pytest.approx(0.0, abs=1e-15) and v == pytest.approx(-1.0)
    assert coriolis_cn(0.3, -0.2, 0.0, 5.0) == (0.3, -0.2)


@settings(max_examples=200)
@given(u=finite, v=finite, f=st.floats(-1e-3, 1e-3), dt=st.floats(0, 1e4))
def test_coriolis_integrators_preserve_speed(u, v, f, dt):
    speed = math.hypot(u, v)
    for rot in (coriolis_exact, coriolis_cn):
        a, b = rot(u, v, f, dt)
        assert math.hypot(a, b) == pytest.approx(speed, rel=1e-14, abs=1e-300)


def test_cn_satisfies_its_implicit_equations(rng):
    u, v = rng.normal(size=2)
    f, dt = 1e-4, 3000.0
    a, b = coriolis_cn(u, v, f, dt)
    assert a == pytest.approx(u + 0.5 * f * dt * (v + b), rel=1e-14)
    assert b == pytest.approx(v - 0.5 * f * dt * (u + a), rel=1e-14)


def _random_case(rng, n=5):
    mesh = build_cartesian(n, n, n * 1e3, n * 1e3, bc="periodic")
    stack = LayerStack((1000.0, 1025.0), g=9.81)
    h = rng.uniform(80, 120, (mesh.n_cells, 2))
    s = State.from_primitive(stack, h, rng.uniform(-1, 1, (mesh.n_cells, 2, 2)), np.zeros(mesh.n_cells))
    return mesh, stack, s


def test_hcn_with_zero_rotation_equals_heun_bitwise(rng):
    mesh, stack, s = _random_case(rng)
    it = Integrator(mesh, stack, SchemeParams(order_space=2, order_time=2))
    op = it.operator(5.0)
    a = heun_step(s, 5.0, op)
    b = imex_hcn222_step(s, 5.0, op, np.zeros(mesh.n_cells))
    np.testing.assert_array_equal(a.H, b.H)
    np.testing.assert_array_equal(a.q, b.q)


def test_hcn_without_transport_is_cn_rotation(rng):
    s = State(rng.uniform(1, 2, (3, 2)), rng.normal(size=(3, 2, 2)), np.zeros(3))
    op = lambda st_: (np.zeros_like(st_.H), np.zeros_like(st_.q))
    f = np.array([1e-4, -2e-4, 5e-5])
    out = imex_hcn222_step(s, 1000.0, op, f)
    u, v = coriolis_cn(s.q[..., 0], s.q[..., 1], f[:, None], 1000.0)
    np.testing.assert_allclose(out.q[..., 0], u, rtol=1e-14, atol=1e-16)
    np.testing.assert_allclose(out.q[..., 1], v, rtol=1e-14, atol=1e-16)
    np.testing.assert_array_equal(out.H, s.H)


def test_rest_with_rotation_is_unchanged():
    mesh = build_cartesian(4, 4, 4e3, 4e3, bc="slip")
    stack = LayerStack((1000.0, 1020.0), g=9.81)
    s = State.from_primitive(stack, np.full((16, 2), 100.0), 0.0, np.zeros(16))
    it = Integrator(mesh, stack, SchemeParams(order_space=2, order_time=2), CoriolisParams(1e-4, 2e-11))
    out, _ = it.step(s)
    np.testing.assert_array_equal(out.H, s.H)
    np.testing.assert_array_equal(out.q, 0.0)


def test_integrator_selects_scheme(rng):
    mesh, stack, s = _random_case(rng)
    dt = 2.0
    e = Integrator(mesh, stack, SchemeParams(order_time=1))
    h = Integrator(mesh, stack, SchemeParams(order_time=2))
    assert not np.array_equal(e.step(s, dt)[0].H, h.step(s, dt)[0].H)
    np.testing.assert_array_equal(h.step(s, dt)[0].H, heun_step(s, dt, h.operator(dt)).H)
    assert Integrator(mesh, stack, SchemeParams(), CoriolisParams()).coriolis is None
