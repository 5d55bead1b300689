"""Time integrators: forward Euler, Heun, Coriolis rotation and H-CN(2,2,2)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import Mesh
from .physics import LayerStack, State
from .scheme import PositivityError, SchemeParams, apply, tendency

Operator = Callable[[State], tuple]


@dataclass(frozen=True)
class CoriolisParams:
    f0: float = 0.0
    beta: float = 0.0
    y_ref: float = 0.0

    def at(self, y: np.ndarray) -> np.ndarray:
        return self.f0 + self.beta * (np.asarray(y) - self.y_ref)

    @property
    def active(self) -> bool:
        return self.f0 != 0.0 or self.beta != 0.0


def adaptive_dt(state: State, mesh: Mesh, params: SchemeParams, stack: LayerStack) -> float:
    """CFL step calibrated on the barotropic gravity wave.

    dt = cfl * min_K 2 m_K / (m_dK (|u_bar| + sqrt(g h_bar) / eps)) with the
    total thickness h_bar and the thickness-weighted mean velocity u_bar.
    """
    if mesh.n_cells == 0:
        raise ValueError("empty mesh")
    h = state.heights(stack)
    h_bar = h.sum(axis=1)
    if not np.any(h_bar > 0):
        raise ValueError("all cells are dry")
    wet = h_bar > 0
    u = state.velocity
    u_bar = np.einsum("ki,kij->kj", h, u)[wet] / h_bar[wet, None]
    speed = np.linalg.norm(u_bar, axis=1) + np.sqrt(stack.g * h_bar[wet]) / stack.eps
    return float(params.cfl * np.min(2.0 * mesh.area[wet] / (mesh.perimeter[wet] * speed)))


def _combine(a: State, b: State, wa: float, wb: float) -> State:
    return State(wa * a.H + wb * b.H, wa * a.q + wb * b.q, a.zb)


def euler_step(state: State, dt: float, operator: Operator) -> State:
    return apply(state, operator(state), dt)


def heun_step(state: State, dt: float, operator: Operator) -> State:
    """U1 = U + dt L(U), U2 = U1 + dt L(U1), result (U + U2)/2."""
    u1 = apply(state, operator(state), dt)
    u2 = apply(u1, operator(u1), dt)
    out = State(0.5 * (state.H + u2.H), 0.5 * (state.q + u2.q), state.zb)
    return out


def coriolis_exact(u, v, f, dt):
    """Exact rotation of (u, v) by the angle f dt (clockwise for f > 0)."""
    c, s = np.cos(f * dt), np.sin(f * dt)
    return c * u + s * v, c * v - s * u


def coriolis_cn(u, v, f, dt):
    """Crank-Nicolson step of du/dt = f v, dv/dt = -f u (a Cayley rotation)."""
    s = 0.5 * f * dt
    ru = u + s * v
    rv = v - s * u
    d = 1.0 + s * s
    return (ru + s * rv) / d, (rv - s * ru) / d


def _coriolis_stage(u1: State, un: State, f_cell: np.ndarray, dt: float) -> State:
    """U2 = U1 + dt/2 C(Un) + dt/2 C(U2), solved in closed form per cell."""
    s = (0.5 * dt * f_cell)[:, None]
    qn, q1 = un.q, u1.q
    ru = q1[..., 0] + s * qn[..., 1]
    rv = q1[..., 1] - s * qn[..., 0]
    d = 1.0 + s * s
    q2 = np.empty_like(q1)
    q2[..., 0] = (ru + s * rv) / d
    q2[..., 1] = (rv - s * ru) / d
    return State(u1.H.copy(), q2, u1.zb)


def imex_hcn222_step(state: State, dt: float, operator: Operator, f_cell: np.ndarray) -> State:
    """Heun for transport with a Crank-Nicolson Coriolis stage in between."""
    u1 = apply(state, operator(state), dt)
    u2 = _coriolis_stage(u1, state, np.asarray(f_cell, dtype=float), dt)
    u3 = apply(u2, operator(u2), dt)
    H = 0.5 * ((state.H + u3.H) + (u2.H - u1.H))
    q = 0.5 * ((state.q + u3.q) + (u2.q - u1.q))
    return State(H, q, state.zb)


class Integrator:
    """Bundles the spatial operator and chooses the time scheme from the orders."""

    def __init__(self, mesh: Mesh, stack: LayerStack, params: SchemeParams,
                 coriolis: CoriolisParams | None = None):
        self.mesh, self.stack, self.params = mesh, stack, params
        self.coriolis = coriolis if coriolis is not None and coriolis.active else None
        self.f_cell = self.coriolis.at(mesh.centroid[:, 1]) if self.coriolis else None

    def operator(self, dt: float) -> Operator:
        return lambda s: tendency(s, self.mesh, self.stack, self.params, dt)

    def dt(self, state: State) -> float:
        return adaptive_dt(state, self.mesh, self.params, self.stack)

    def step(self, state: State, dt: float | None = None) -> tuple[State, float]:
        if dt is None:
            dt = self.dt(state)
        op = self.operator(dt)
        if self.coriolis is not None:
            new = imex_hcn222_step(state, dt, op, self.f_cell)
        elif self.params.order_time == 2:
            new = heun_step(state, dt, op)
        else:
            new = euler_step(state, dt, op)
        if not (np.all(np.isfinite(new.H)) and np.all(np.isfinite(new.q))):
            raise FloatingPointError("non-finite values after time step")
        if np.any(new.H < 0):
            raise PositivityError("negative mass after time step")
        return new, dt
