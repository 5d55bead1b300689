"""Explicit energy-stable update for the layered shallow-water system.

Every edge is evaluated once. The stabilised normal mass flux

    F.n = mean(Hu).n - gamma dt (H/Delta)_e (Phi_Ke - Phi_K) / (2 eps^2)

and the corrected potential

    Phi* = mean(Phi) - alpha dt (C_H / Delta_e) (q_Ke - q_K).n / 2

are shared by both neighbours with opposite orientation. Momentum advection
is upwinded on the sign of F.n and the pressure force uses the cell mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .physics import LayerStack, State, velocity
from .reconstruction import EdgeTraces, dot2, edge_traces


class PositivityError(RuntimeError):
    """Raised when an update produces a negative layer mass."""


@dataclass(frozen=True)
class SchemeParams:
    gamma: float = 0.5
    alpha: float = 0.5
    cfl: float = 0.5
    order_space: int = 1
    order_time: int = 1
    limiter: bool = False
    slope_cap_r: float | None = None
    slope_cap_c: float = 1.0

    def __post_init__(self):
        if self.gamma < 0 or self.alpha < 0:
            raise ValueError("gamma and alpha must be non-negative")
        if not self.cfl > 0:
            raise ValueError("cfl must be positive")
        if self.order_space not in (1, 2) or self.order_time not in (1, 2):
            raise ValueError("orders must be 1 or 2")
        if self.slope_cap_r is not None and not 0 < self.slope_cap_r <= 1:
            raise ValueError("slope cap exponent must lie in (0, 1]")


# ---------------------------------------------------------------------------
# Edge formulas
# ---------------------------------------------------------------------------

def mass_flux(qn_left, qn_right, H_left, H_right, phi_left, phi_right,
              ratio_left, ratio_right, gamma, dt, eps=1.0):
    """Normal component of the stabilised mass flux.

    ``ratio_*`` are perimeter/area of the two cells, so the mass weight is
    (H/Delta)_e = (H_K r_K / 2 + H_Ke r_Ke / 2) / 2.
    """
    h_over_delta = 0.25 * (H_left * ratio_left + H_right * ratio_right)
    return 0.5 * (qn_left + qn_right) - gamma * dt * h_over_delta * 0.5 * (phi_right - phi_left) / eps**2


def corrected_potential(phi_left, phi_right, qn_left, qn_right, inv_delta, c_h, alpha, dt):
    return 0.5 * (phi_left + phi_right) - alpha * dt * c_h * inv_delta * 0.5 * (qn_right - qn_left)


def edge_fluxes(tr: EdgeTraces, mesh: Mesh, stack: LayerStack, params: SchemeParams, dt: float):
    """Normal mass flux and corrected potential, each (ne, L)."""
    n = mesh.normal[:, None, :]
    qn_l = tr.H_left * dot2(tr.u_left, n)
    qn_r = tr.H_right * dot2(tr.u_right, n)
    r_l, r_r = mesh.side_ratios
    flux = mass_flux(qn_l, qn_r, tr.H_left, tr.H_right, tr.phi_left, tr.phi_right,
                     r_l[:, None], r_r[:, None], params.gamma, dt, stack.eps)
    phi_star = corrected_potential(tr.phi_left, tr.phi_right, qn_l, qn_r,
                                   mesh.inv_delta[:, None], stack.c_h, params.alpha, dt)
    return flux, phi_star


BACKEND = "numba"


def _kernel_geometry(mesh: Mesh):
    def build():
        from .reconstruction import _ls_inverse
        left_off, right_off = mesh.trace_offsets
        c = np.ascontiguousarray
        return (c(mesh.left, dtype=np.int64), c(mesh.right, dtype=np.int64), c(mesh.tag, dtype=np.int64),
                c(mesh.normal), c(mesh.edge_length), c(mesh.offset), c(left_off), c(right_off),
                c(mesh.boundary_ratio), c(mesh.inv_delta), c(mesh.area), c(_ls_inverse(mesh)))
    return mesh._cached("kernel_geometry", build)


def tendency(state: State, mesh: Mesh, stack: LayerStack, params: SchemeParams, dt: float,
             backend: str | None = None):
    """Right-hand side (dH/dt, dq/dt) of the explicit update with step ``dt``.

    ``backend`` selects the compiled edge loop ("numba", default) or the
    array formulation ("numpy").
    """
    backend = backend or BACKEND
    if backend == "numpy":
        return tendency_reference(state, mesh, stack, params, dt)
    if backend != "numba":
        raise ValueError(f"unknown backend {backend!r}")
    from .kernels import tendency_kernel, workspace
    L = state.H.shape[1]
    work = mesh._cached(("workspace", L), lambda: workspace(mesh.n_cells, mesh.n_edges, L))
    cap = 0.0
    if params.slope_cap_r is not None:
        cap = params.slope_cap_c * mesh.characteristic_length() ** (1.0 - params.slope_cap_r)
    return tendency_kernel(np.ascontiguousarray(state.H, dtype=float), np.ascontiguousarray(state.q, dtype=float),
                           np.ascontiguousarray(state.zb, dtype=float),
                           stack.rho, np.ascontiguousarray(stack.inv_rho_max), stack.g, stack.c_h, stack.eps,
                           float(params.gamma), float(params.alpha), float(dt),
                           *_kernel_geometry(mesh), params.order_space, params.limiter, cap, **work)


def tendency_reference(state: State, mesh: Mesh, stack: LayerStack, params: SchemeParams, dt: float):
    """Array formulation of :func:`tendency`."""
    tr = edge_traces(state.H, state.q, state.zb, mesh, stack, order=params.order_space,
                     limiter=params.limiter, cap_r=params.slope_cap_r, cap_c=params.slope_cap_c)
    flux, phi_star = edge_fluxes(tr, mesh, stack, params, dt)
    length = mesh.edge_length[:, None]
    outgoing = np.maximum(flux, 0.0)[..., None]
    incoming = np.minimum(flux, 0.0)[..., None]
    advection = (tr.u_left * outgoing + tr.u_right * incoming) * length[..., None]
    pressure = phi_star[..., None] * mesh.normal[:, None, :] * length[..., None]

    inv_area = 1.0 / mesh.area
    dH = -mesh.accumulate(flux * length) * inv_area[:, None]
    dq = -(mesh.accumulate(advection)
           + state.H[..., None] * mesh.accumulate(pressure) / stack.eps**2) * inv_area[:, None, None]
    return dH, dq


def apply(state: State, rate, dt: float, check: bool = True) -> State:
    """state + dt * rate, with the positivity check and dry-cell momentum reset."""
    dH, dq = rate
    H = state.H + dt * dH
    q = state.q + dt * dq
    if check and np.any(H < 0):
        k, i = np.unravel_index(np.argmin(H), H.shape)
        raise PositivityError(f"negative mass {H[k, i]:.3e} in cell {k}, layer {i + 1}")
    dry = H == 0
    if dry.any():
        q[dry] = 0.0
    return State(H, q, state.zb)


def step_first_order(state: State, mesh: Mesh, params: SchemeParams, stack: LayerStack, dt: float) -> State:
    """One forward-Euler step of the (first- or second-order in space) scheme."""
    return apply(state, tendency(state, mesh, stack, params, dt), dt)


def cell_velocities(state: State) -> np.ndarray:
    return velocity(state.H, state.q)
