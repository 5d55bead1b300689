"""Edge traces: first-order cell values or monoslope MUSCL reconstruction.

Second-order slopes are least-squares fits on primitive variables. The
water column is reconstructed through the interface elevations eta_i rather
than the thicknesses, and thicknesses are recovered against the edge bottom
z_e = (z_K + z_Ke)/2, so a lake at rest yields identical traces on both
sides of every edge.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np

from .mesh import SLIP, Mesh
from .physics import LayerStack, masses_from_surfaces, potential, surfaces, velocity


class EdgeTraces(NamedTuple):
    H_left: np.ndarray      # (ne, L)
    H_right: np.ndarray
    u_left: np.ndarray      # (ne, L, 2)
    u_right: np.ndarray
    phi_left: np.ndarray    # (ne, L)
    phi_right: np.ndarray


def dot2(a, b):
    """Dot product over a trailing axis of length 2."""
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


def mirror_velocity(u_edge: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Ghost velocities: reflect the normal component across slip walls."""
    out = u_edge.copy()
    wall = np.nonzero(mesh.tag == SLIP)[0]
    if wall.size:
        n = mesh.normal[wall][:, None, :]
        un = dot2(out[wall], n)[..., None]
        out[wall] = out[wall] - 2.0 * un * n
    return out


def _right_values(values: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Gather right-cell values; boundary edges get a copy of the left cell."""
    return values[mesh.right_or_left]


def first_order_traces(H, u, zb, mesh: Mesh, stack: LayerStack) -> EdgeTraces:
    phi = potential(stack, H, zb)
    uL = u[mesh.left]
    uR = u[mesh.right_or_left]
    bnd = mesh.boundary
    if bnd.any():
        uR[bnd] = mirror_velocity(uL, mesh)[bnd]
    return EdgeTraces(H[mesh.left], _right_values(H, mesh), uL, uR,
                      phi[mesh.left], _right_values(phi, mesh))


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------

def _ls_inverse(mesh: Mesh) -> np.ndarray:
    def build():
        d = mesh.offset
        outer = d[:, :, None] * d[:, None, :]
        M = mesh.accumulate(outer, signed=False)
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
        scale = np.maximum(M[:, 0, 0] * M[:, 1, 1], np.finfo(float).tiny)
        singular = np.abs(det) <= 1e-12 * scale
        if singular.any():
            warnings.warn(f"{singular.sum()} cells have a collinear stencil; their slopes are set to zero",
                          RuntimeWarning, stacklevel=3)
        det = np.where(singular, 1.0, det)
        inv = np.empty_like(M)
        inv[:, 0, 0] = M[:, 1, 1] / det
        inv[:, 1, 1] = M[:, 0, 0] / det
        inv[:, 0, 1] = -M[:, 0, 1] / det
        inv[:, 1, 0] = -M[:, 1, 0] / det
        inv[singular] = 0.0
        return inv
    return mesh._cached("ls_inverse", build)


def least_squares_slopes(field: np.ndarray, mesh: Mesh, right_values: np.ndarray | None = None) -> np.ndarray:
    """Least-squares gradients of ``field`` (nc, ...) -> (nc, ..., 2).

    ``right_values`` overrides the neighbour values seen across each edge
    (used to feed ghost states); by default boundary ghosts copy the cell.
    """
    field = np.asarray(field, dtype=float)
    if right_values is None:
        right_values = _right_values(field, mesh)
    jump = right_values - field[mesh.left]
    d = mesh.offset.reshape((mesh.n_edges,) + (1,) * (field.ndim - 1) + (2,))
    rhs = mesh.accumulate(jump[..., None] * d, signed=False)
    inv = _ls_inverse(mesh).reshape((mesh.n_cells,) + (1,) * (field.ndim - 1) + (2, 2))
    out = np.empty_like(rhs)
    out[..., 0] = inv[..., 0, 0] * rhs[..., 0] + inv[..., 0, 1] * rhs[..., 1]
    out[..., 1] = inv[..., 1, 0] * rhs[..., 0] + inv[..., 1, 1] * rhs[..., 1]
    return out


def _slot_offsets(mesh: Mesh) -> np.ndarray:
    """x_e - x_K for every (cell, incidence slot); zero on padding."""
    def build():
        table, sign = mesh.incidence
        left_off, right_off = mesh.trace_offsets
        pad = np.zeros((1, 2))
        lo = np.concatenate([left_off, pad])[table]
        ro = np.concatenate([right_off, pad])[table]
        return np.where((sign > 0)[..., None], lo, np.where((sign < 0)[..., None], ro, 0.0))
    return mesh._cached("slot_offsets", build)


def barth_limiter(field: np.ndarray, gradients: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Scale each cell gradient so edge traces stay within neighbour min/max."""
    nbr = mesh.neighbours
    vals = field[nbr]                                   # (nc, d, ...)
    wmax = np.maximum(vals.max(axis=1), field)
    wmin = np.minimum(vals.min(axis=1), field)
    off = _slot_offsets(mesh)
    off = off.reshape(off.shape[:2] + (1,) * (field.ndim - 1) + (2,))
    delta = dot2(gradients[:, None], off)               # (nc, d, ...)
    up = (wmax - field)[:, None]
    down = (wmin - field)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(delta > 0, up / delta, np.where(delta < 0, down / delta, 1.0))
    theta = np.clip(ratio, 0.0, 1.0).min(axis=1)
    return gradients * theta[..., None]


def slope_cap(gradients: np.ndarray, h: float, r: float, C: float = 1.0) -> np.ndarray:
    """Clip gradient norms to C h^(1-r), keeping their direction."""
    cap = C * h ** (1.0 - r)
    norm = np.linalg.norm(gradients, axis=-1, keepdims=True)
    factor = np.where(norm > cap, cap / np.where(norm > 0, norm, 1.0), 1.0)
    return gradients * factor


# ---------------------------------------------------------------------------
# MUSCL traces
# ---------------------------------------------------------------------------

def _edge_values(values, grads, mesh: Mesh):
    left_off, right_off = mesh.trace_offsets
    shape = (mesh.n_edges,) + (1,) * (values.ndim - 1) + (2,)
    left = values[mesh.left] + dot2(grads[mesh.left], left_off.reshape(shape))
    rid = mesh.right_or_left
    right = values[rid] + dot2(grads[rid], right_off.reshape(shape))
    return left, right


def muscl_traces(H, u, zb, mesh: Mesh, stack: LayerStack, limiter: bool = False,
                 cap_r: float | None = None, cap_c: float = 1.0) -> EdgeTraces:
    eta = surfaces(stack, H, zb)
    bnd = mesh.boundary

    u_right_cells = u[mesh.right_or_left]
    if bnd.any():
        u_right_cells[bnd] = mirror_velocity(u[mesh.left], mesh)[bnd]
    g_eta = least_squares_slopes(eta, mesh)
    g_u = least_squares_slopes(u, mesh, right_values=u_right_cells)
    if limiter:
        g_eta = barth_limiter(eta, g_eta, mesh)
    if cap_r is not None:
        hs = mesh.characteristic_length()
        g_eta = slope_cap(g_eta, hs, cap_r, cap_c)
        g_u = slope_cap(g_u, hs, cap_r, cap_c)

    eta_l, eta_r = _edge_values(eta, g_eta, mesh)
    u_l, u_r = _edge_values(u, g_u, mesh)
    z_e = 0.5 * (zb[mesh.left] + zb[mesh.right_or_left])
    if bnd.any():
        eta_r[bnd] = eta_l[bnd]
        u_r[bnd] = mirror_velocity(u_l, mesh)[bnd]

    H_l = masses_from_surfaces(stack, eta_l, z_e)
    H_r = masses_from_surfaces(stack, eta_r, z_e)
    # negative reconstructed thickness: fall back to the cell value
    bad_l = H_l < 0
    bad_r = H_r < 0
    if bad_l.any():
        H_l = np.where(bad_l, H[mesh.left], H_l)
    if bad_r.any():
        H_r = np.where(bad_r, _right_values(H, mesh), H_r)
    return EdgeTraces(H_l, H_r, u_l, u_r, potential(stack, H_l, z_e), potential(stack, H_r, z_e))


def edge_traces(H, q, zb, mesh: Mesh, stack: LayerStack, order: int = 1, limiter: bool = False,
                cap_r: float | None = None, cap_c: float = 1.0) -> EdgeTraces:
    u = velocity(H, q)
    if order == 1:
        return first_order_traces(H, u, zb, mesh, stack)
    if order == 2:
        return muscl_traces(H, u, zb, mesh, stack, limiter=limiter, cap_r=cap_r, cap_c=cap_c)
    raise ValueError(f"unsupported spatial order {order}")
