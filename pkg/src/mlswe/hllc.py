"""Single-layer HLLC finite-volume reference solver.

Three-wave HLLC flux with two-rarefaction wave-speed estimates, hydrostatic
reconstruction for the bottom, and at second order the same least-squares
MUSCL traces on (eta, u, v) as the layered scheme, combined with Heun.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .kernels import SLIP, _barth, _slopes
from .mesh import Mesh
from .physics import LayerStack, State
from .scheme import SchemeParams, _kernel_geometry
from .timestepping import adaptive_dt, euler_step, heun_step


@njit(cache=True)
def hllc_flux(hl, unl, utl, hr, unr, utr, g):
    """Normal-frame flux (mass, normal momentum, tangential momentum)."""
    cl = math.sqrt(g * hl)
    cr = math.sqrt(g * hr)
    if hl > 0.0 and hr > 0.0:
        hs = (0.5 * (cl + cr) + 0.25 * (unl - unr)) ** 2 / g
        ql = math.sqrt(0.5 * (hs + hl) * hs) / hl if hs > hl else 1.0
        qr = math.sqrt(0.5 * (hs + hr) * hs) / hr if hs > hr else 1.0
        sl = unl - cl * ql
        sr = unr + cr * qr
    elif hl > 0.0:
        sl = unl - cl
        sr = unl + 2.0 * cl
    elif hr > 0.0:
        sl = unr - 2.0 * cr
        sr = unr + cr
    else:
        return 0.0, 0.0, 0.0
    fl0 = hl * unl
    fl1 = hl * unl * unl + 0.5 * g * hl * hl
    fr0 = hr * unr
    fr1 = hr * unr * unr + 0.5 * g * hr * hr
    if sl >= 0.0:
        return fl0, fl1, fl0 * utl
    if sr <= 0.0:
        return fr0, fr1, fr0 * utr
    inv = 1.0 / (sr - sl)
    f0 = (sr * fl0 - sl * fr0 + sl * sr * (hr - hl)) * inv
    f1 = (sr * fl1 - sl * fr1 + sl * sr * (hr * unr - hl * unl)) * inv
    denom = hr * (unr - sr) - hl * (unl - sl)
    s_star = (sl * hr * (unr - sr) - sr * hl * (unl - sl)) / denom if denom != 0.0 else 0.0
    f2 = f0 * (utl if s_star >= 0.0 else utr)
    return f0, f1, f2


@njit(cache=True)
def _hllc_tendency(h, q, zb, g, second, limiter, left, right, tag, normal, length, offset,
                   left_off, right_off, area, ls_inv):
    nc = h.shape[0]
    ne = left.shape[0]
    eta = np.empty((nc, 1))
    u = np.empty((nc, 1, 2))
    for k in range(nc):
        eta[k, 0] = h[k] + zb[k]
        u[k, 0, 0] = q[k, 0] / h[k]
        u[k, 0, 1] = q[k, 1] / h[k]
    grad_eta = np.zeros((nc, 1, 2))
    grad_u = np.zeros((nc, 1, 2, 2))
    if second:
        _slopes(eta, u, left, right, tag, normal, offset, ls_inv, grad_eta, grad_u)
        if limiter:
            _barth(eta, grad_eta, left, right, left_off, right_off)
    dh = np.zeros(nc)
    dq = np.zeros((nc, 2))
    tr_h = np.empty(2)
    tr_z = np.empty(2)
    tr_u = np.empty((2, 2))
    for e in range(ne):
        K = left[e]
        R = right[e]
        nx = normal[e, 0]
        ny = normal[e, 1]
        z_e = 0.5 * (zb[K] + zb[R]) if R >= 0 else zb[K]
        for side in range(2):
            if side == 1 and R < 0:
                break
            c = K if side == 0 else R
            if side == 0:
                ox = left_off[e, 0]
                oy = left_off[e, 1]
            else:
                ox = right_off[e, 0]
                oy = right_off[e, 1]
            if second:
                et = eta[c, 0] + grad_eta[c, 0, 0] * ox + grad_eta[c, 0, 1] * oy
                ht = et - z_e
                if ht > 0.0:
                    tr_h[side] = ht
                    tr_z[side] = z_e
                else:
                    tr_h[side] = h[c]
                    tr_z[side] = zb[c]
                tr_u[side, 0] = u[c, 0, 0] + grad_u[c, 0, 0, 0] * ox + grad_u[c, 0, 0, 1] * oy
                tr_u[side, 1] = u[c, 0, 1] + grad_u[c, 0, 1, 0] * ox + grad_u[c, 0, 1, 1] * oy
            else:
                tr_h[side] = h[c]
                tr_z[side] = zb[c]
                tr_u[side, 0] = u[c, 0, 0]
                tr_u[side, 1] = u[c, 0, 1]
        if R < 0:
            tr_h[1] = tr_h[0]
            tr_z[1] = tr_z[0]
            if tag[e] == SLIP:
                un = tr_u[0, 0] * nx + tr_u[0, 1] * ny
                tr_u[1, 0] = tr_u[0, 0] - 2.0 * un * nx
                tr_u[1, 1] = tr_u[0, 1] - 2.0 * un * ny
            else:
                tr_u[1, 0] = tr_u[0, 0]
                tr_u[1, 1] = tr_u[0, 1]
        # hydrostatic reconstruction
        zs = max(tr_z[0], tr_z[1])
        hls = max(0.0, tr_h[0] + tr_z[0] - zs)
        hrs = max(0.0, tr_h[1] + tr_z[1] - zs)
        unl = tr_u[0, 0] * nx + tr_u[0, 1] * ny
        utl = -tr_u[0, 0] * ny + tr_u[0, 1] * nx
        unr = tr_u[1, 0] * nx + tr_u[1, 1] * ny
        utr = -tr_u[1, 0] * ny + tr_u[1, 1] * nx
        f0, f1, f2 = hllc_flux(hls, unl, utl, hrs, unr, utr, g)
        fx = f1 * nx - f2 * ny
        fy = f1 * ny + f2 * nx
        m = length[e]
        # left cell: flux, bottom correction and centred bottom source
        cl = 0.5 * g * (tr_h[0] * tr_h[0] - hls * hls)
        sl = -0.5 * g * (tr_z[0] * tr_z[0] - 2.0 * eta[K, 0] * tr_z[0])
        dh[K] -= f0 * m
        dq[K, 0] -= (fx + (cl + sl) * nx) * m
        dq[K, 1] -= (fy + (cl + sl) * ny) * m
        if R >= 0:
            cr = 0.5 * g * (tr_h[1] * tr_h[1] - hrs * hrs)
            sr = -0.5 * g * (tr_z[1] * tr_z[1] - 2.0 * eta[R, 0] * tr_z[1])
            dh[R] += f0 * m
            dq[R, 0] += (fx + (cr + sr) * nx) * m
            dq[R, 1] += (fy + (cr + sr) * ny) * m
    for k in range(nc):
        ia = 1.0 / area[k]
        dh[k] *= ia
        dq[k, 0] *= ia
        dq[k, 1] *= ia
    return dh, dq


class HLLCSolver:
    """One-layer HLLC scheme; order 1 is forward Euler, order 2 MUSCL + Heun."""

    def __init__(self, mesh: Mesh, g: float = 9.81, order: int = 1, cfl: float = 0.5, limiter: bool = False,
                 rho: float = 1.0):
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        self.mesh, self.order, self.limiter = mesh, order, limiter
        self.stack = LayerStack((rho,), g=g)
        self.params = SchemeParams(cfl=cfl, order_space=order, order_time=order)

    def tendency(self, state: State):
        if state.H.shape[1] != 1:
            raise ValueError("the HLLC solver handles a single layer")
        if np.any(state.H <= 0):
            raise ValueError("dry cells are not supported by the HLLC solver")
        geo = _kernel_geometry(self.mesh)
        left, right, tag, normal, length, offset, left_off, right_off, _, _, area, ls_inv = geo
        rho = float(self.stack.rho[0])
        # masses and discharges carry the density; the Riemann problem is posed on thickness
        dh, dq = _hllc_tendency(np.ascontiguousarray(state.H[:, 0]) / rho, np.ascontiguousarray(state.q[:, 0, :]) / rho,
                                np.ascontiguousarray(state.zb, dtype=float), self.stack.g, self.order == 2,
                                self.limiter, left, right, tag, normal, length, offset, left_off, right_off,
                                area, ls_inv)
        return rho * dh[:, None], rho * dq[:, None, :]

    def dt(self, state: State) -> float:
        return adaptive_dt(state, self.mesh, self.params, self.stack)

    def step(self, state: State, dt: float | None = None) -> tuple[State, float]:
        if dt is None:
            dt = self.dt(state)
        op = lambda s: self.tendency(s)
        new = heun_step(state, dt, op) if self.order == 2 else euler_step(state, dt, op)
        if not np.all(np.isfinite(new.H)):
            raise FloatingPointError("non-finite values after time step")
        return new, dt
