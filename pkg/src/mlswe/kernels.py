"""Compiled edge loops for the layered scheme.

These fuse trace reconstruction, edge fluxes and cell accumulation into a
few passes over the edges. They follow the array formulation in
``scheme``/``reconstruction`` line by line; the test-suite checks both paths
against each other.
"""

from __future__ import annotations

import numpy as np
from numba import njit

SLIP = 1


@njit(cache=True)
def _cell_fields(H, q, zb, rho, irm, g, u, eta, phi):
    nc, L = H.shape
    for k in range(nc):
        for i in range(L):
            if H[k, i] > 0.0:
                u[k, i, 0] = q[k, i, 0] / H[k, i]
                u[k, i, 1] = q[k, i, 1] / H[k, i]
            else:
                u[k, i, 0] = 0.0
                u[k, i, 1] = 0.0
        c = 0.0
        for i in range(L - 1, -1, -1):
            c += H[k, i] / rho[i]
            eta[k, i] = zb[k] + c
        for i in range(L):
            s = 0.0
            for j in range(L):
                s += H[k, j] * irm[i, j]
            phi[k, i] = g * (zb[k] + s)


@njit(cache=True)
def _slopes(eta, u, left, right, tag, normal, offset, ls_inv, grad_eta, grad_u):
    """Least-squares gradients of eta_i, u_i and v_i with ghost neighbours."""
    nc, L = eta.shape
    ne = left.shape[0]
    rhs_e = np.zeros((nc, L, 2))
    rhs_u = np.zeros((nc, L, 2, 2))
    for e in range(ne):
        K = left[e]
        R = right[e]
        dx = offset[e, 0]
        dy = offset[e, 1]
        nx = normal[e, 0]
        ny = normal[e, 1]
        for i in range(L):
            if R >= 0:
                je = eta[R, i] - eta[K, i]
                ju = u[R, i, 0] - u[K, i, 0]
                jv = u[R, i, 1] - u[K, i, 1]
            else:
                je = 0.0
                if tag[e] == SLIP:
                    un = u[K, i, 0] * nx + u[K, i, 1] * ny
                    gu = u[K, i, 0] - 2.0 * un * nx
                    gv = u[K, i, 1] - 2.0 * un * ny
                    ju = gu - u[K, i, 0]
                    jv = gv - u[K, i, 1]
                else:
                    ju = 0.0
                    jv = 0.0
            rhs_e[K, i, 0] += je * dx
            rhs_e[K, i, 1] += je * dy
            rhs_u[K, i, 0, 0] += ju * dx
            rhs_u[K, i, 0, 1] += ju * dy
            rhs_u[K, i, 1, 0] += jv * dx
            rhs_u[K, i, 1, 1] += jv * dy
            if R >= 0:
                rhs_e[R, i, 0] += je * dx
                rhs_e[R, i, 1] += je * dy
                rhs_u[R, i, 0, 0] += ju * dx
                rhs_u[R, i, 0, 1] += ju * dy
                rhs_u[R, i, 1, 0] += jv * dx
                rhs_u[R, i, 1, 1] += jv * dy
    for k in range(nc):
        a = ls_inv[k, 0, 0]
        b = ls_inv[k, 0, 1]
        c = ls_inv[k, 1, 0]
        d = ls_inv[k, 1, 1]
        for i in range(L):
            grad_eta[k, i, 0] = a * rhs_e[k, i, 0] + b * rhs_e[k, i, 1]
            grad_eta[k, i, 1] = c * rhs_e[k, i, 0] + d * rhs_e[k, i, 1]
            for m in range(2):
                grad_u[k, i, m, 0] = a * rhs_u[k, i, m, 0] + b * rhs_u[k, i, m, 1]
                grad_u[k, i, m, 1] = c * rhs_u[k, i, m, 0] + d * rhs_u[k, i, m, 1]


@njit(cache=True)
def _barth(eta, grad, left, right, left_off, right_off):
    nc, L = eta.shape
    ne = left.shape[0]
    lo = eta.copy()
    hi = eta.copy()
    for e in range(ne):
        K = left[e]
        R = right[e]
        if R < 0:
            continue
        for i in range(L):
            if eta[R, i] > hi[K, i]:
                hi[K, i] = eta[R, i]
            if eta[R, i] < lo[K, i]:
                lo[K, i] = eta[R, i]
            if eta[K, i] > hi[R, i]:
                hi[R, i] = eta[K, i]
            if eta[K, i] < lo[R, i]:
                lo[R, i] = eta[K, i]
    theta = np.ones((nc, L))
    for e in range(ne):
        for side in range(2):
            if side == 0:
                C = left[e]
                ox = left_off[e, 0]
                oy = left_off[e, 1]
            else:
                C = right[e]
                if C < 0:
                    continue
                ox = right_off[e, 0]
                oy = right_off[e, 1]
            for i in range(L):
                delta = grad[C, i, 0] * ox + grad[C, i, 1] * oy
                if delta > 0.0:
                    r = (hi[C, i] - eta[C, i]) / delta
                elif delta < 0.0:
                    r = (lo[C, i] - eta[C, i]) / delta
                else:
                    r = 1.0
                if r < 0.0:
                    r = 0.0
                if r > 1.0:
                    r = 1.0
                if r < theta[C, i]:
                    theta[C, i] = r
    for k in range(nc):
        for i in range(L):
            grad[k, i, 0] *= theta[k, i]
            grad[k, i, 1] *= theta[k, i]


@njit(cache=True)
def _cap(grad, cap):
    flat = grad.reshape(-1, 2)
    for m in range(flat.shape[0]):
        nrm = np.sqrt(flat[m, 0] ** 2 + flat[m, 1] ** 2)
        if nrm > cap:
            f = cap / nrm
            flat[m, 0] *= f
            flat[m, 1] *= f


@njit(cache=True)
def _traces(eta, u, grad_eta, grad_u, H, zb, rho, irm, g, second,
            left, right, tag, normal, left_off, right_off, Ht, ut, pt):
    """Mass, velocity and potential traces; index 0 is the left side, 1 the right."""
    L = H.shape[1]
    ne = left.shape[0]
    etr = np.empty(L)
    for e in range(ne):
        K = left[e]
        R = right[e]
        for side in range(2):
            if side == 0:
                k = K
                ox = left_off[e, 0]
                oy = left_off[e, 1]
            else:
                if R < 0:
                    break
                k = R
                ox = right_off[e, 0]
                oy = right_off[e, 1]
            if second:
                z = 0.5 * (zb[K] + zb[R if R >= 0 else K])
                for i in range(L):
                    etr[i] = eta[k, i] + (grad_eta[k, i, 0] * ox + grad_eta[k, i, 1] * oy)
                for i in range(L):
                    lower = etr[i + 1] if i + 1 < L else z
                    val = rho[i] * (etr[i] - lower)
                    Ht[side, e, i] = val if val >= 0.0 else H[k, i]
                    ut[side, e, i, 0] = u[k, i, 0] + (grad_u[k, i, 0, 0] * ox + grad_u[k, i, 0, 1] * oy)
                    ut[side, e, i, 1] = u[k, i, 1] + (grad_u[k, i, 1, 0] * ox + grad_u[k, i, 1, 1] * oy)
            else:
                z = zb[k]
                for i in range(L):
                    Ht[side, e, i] = H[k, i]
                    ut[side, e, i, 0] = u[k, i, 0]
                    ut[side, e, i, 1] = u[k, i, 1]
            for i in range(L):
                acc = 0.0
                for j in range(L):
                    acc += Ht[side, e, j] * irm[i, j]
                pt[side, e, i] = g * (z + acc)
        if R < 0:
            nx = normal[e, 0]
            ny = normal[e, 1]
            for i in range(L):
                Ht[1, e, i] = Ht[0, e, i]
                pt[1, e, i] = pt[0, e, i]
                if tag[e] == SLIP:
                    un = ut[0, e, i, 0] * nx + ut[0, e, i, 1] * ny
                    ut[1, e, i, 0] = ut[0, e, i, 0] - 2.0 * un * nx
                    ut[1, e, i, 1] = ut[0, e, i, 1] - 2.0 * un * ny
                else:
                    ut[1, e, i, 0] = ut[0, e, i, 0]
                    ut[1, e, i, 1] = ut[0, e, i, 1]


@njit(cache=True)
def _fluxes(H, Ht, ut, pt, c_h, eps, gamma, alpha, dt,
            left, right, normal, length, ratio, inv_delta, area, adv, prs):
    nc, L = H.shape
    ne = left.shape[0]
    dH = np.zeros((nc, L))
    adv[:] = 0.0
    prs[:] = 0.0
    inv_eps2 = 1.0 / eps ** 2
    for e in range(ne):
        K = left[e]
        R = right[e]
        nx = normal[e, 0]
        ny = normal[e, 1]
        m = length[e]
        rl = ratio[K]
        rr = ratio[R] if R >= 0 else rl
        for i in range(L):
            qn_l = Ht[0, e, i] * (ut[0, e, i, 0] * nx + ut[0, e, i, 1] * ny)
            qn_r = Ht[1, e, i] * (ut[1, e, i, 0] * nx + ut[1, e, i, 1] * ny)
            h_over_delta = 0.25 * (Ht[0, e, i] * rl + Ht[1, e, i] * rr)
            F = 0.5 * (qn_l + qn_r) - gamma * dt * h_over_delta * 0.5 * (pt[1, e, i] - pt[0, e, i]) * inv_eps2
            ps = 0.5 * (pt[0, e, i] + pt[1, e, i]) - alpha * dt * c_h * inv_delta[e] * 0.5 * (qn_r - qn_l)
            fp = F if F > 0.0 else 0.0
            fm = F if F < 0.0 else 0.0
            ax = (ut[0, e, i, 0] * fp + ut[1, e, i, 0] * fm) * m
            ay = (ut[0, e, i, 1] * fp + ut[1, e, i, 1] * fm) * m
            px = ps * nx * m
            py = ps * ny * m
            dH[K, i] -= F * m
            adv[K, i, 0] += ax
            adv[K, i, 1] += ay
            prs[K, i, 0] += px
            prs[K, i, 1] += py
            if R >= 0:
                dH[R, i] += F * m
                adv[R, i, 0] -= ax
                adv[R, i, 1] -= ay
                prs[R, i, 0] -= px
                prs[R, i, 1] -= py
    dq = np.empty((nc, L, 2))
    for k in range(nc):
        ia = 1.0 / area[k]
        for i in range(L):
            dH[k, i] *= ia
            for c in range(2):
                dq[k, i, c] = -(adv[k, i, c] + H[k, i] * prs[k, i, c] * inv_eps2) * ia
    return dH, dq


def workspace(nc: int, ne: int, L: int) -> dict:
    """Scratch arrays reused across calls on one mesh."""
    return dict(u=np.empty((nc, L, 2)), eta=np.empty((nc, L)), phi=np.empty((nc, L)),
                grad_eta=np.zeros((nc, L, 2)), grad_u=np.zeros((nc, L, 2, 2)),
                Ht=np.empty((2, ne, L)), ut=np.empty((2, ne, L, 2)), pt=np.empty((2, ne, L)),
                adv=np.empty((nc, L, 2)), prs=np.empty((nc, L, 2)))


@njit(cache=True)
def tendency_kernel(H, q, zb, rho, irm, g, c_h, eps, gamma, alpha, dt,
                    left, right, tag, normal, length, offset, left_off, right_off,
                    ratio, inv_delta, area, ls_inv,
                    order, limiter, cap,
                    u, eta, phi, grad_eta, grad_u, Ht, ut, pt, adv, prs):
    _cell_fields(H, q, zb, rho, irm, g, u, eta, phi)
    second = order == 2
    if second:
        _slopes(eta, u, left, right, tag, normal, offset, ls_inv, grad_eta, grad_u)
        if limiter:
            _barth(eta, grad_eta, left, right, left_off, right_off)
        if cap > 0.0:
            _cap(grad_eta, cap)
            _cap(grad_u, cap)
    _traces(eta, u, grad_eta, grad_u, H, zb, rho, irm, g, second,
            left, right, tag, normal, left_off, right_off, Ht, ut, pt)
    return _fluxes(H, Ht, ut, pt, c_h, eps, gamma, alpha, dt,
                   left, right, normal, length, ratio, inv_delta, area, adv, prs)
