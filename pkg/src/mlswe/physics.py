"""Layer stack, pressure potential and mechanical energy.

Masses are the effective masses H_i = rho_i h_i (layer 1 on top). The
potential is linear in the masses, Phi = g z_b + M H, with the constant
symmetric matrix M_ij = g / max(rho_i, rho_j), which is the Hessian of the
potential energy 1/2 H.M.H + g z_b sum(H).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class LayerStack:
    rho: np.ndarray
    g: float = 9.81
    eps: float = 1.0
    hessian: np.ndarray = field(init=False, repr=False)
    c_h: float = field(init=False)

    def __init__(self, rho=(1.0,), g: float = 9.81, eps: float = 1.0):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if rho.ndim != 1 or rho.size < 1:
            raise ValueError("densities must be a non-empty 1-D sequence")
        if np.any(rho <= 0):
            raise ValueError("densities must be positive")
        if not (g > 0 and eps > 0):
            raise ValueError("g and eps must be positive")
        if np.any(np.diff(rho) < 0):
            warnings.warn("densities decrease with depth; the layered system may lose hyperbolicity",
                          RuntimeWarning, stacklevel=2)
        rho.setflags(write=False)
        hess = g / np.maximum.outer(rho, rho)
        hess.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "g", float(g))
        object.__setattr__(self, "eps", float(eps))
        object.__setattr__(self, "hessian", hess)
        object.__setattr__(self, "c_h", float(np.linalg.norm(hess, 2)))

    @property
    def n_layers(self) -> int:
        return self.rho.size

    @property
    def inv_rho_max(self) -> np.ndarray:
        return self.hessian / self.g


def hessian(stack: LayerStack) -> tuple[np.ndarray, float]:
    return stack.hessian, stack.c_h


def potential(stack: LayerStack, H: np.ndarray, zb) -> np.ndarray:
    """Per-layer potential for masses ``H`` (..., L) over bottom ``zb`` (...).

    Written as g (z_b + sum_j H_j / rho_max(i, j)) so that a lake at rest with
    unit density gives a bit-exact uniform potential.
    """
    zb = np.asarray(zb, dtype=float)
    return stack.g * (zb[..., None] + H @ stack.inv_rho_max.T)


def layer_heights(stack: LayerStack, H: np.ndarray) -> np.ndarray:
    return H / stack.rho


def surfaces(stack: LayerStack, H: np.ndarray, zb) -> np.ndarray:
    """Interface elevations eta_i = z_b + sum_{k>=i} h_k, shape (..., L)."""
    h = layer_heights(stack, H)
    zb = np.asarray(zb, dtype=float)
    below = np.cumsum(h[..., ::-1], axis=-1)[..., ::-1]
    return zb[..., None] + below


def masses_from_surfaces(stack: LayerStack, eta: np.ndarray, zb) -> np.ndarray:
    """Inverse of :func:`surfaces`: H_i = rho_i (eta_i - eta_{i+1}), eta_{L+1} = z_b."""
    zb = np.asarray(zb, dtype=float)
    lower = np.concatenate([eta[..., 1:], zb[..., None] * np.ones(eta.shape[:-1] + (1,))], axis=-1)
    return stack.rho * (eta - lower)


@dataclass
class State:
    """Cell masses H (nc, L), momenta q = H u (nc, L, 2) and bottom zb (nc,)."""

    H: np.ndarray
    q: np.ndarray
    zb: np.ndarray

    @classmethod
    def from_primitive(cls, stack: LayerStack, h, u, zb) -> "State":
        h = np.asarray(h, dtype=float)
        H = h * stack.rho
        u = np.broadcast_to(np.asarray(u, dtype=float), H.shape + (2,))
        return cls(H=H, q=H[..., None] * u, zb=np.asarray(zb, dtype=float).copy())

    def copy(self) -> "State":
        return State(self.H.copy(), self.q.copy(), self.zb.copy())

    @property
    def velocity(self) -> np.ndarray:
        return velocity(self.H, self.q)

    def heights(self, stack: LayerStack) -> np.ndarray:
        return layer_heights(stack, self.H)

    def surfaces(self, stack: LayerStack) -> np.ndarray:
        return surfaces(stack, self.H, self.zb)


def velocity(H: np.ndarray, q: np.ndarray) -> np.ndarray:
    """q / H with zero velocity in empty cells."""
    wet = H > 0
    safe = np.where(wet, H, 1.0)
    return np.where(wet[..., None], q / safe[..., None], 0.0)


def mechanical_energy(stack: LayerStack, state: State, mesh, reference: State | None = None):
    """Discrete mechanical energy and its kinetic part, both scaled by 1/rho_L.

    E = sum_K m_K [ 1/2 sum_i H_i |u_i|^2 + (1/2 H.M.H + g z_b sum_i H_i) / eps^2 ] / rho_L.

    With a ``reference`` state the potential part is measured relative to it,
    using the exact expansion Phi_ref.dH + 1/2 dH.M.dH, which keeps full
    relative precision for small perturbations of a deep rest state.
    """
    H, q = state.H, state.q
    u = velocity(H, q)
    kin_cell = 0.5 * np.sum(H * np.sum(u * u, axis=-1), axis=-1)
    if reference is None:
        pot_cell = 0.5 * np.einsum("ki,ij,kj->k", H, stack.hessian, H) + stack.g * state.zb * H.sum(axis=-1)
    else:
        dH = H - reference.H
        phi_ref = potential(stack, reference.H, reference.zb)
        pot_cell = np.sum(phi_ref * dH, axis=-1) + 0.5 * np.einsum("ki,ij,kj->k", dH, stack.hessian, dH)
    scale = 1.0 / stack.rho[-1]
    kinetic = scale * float(np.dot(mesh.area, kin_cell))
    total = kinetic + scale * float(np.dot(mesh.area, pot_cell)) / stack.eps**2
    return total, kinetic


def layer_masses(state: State, mesh) -> np.ndarray:
    return mesh.area @ state.H
