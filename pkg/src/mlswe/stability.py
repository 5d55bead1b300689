"""Stability bounds and von Neumann analysis of the linearised scheme.

The amplification matrix is built from per-edge symbols: every edge
quantity is a combination of the two traces, whose Fourier multipliers are
1 and e^{i theta} at first order, or the unlimited centred MUSCL traces at
second order. Differencing an edge quantity across a cell multiplies it by
(1 - e^{-i theta}). At first order this reproduces the classical closed form,
which is available separately as :func:`amplification_matrix_closed_form`.

CFL numbers here are physical Courant numbers c dt / dx per direction, with
c = |u_bar| + sqrt(g h_total).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

N_THETA = 256
TOL = 1e-9


# ---------------------------------------------------------------------------
# Nonlinear energy bounds
# ---------------------------------------------------------------------------

def rho_epsilon(dt: float, eps: float, c_h: float, delta_e: float, h_over_delta: float) -> float:
    """rho_eps = sqrt(2 dt^2 / eps^2 * C_H / Delta_e * (H/Delta)_e)."""
    for v in (dt, eps, c_h, delta_e, h_over_delta):
        if not v > 0:
            raise ValueError("inputs must be positive")
    return math.sqrt(2.0 * dt * dt / (eps * eps) * c_h / delta_e * h_over_delta)


def guaranteed_constants() -> tuple[float, float]:
    """(gamma, alpha) for which energy control holds unconditionally under the CFL bound."""
    return 4.0, 2.0


class RelaxedBounds(NamedTuple):
    gamma_lo: float
    gamma_hi: float
    alpha_lo: float
    alpha_hi: float

    @property
    def gamma_empty(self) -> bool:
        return math.isnan(self.gamma_lo)

    @property
    def alpha_empty(self) -> bool:
        return math.isnan(self.alpha_lo)


def _interval(r2: float, k: float) -> tuple[float, float]:
    """Endpoints (1 -+ sqrt(1 - k r2)) / (k r2), or nan for an empty interval."""
    disc = 1.0 - k * r2
    if disc < 0:
        return math.nan, math.nan
    root = math.sqrt(disc)
    lo = 1.0 / (1.0 + root)            # rationalised form, finite as r2 -> 0
    hi = math.inf if r2 == 0 else (1.0 + root) / (k * r2)
    return lo, hi


def relaxed_bounds(rho_eps: float) -> RelaxedBounds:
    """Admissible intervals for gamma and alpha at a given rho_eps.

    gamma in [(1 - s)/rho^2, (1 + s)/rho^2] with s = sqrt(1 - rho^2),
    alpha in [(1 - t)/(2 rho^2), (1 + t)/(2 rho^2)] with t = sqrt(1 - 2 rho^2).
    Upper endpoints are ``inf`` at rho = 0; an empty interval is (nan, nan).
    """
    if rho_eps < 0:
        raise ValueError("rho_eps must be non-negative")
    r2 = rho_eps * rho_eps
    g_lo, g_hi = _interval(r2, 1.0)
    a_lo, a_hi = _interval(r2, 2.0)
    return RelaxedBounds(g_lo, g_hi, a_lo, a_hi)


# ---------------------------------------------------------------------------
# Amplification matrix
# ---------------------------------------------------------------------------

def _trace_symbols(theta: float, order: int) -> tuple[complex, complex]:
    """Fourier multipliers of the left and right traces at edge k+1/2."""
    e = np.exp(1j * theta)
    if order == 1:
        return 1.0 + 0j, e
    if order == 2:
        s = 0.5j * math.sin(theta)      # centred slope times half a cell
        return 1.0 + s, e * (1.0 - s)
    raise ValueError("order_space must be 1 or 2")


def _first_order_operator(theta, lam, gamma, alpha, u_bar, H_bar, M, c_h, order_space, alpha_factor):
    """One forward-Euler step G = I + dt L for the linearised layered system.

    Unknowns are ordered (H_1..H_L, u_1..u_L, v_1..v_L) in 2D and
    (H, u) in 1D. ``theta`` and ``u_bar`` have one entry per direction.
    """
    dim = len(theta)
    L = H_bar.size
    n = (1 + dim) * L
    G = np.eye(n, dtype=complex)
    Hd = np.diag(H_bar)
    I = np.eye(L)
    for d in range(dim):
        tl, tr = _trace_symbols(theta[d], order_space)
        diff = 1.0 - np.exp(-1j * theta[d])        # edge k+1/2 minus edge k-1/2
        mean = 0.5 * (tl + tr)
        jump = tr - tl
        ub = u_bar[d]
        up = tl if ub >= 0 else tr
        # mass flux: mean(H u) + u_bar mean(H) - gamma lam Hbar M jump(H)
        # (the edge difference dPhi/2 times 2 (H/Delta) dx collapses to jump / 1)
        row_H = slice(0, L)
        col_H = slice(0, L)
        col_u = slice((1 + d) * L, (2 + d) * L)
        flux_H = ub * mean * I - gamma * lam * (Hd @ M) * jump
        flux_u = mean * Hd
        G[row_H, col_H] -= lam * diff * flux_H
        G[row_H, col_u] -= lam * diff * flux_u
        # corrected potential: M mean(H) - alpha' lam C_H (Hbar jump(u) + u_bar jump(H)) / 2 * 2
        a = alpha_factor * alpha
        phi_H = M * mean - a * lam * c_h * ub * jump * I
        phi_u = -a * lam * c_h * jump * Hd
        G[col_u, col_H] -= lam * diff * phi_H
        G[col_u, col_u] -= lam * diff * phi_u
        # upwind advection of every velocity component by u_bar
        for m in range(dim):
            col_m = slice((1 + m) * L, (2 + m) * L)
            G[col_m, col_m] -= lam * ub * diff * up * I
    return G


def amplification_matrix(theta, cfl: float, gamma: float, alpha: float, u_bar=0.0, h_bar=1.0,
                         g: float = 1.0, order_space: int = 1, order_time: int = 1, dim: int = 1,
                         rho: Sequence[float] | None = None, alpha_factor: float | None = None) -> np.ndarray:
    """Amplification matrix of the linearised scheme around a uniform state.

    ``theta``: k dx (scalar in 1D, pair in 2D). ``h_bar``: layer thickness,
    scalar or one per layer with densities ``rho``. ``alpha_factor`` scales
    the potential correction relative to the one-dimensional stencil; by
    default 1 in 1D and 2 in 2D, which is what the edge constant of a
    Cartesian cell produces.
    """
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.size == 1 and dim == 2:
        th = np.array([th[0], th[0]])
    if th.size != dim:
        raise ValueError("theta must have one entry per direction")
    ub = np.atleast_1d(np.asarray(u_bar, dtype=float))
    if ub.size == 1 and dim == 2:
        ub = np.array([ub[0], 0.0])
    if rho is None:
        rho = np.ones(np.atleast_1d(h_bar).size)
    rho = np.asarray(rho, dtype=float)
    h = np.broadcast_to(np.asarray(h_bar, dtype=float), rho.shape)
    M = g / np.maximum.outer(rho, rho)
    c_h = float(np.linalg.norm(M, 2))
    H_bar = rho * h
    speed = float(np.linalg.norm(ub)) + math.sqrt(g * h.sum())
    lam = cfl / speed
    if alpha_factor is None:
        alpha_factor = 1.0 if dim == 1 else 2.0
    G = _first_order_operator(th, lam, gamma, alpha, ub, H_bar, M, c_h, order_space, alpha_factor)
    if order_time == 2:
        I = np.eye(G.shape[0])
        return 0.5 * (I + G @ G)
    if order_time != 1:
        raise ValueError("order_time must be 1 or 2")
    return G


def amplification_matrix_closed_form(theta: float, cfl: float, gamma: float, alpha: float,
                                     u_bar: float = 0.0, h_bar: float = 1.0, g: float = 1.0) -> np.ndarray:
    """Closed-form 2x2 first-order matrix for one layer in 1D (unit density)."""
    c = abs(u_bar) + math.sqrt(g * h_bar)
    lam = cfl / c
    s, cm1 = math.sin(theta), math.cos(theta) - 1.0
    adv = u_bar * (1.0 - np.exp(-1j * theta)) if u_bar >= 0 else u_bar * (np.exp(1j * theta) - 1.0)
    return np.array([
        [1 - 1j * lam * u_bar * s + 2 * gamma * lam**2 * g * h_bar * cm1, -1j * lam * h_bar * s],
        [-1j * lam * g * s + 2 * alpha * lam**2 * g * u_bar * cm1,
         1 - lam * adv + 2 * alpha * lam**2 * g * h_bar * cm1],
    ])


def spectral_radius(G: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(G))))


def theta_grid(n: int = N_THETA) -> np.ndarray:
    """n uniform wavenumbers in (0, 2 pi)."""
    return 2.0 * np.pi * (np.arange(n) + 0.5) / n


@dataclass(frozen=True)
class StabilityPoint:
    cfl: float
    gamma: float
    alpha: float
    rho_max: float
    stable: bool


def max_amplification(cfl: float, gamma: float, alpha: float, n_theta: int = N_THETA, **kw) -> float:
    """Largest spectral radius over the wavenumber grid (a tensor grid in 2D)."""
    thetas = theta_grid(n_theta)
    dim = kw.get("dim", 1)
    worst = 0.0
    if dim == 1:
        for t in thetas:
            worst = max(worst, spectral_radius(amplification_matrix(t, cfl, gamma, alpha, **kw)))
    else:
        # the symbol is even in each wavenumber when u_bar = 0; sample the full grid otherwise
        sub = thetas if np.any(np.asarray(kw.get("u_bar", 0.0)) != 0) else thetas[: (n_theta + 1) // 2]
        for tx in sub:
            for ty in sub:
                worst = max(worst, spectral_radius(amplification_matrix((tx, ty), cfl, gamma, alpha, **kw)))
    return worst


def split_constants(total: float, policy: str) -> tuple[float, float]:
    """(gamma, alpha) from gamma + alpha under the policy 'equal' or one of 'gamma-only'/'alpha-only'."""
    if policy == "equal":
        return 0.5 * total, 0.5 * total
    if policy in ("gamma-only", "product-zero"):
        return total, 0.0
    if policy == "alpha-only":
        return 0.0, total
    raise ValueError(f"unknown policy {policy!r}")


def scan_stability(cfls: Iterable[float], sums: Iterable[float], policy: str = "equal",
                   n_theta: int = N_THETA, tol: float = TOL, **kw) -> list[StabilityPoint]:
    """Stability verdict on a (CFL, gamma + alpha) grid."""
    out = []
    for cfl in cfls:
        for total in sums:
            gamma, alpha = split_constants(total, policy)
            r = max_amplification(cfl, gamma, alpha, n_theta=n_theta, **kw)
            out.append(StabilityPoint(float(cfl), gamma, alpha, r, r <= 1.0 + tol))
    return out


def scan_constants(cfl: float, gammas: Iterable[float], alphas: Iterable[float],
                   n_theta: int = N_THETA, tol: float = TOL, **kw) -> list[StabilityPoint]:
    """Stability verdict on a (gamma, alpha) grid at fixed CFL."""
    out = []
    for gamma in gammas:
        for alpha in alphas:
            r = max_amplification(cfl, gamma, alpha, n_theta=n_theta, **kw)
            out.append(StabilityPoint(float(cfl), float(gamma), float(alpha), r, r <= 1.0 + tol))
    return out


def max_stable_cfl(gamma: float, alpha: float, lo: float = 0.0, hi: float = 4.0, n_theta: int = N_THETA,
                   tol: float = TOL, iters: int = 40, **kw) -> float:
    """Largest CFL with all sampled amplification factors within 1 + tol (bisection).

    Assumes the stable set is an interval starting near zero.
    """
    def ok(c):
        return max_amplification(c, gamma, alpha, n_theta=n_theta, **kw) <= 1.0 + tol
    if ok(hi):
        return hi
    probe = 1e-3
    if not ok(probe):
        return 0.0
    lo = max(lo, probe)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def write_stability_csv(points: Sequence[StabilityPoint], path) -> None:
    with open(path, "w") as fh:
        fh.write("CFL,gamma,alpha,rho_max,stable\n")
        for p in points:
            fh.write(f"{p.cfl!r},{p.gamma!r},{p.alpha!r},{p.rho_max!r},{int(p.stable)}\n")
