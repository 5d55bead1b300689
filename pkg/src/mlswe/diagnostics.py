"""Run-time and post-hoc measurements: energy, masses, positivity margin, errors, vortex tracking."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .mesh import SLIP, Mesh
from .physics import LayerStack, State, layer_masses, mechanical_energy, potential, velocity

DEFAULT_BETA = 0.25


# ---------------------------------------------------------------------------
# Energy series
# ---------------------------------------------------------------------------

class MonotonicityVerdict(NamedTuple):
    passed: bool
    first_violation: int | None   # index n of the offending sample E[n]


def energy_monotonicity_check(series: Sequence[float], mode: str = "strict",
                              rtol: float = 1e-12, growth_factor: float = 10.0) -> MonotonicityVerdict:
    """Check an energy time series.

    ``strict``: fails on the first E[n] > E[n-1] + rtol |E[n-1]|.
    ``growth``: fails on the first E[n] > growth_factor E[0].
    ``net-growth``: fails when the last sample exceeds growth_factor E[0],
    which ignores transient rises that the run later dissipates.
    Non-finite samples always fail.
    """
    e = np.asarray(series, dtype=float)
    if e.size < 2:
        raise ValueError("need at least two energy samples")
    bad = ~np.isfinite(e)
    if mode == "strict":
        up = np.zeros(e.size, dtype=bool)
        up[1:] = e[1:] > e[:-1] + rtol * np.abs(e[:-1])
    elif mode in ("growth", "exponential-growth"):
        up = e > growth_factor * abs(e[0])
    elif mode == "net-growth":
        up = np.zeros(e.size, dtype=bool)
        up[-1] = e[-1] > growth_factor * abs(e[0])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    hits = np.nonzero(up | bad)[0]
    if hits.size:
        return MonotonicityVerdict(False, int(hits[0]))
    return MonotonicityVerdict(True, None)


def relative_mass_drift(masses: np.ndarray) -> np.ndarray:
    """max_n |M_n - M_0| / |M_0| per layer for a (n_samples, L) mass series."""
    m = np.asarray(masses, dtype=float)
    ref = np.where(m[0] != 0, np.abs(m[0]), 1.0)
    return np.max(np.abs(m - m[0]), axis=0) / ref


# ---------------------------------------------------------------------------
# Positivity monitor
# ---------------------------------------------------------------------------

def positivity_margin(state: State, mesh: Mesh, stack: LayerStack, gamma: float, dt: float,
                      beta: float = DEFAULT_BETA) -> float:
    """Smallest slack of the sufficient positivity condition over edges and layers.

    Per edge and layer the condition reads
        dt max(r_K, r_Ke) (|u_e.n| + sqrt(gamma |dPhi_e| / eps^2)) <= beta/(beta+1) xi_e
    with r = perimeter/area, u_e the mean of the two cell velocities,
    dPhi_e = (Phi_Ke - Phi_K)/2 and xi_e = min(H_K, H_Ke)/max(H_K, H_Ke).
    The returned value is min(RHS - LHS); negative means the bound is not met.
    """
    H = state.H
    u = velocity(H, state.q)
    phi = potential(stack, H, state.zb)
    K, R = mesh.left, mesh.right_or_left
    bnd = mesh.boundary
    uL, uR = u[K], u[R]
    if bnd.any():
        n = mesh.normal[bnd][:, None, :]
        un = np.sum(uL[bnd] * n, axis=-1, keepdims=True)
        wall = (mesh.tag[bnd] == SLIP)[:, None, None]
        uR[bnd] = np.where(wall, uL[bnd] - 2.0 * un * n, uL[bnd])
    u_e = 0.5 * (uL + uR)
    un_e = np.abs(np.sum(u_e * mesh.normal[:, None, :], axis=-1))
    dphi = 0.5 * np.abs(phi[R] - phi[K])
    r_l, r_r = mesh.side_ratios
    lhs = dt * np.maximum(r_l, r_r)[:, None] * (un_e + np.sqrt(gamma * dphi) / stack.eps)
    hi = np.maximum(H[K], H[R])
    lo = np.minimum(H[K], H[R])
    xi = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 1.0)
    rhs = beta / (beta + 1.0) * xi
    return float(np.min(rhs - lhs))


# ---------------------------------------------------------------------------
# Error norms
# ---------------------------------------------------------------------------

def restrict(values: np.ndarray, fine_shape: tuple[int, int], coarse_shape: tuple[int, int]) -> np.ndarray:
    """Block-average cell values of a nested Cartesian mesh (x-fastest numbering)."""
    nxf, nyf = fine_shape
    nxc, nyc = coarse_shape
    if nxf % nxc or nyf % nyc:
        raise ValueError(f"mesh {fine_shape} is not nested in {coarse_shape}")
    bx, by = nxf // nxc, nyf // nyc
    v = np.asarray(values, dtype=float)
    tail = v.shape[1:]
    blocks = v.reshape((nyc, by, nxc, bx) + tail)
    return blocks.mean(axis=(1, 3)).reshape((nxc * nyc,) + tail)


def l2_error(field: np.ndarray, reference: np.ndarray, mesh: Mesh,
             reference_shape: tuple[int, int] | None = None) -> float:
    """sqrt(sum_K m_K |w_K - w_ref,K|^2) with the reference restricted to ``mesh`` if finer."""
    field = np.asarray(field, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if reference.shape[0] != mesh.n_cells:
        if reference_shape is None or mesh.shape is None:
            raise ValueError("a finer reference needs its Cartesian shape and a Cartesian target mesh")
        if reference_shape[0] * reference_shape[1] != reference.shape[0]:
            raise ValueError("reference size does not match its shape")
        reference = restrict(reference, reference_shape, mesh.shape)
    diff = (field - reference).reshape(mesh.n_cells, -1)
    return float(math.sqrt(np.dot(mesh.area, np.sum(diff * diff, axis=1))))


def convergence_order(errors: Sequence[float], resolutions: Sequence[float] | None = None) -> list[float]:
    """Observed orders between successive refinements.

    ``resolutions`` are cells per direction (default: dyadic). A vanishing
    fine-mesh error is reported as ``inf`` (exact).
    """
    e = [float(x) for x in errors]
    n = [float(x) for x in resolutions] if resolutions is not None else [2.0 ** k for k in range(len(e))]
    if len(n) != len(e):
        raise ValueError("errors and resolutions differ in length")
    orders = []
    for k in range(len(e) - 1):
        if e[k + 1] == 0.0:
            orders.append(math.inf)
        elif e[k] == 0.0:
            orders.append(-math.inf)
        else:
            orders.append(math.log(e[k] / e[k + 1]) / math.log(n[k + 1] / n[k]))
    return orders


# ---------------------------------------------------------------------------
# Vortex tracking
# ---------------------------------------------------------------------------

class VortexFix(NamedTuple):
    x: float
    y: float
    amplitude: float
    flag: str          # "ok", "boundary" or "degenerate"


def track_vortex(field: np.ndarray, mesh: Mesh, kind: str = "max") -> VortexFix:
    """Sub-cell location of the extremum of a cell field on a Cartesian mesh.

    A quadratic surface is fitted by least squares on the 3x3 block around
    the extremal cell; its stationary point, kept within one cell, is the
    estimate.
    """
    if mesh.shape is None:
        raise ValueError("vortex tracking needs a Cartesian mesh")
    nx, ny = mesh.shape
    sign = 1.0 if kind == "max" else -1.0
    f = sign * np.asarray(field, dtype=float).reshape(ny, nx)
    j, i = np.unravel_index(int(np.argmax(f)), f.shape)
    k = j * nx + i
    xc, yc = mesh.centroid[k]
    value = sign * f[j, i]
    if np.ptp(f) <= 1e-14 * max(1.0, np.max(np.abs(f))):
        return VortexFix(float(xc), float(yc), float(value), "degenerate")
    if i == 0 or j == 0 or i == nx - 1 or j == ny - 1:
        return VortexFix(float(xc), float(yc), float(value), "boundary")
    dx = mesh.extent[0] / nx
    dy = mesh.extent[1] / ny
    block = f[j - 1:j + 2, i - 1:i + 2]
    sy, sx = np.mgrid[-1:2, -1:2]
    sx, sy = sx.ravel().astype(float), sy.ravel().astype(float)
    A = np.column_stack([np.ones(9), sx, sy, sx * sx, sx * sy, sy * sy])
    c0, cx, cy, cxx, cxy, cyy = np.linalg.lstsq(A, block.ravel(), rcond=None)[0]
    hess = np.array([[2 * cxx, cxy], [cxy, 2 * cyy]])
    if np.linalg.det(hess) <= 0 or hess[0, 0] >= 0:
        return VortexFix(float(xc), float(yc), float(value), "degenerate")
    px, py = np.linalg.solve(hess, [-cx, -cy])
    px, py = float(np.clip(px, -1, 1)), float(np.clip(py, -1, 1))
    peak = c0 + cx * px + cy * py + cxx * px * px + cxy * px * py + cyy * py * py
    return VortexFix(float(xc + px * dx), float(yc + py * dy), float(sign * peak), "ok")


# ---------------------------------------------------------------------------
# Time series record
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    """Append-only diagnostics time series with CSV output."""

    n_layers: int
    with_vortex: bool = False
    rows: list = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        cols = ["time", "E", "K"] + [f"mass_{i + 1}" for i in range(self.n_layers)] + ["minH", "maxU", "cfl2_margin"]
        if self.with_vortex:
            cols += ["vx", "vy", "vamp"]
        return cols

    def append(self, time: float, E: float, K: float, masses, min_h: float, max_u: float,
               margin: float, vortex: VortexFix | None = None) -> None:
        if self.rows and not time > self.rows[-1][0]:
            raise ValueError("diagnostics times must increase strictly")
        row = [float(time), float(E), float(K), *map(float, masses), float(min_h), float(max_u), float(margin)]
        if self.with_vortex:
            v = vortex or VortexFix(math.nan, math.nan, math.nan, "degenerate")
            row += [v.x, v.y, v.amplitude]
        self.rows.append(row)

    def sample(self, time: float, state: State, mesh: Mesh, stack: LayerStack, gamma: float, dt: float,
               reference: State | None = None, vortex_field: np.ndarray | None = None) -> None:
        E, K = mechanical_energy(stack, state, mesh, reference=reference)
        u = velocity(state.H, state.q)
        vortex = track_vortex(vortex_field, mesh) if self.with_vortex and vortex_field is not None else None
        self.append(time, E, K, layer_masses(state, mesh), float(state.H.min()),
                    float(np.sqrt(np.max(np.sum(u * u, axis=-1)))),
                    positivity_margin(state, mesh, stack, gamma, dt), vortex)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([r[idx] for r in self.rows])

    @property
    def energy(self) -> np.ndarray:
        return self.column("E")

    @property
    def masses(self) -> np.ndarray:
        return np.array([r[3:3 + self.n_layers] for r in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([repr(x) for x in r])
