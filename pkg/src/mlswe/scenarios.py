"""Initial states and reference solutions for the standard test cases."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh, build_cartesian
from .physics import LayerStack, State, masses_from_surfaces
from .timestepping import CoriolisParams


@dataclass
class Case:
    """Everything a run needs: mesh, layers, initial state and optional extras."""

    name: str
    mesh: Mesh
    stack: LayerStack
    state: State
    t_end: float
    coriolis: CoriolisParams | None = None
    rest: State | None = None              # reference for perturbation energies
    extras: dict = field(default_factory=dict)


def rest_state(stack: LayerStack, mesh: Mesh, thickness, zb=None) -> State:
    h = np.broadcast_to(np.asarray(thickness, dtype=float), (mesh.n_cells, stack.n_layers))
    zb = np.zeros(mesh.n_cells) if zb is None else zb
    return State.from_primitive(stack, h.copy(), 0.0, zb)


# ---------------------------------------------------------------------------
# Linear waves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearWaveSetup:
    box: float = 100e3
    n_layers: int = 5
    thickness: float = 1000.0
    rho0: float = 1000.0
    drho: float = 50.0
    g: float = 10.0
    amplitude: float = 1.0
    modes: tuple[int, int] = (1, 1)
    t_end: float = 3600.0

    @property
    def densities(self) -> np.ndarray:
        return self.rho0 + self.drho * np.arange(self.n_layers)

    @property
    def wavenumber(self) -> tuple[float, float]:
        return 2 * math.pi * self.modes[0] / self.box, 2 * math.pi * self.modes[1] / self.box

    def stack(self, eps: float = 1.0) -> LayerStack:
        return LayerStack(self.densities, g=self.g, eps=eps)


def wave_matrix(setup: LinearWaveSetup) -> np.ndarray:
    """A_ij = c_i^2 min(rho_i, rho_j) / rho_i with c_i^2 = g h_i, acting on thickness deviations."""
    rho = setup.densities
    c2 = setup.g * setup.thickness * np.ones_like(rho)
    return c2[:, None] * np.minimum.outer(rho, rho) / rho[:, None]


def mode_speeds(setup: LinearWaveSetup) -> np.ndarray:
    """Gravity-wave speeds of the uncoupled modes, sorted decreasingly."""
    lam = np.linalg.eigvals(wave_matrix(setup))
    if np.any(np.abs(lam.imag) > 1e-9 * np.abs(lam).max()) or np.any(lam.real <= 0):
        raise ValueError("wave matrix has non-positive or complex eigenvalues")
    return np.sort(np.sqrt(lam.real))[::-1]


def apparent_phase_speed(setup: LinearWaveSetup) -> float:
    """omega / k_x of the fastest mode, the speed at which crests cross an x section."""
    kx, ky = setup.wavenumber
    return float(mode_speeds(setup)[0] * math.hypot(kx, ky) / kx)


def init_linear_waves(mesh: Mesh, setup: LinearWaveSetup = LinearWaveSetup(), eps: float = 1.0) -> Case:
    """Flat layers plus cos(kx x) cos(ky y) on the top surface only."""
    stack = setup.stack(eps)
    L = setup.n_layers
    x, y = mesh.centroid[:, 0], mesh.centroid[:, 1]
    kx, ky = setup.wavenumber
    h = np.full((mesh.n_cells, L), setup.thickness)
    h[:, 0] += setup.amplitude * np.cos(kx * x) * np.cos(ky * y)
    state = State.from_primitive(stack, h, 0.0, np.zeros(mesh.n_cells))
    return Case("linear_waves", mesh, stack, state, setup.t_end,
                rest=rest_state(stack, mesh, setup.thickness), extras={"setup": setup})


def linear_wave_reference(setup: LinearWaveSetup, t: float, x, y) -> np.ndarray:
    """Thickness deviations (n, L) of the linearised layered system at time t.

    The initial deviation is projected on the eigenvectors of the wave
    matrix; each mode oscillates as a standing wave cos(c_m |k| t).
    """
    A = wave_matrix(setup)
    lam, V = np.linalg.eig(A)
    lam, V = lam.real, V.real
    kx, ky = setup.wavenumber
    k = math.hypot(kx, ky)
    z0 = np.zeros(setup.n_layers)
    z0[0] = setup.amplitude
    coeff = np.linalg.solve(V, z0)
    amp = V @ (np.cos(np.sqrt(lam) * k * t) * coeff)
    shape = np.cos(kx * np.asarray(x)) * np.cos(ky * np.asarray(y))
    return shape[..., None] * amp


def surface_deviations(thickness_dev: np.ndarray) -> np.ndarray:
    """Interface displacements from thickness deviations (sum over the layers below)."""
    return np.cumsum(thickness_dev[..., ::-1], axis=-1)[..., ::-1]


def linear_waves_single_layer(mesh: Mesh, depth: float = 5000.0, g: float = 10.0) -> Case:
    """One-layer version of the wave test (total depth of the five-layer column)."""
    setup = LinearWaveSetup(n_layers=1, thickness=depth, g=g)
    return init_linear_waves(mesh, setup)


def linear_wave_mesh(n: int, setup: LinearWaveSetup = LinearWaveSetup()) -> Mesh:
    return build_cartesian(n, n, setup.box, setup.box, bc="periodic")


# ---------------------------------------------------------------------------
# Smooth Gaussian wave
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpSetup:
    box: float = 500e3
    h0: float = 5000.0
    h1: float = 10.0
    sigma: float = 50e3
    g: float = 10.0
    center: tuple[float, float] = (0.0, 0.0)
    t_end: float = 600.0


def bump_depth(setup: BumpSetup, x, y) -> np.ndarray:
    r2 = (np.asarray(x) - setup.center[0]) ** 2 + (np.asarray(y) - setup.center[1]) ** 2
    return setup.h0 + setup.h1 * np.exp(-r2 / (2 * setup.sigma ** 2))


def bump_mesh(n: int, setup: BumpSetup = BumpSetup()) -> Mesh:
    return build_cartesian(n, n, setup.box, setup.box, bc="slip")


def init_gaussian_bump(mesh: Mesh, setup: BumpSetup = BumpSetup()) -> Case:
    stack = LayerStack((1.0,), g=setup.g)
    h = bump_depth(setup, mesh.centroid[:, 0], mesh.centroid[:, 1])[:, None]
    state = State.from_primitive(stack, h, 0.0, np.zeros(mesh.n_cells))
    return Case("gaussian_bump", mesh, stack, state, setup.t_end,
                rest=rest_state(stack, mesh, setup.h0), extras={"setup": setup})


# ---------------------------------------------------------------------------
# Lake at rest over a bump
# ---------------------------------------------------------------------------

LAKE_BC = {"west": "outflow", "east": "slip", "south": "slip", "north": "slip"}


def lake_topography(x, y) -> np.ndarray:
    return 0.8 * np.exp(-5.0 * (np.asarray(x) - 0.9) ** 2 - 50.0 * (np.asarray(y) - 0.5) ** 2)


def lake_surface(x, perturbed: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    eta = np.ones_like(x)
    if perturbed:
        eta = np.where((x >= 0.05) & (x <= 0.15), 1.01, eta)
    return eta


def lake_mesh(nx: int = 300, ny: int = 100) -> Mesh:
    return build_cartesian(nx, ny, 2.0, 1.0, bc=LAKE_BC)


def init_lake(mesh: Mesh, perturbed: bool = False, g: float = 9.81) -> Case:
    stack = LayerStack((1.0,), g=g)
    x, y = mesh.centroid[:, 0], mesh.centroid[:, 1]
    zb = lake_topography(x, y)
    eta = lake_surface(x, perturbed)[:, None]
    H = masses_from_surfaces(stack, eta, zb)
    state = State(H, np.zeros(H.shape + (2,)), zb)
    rest = State(masses_from_surfaces(stack, np.ones((mesh.n_cells, 1)), zb), np.zeros(H.shape + (2,)), zb)
    return Case("lake", mesh, stack, state, 0.46, rest=rest, extras={"perturbed": perturbed})


# ---------------------------------------------------------------------------
# Baroclinic vortex on the beta plane
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VortexSetup:
    half_width: float = 900e3
    rho0: float = 1024.4
    g: float = 9.81
    radius: float = 60e3
    u_max: float = 0.8
    f0: float = 9.054e-5
    beta: float = 1.788e-11
    brunt: float = 3e-3
    depth: float = 5000.0
    n_layers: int = 10
    still_below: float = 2500.0
    days: float = 10.0

    @property
    def p0(self) -> float:
        return self.rho0 * self.f0 * self.u_max * self.radius * math.sqrt(math.e)

    @property
    def peak(self) -> float:
        """Top surface anomaly at the vortex centre, P0 / (g rho0)."""
        return self.p0 / (self.g * self.rho0)

    @property
    def layer_thickness(self) -> float:
        return self.depth / self.n_layers

    @property
    def densities(self) -> np.ndarray:
        """Linear stratification rho0 (1 + N^2 d / g) at the layer mid-depths d."""
        d = self.layer_thickness * (np.arange(self.n_layers) + 0.5)
        return self.rho0 * (1.0 + self.brunt ** 2 * d / self.g)

    @property
    def still_layer(self) -> int:
        """0-based index of the first layer without motion."""
        return int(round(self.still_below / self.layer_thickness))


def _vortex_geometry(setup: VortexSetup, x, y):
    r = np.hypot(x, y)
    top = setup.peak * np.exp(-r * r / (2 * setup.radius ** 2))
    dtop = -r / setup.radius ** 2 * top                 # d(eta_1)/dr
    return r, top, dtop


def vortex_fields(setup: VortexSetup, x, y):
    """Interface anomalies (n, L), radial potential gradients (n, L) and radius."""
    rho = setup.densities
    L = setup.n_layers
    s = setup.still_layer
    r, top, dtop = _vortex_geometry(setup, x, y)
    # layers 2..s+1 share one gradient chosen so that the potential of layer s+1 is flat
    factor = -rho[0] / (rho[s] - rho[0])
    anomaly = np.zeros((r.size, L))
    anomaly[:, 0] = top
    anomaly[:, 1:s + 1] = (factor * top)[:, None]
    dphi = np.zeros((r.size, L))
    moving = np.arange(s)
    dphi[:, :s] = setup.g / rho[moving] * (rho[0] + (rho[moving] - rho[0]) * factor) * dtop[:, None]
    return anomaly, dphi, r


def cyclostrophic_speed(dphi_dr, r, f):
    """Azimuthal speed balancing centrifugal, Coriolis and pressure forces."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0, 4.0 * dphi_dr / (np.where(r > 0, r, 1.0) * f * f), 0.0)
    disc = 1.0 + ratio
    if np.any(disc < 0):
        raise ValueError("vortex too strong: negative discriminant in the cyclostrophic balance")
    return -0.5 * f * r * (1.0 - np.sqrt(disc))


def vortex_mesh(n: int = 60, setup: VortexSetup = VortexSetup()) -> Mesh:
    w = setup.half_width
    return build_cartesian(n, n, 2 * w, 2 * w, bc="slip", origin=(-w, -w))


def init_baroclinic_vortex(mesh: Mesh, setup: VortexSetup = VortexSetup()) -> Case:
    stack = LayerStack(setup.densities, g=setup.g)
    L = setup.n_layers
    x, y = mesh.centroid[:, 0], mesh.centroid[:, 1]
    anomaly, dphi, r = vortex_fields(setup, x, y)
    dz = setup.layer_thickness
    eta_rest = -dz * np.arange(L)                      # surface at z = 0
    zb = np.full(mesh.n_cells, -setup.depth)
    eta = eta_rest[None, :] + anomaly
    H = masses_from_surfaces(stack, eta, zb)
    if np.any(H <= 0):
        raise ValueError("vortex anomaly empties a layer")
    speed = cyclostrophic_speed(dphi, r[:, None], setup.f0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ex = np.where(r > 0, -y / np.where(r > 0, r, 1.0), 0.0)
        ey = np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0)
    u = np.stack([speed * ex[:, None], speed * ey[:, None]], axis=-1)
    state = State(H, H[..., None] * u, zb)
    rest = State(masses_from_surfaces(stack, np.broadcast_to(eta_rest, (mesh.n_cells, L)), zb),
                 np.zeros((mesh.n_cells, L, 2)), zb)
    cor = CoriolisParams(setup.f0, setup.beta, 0.0)
    return Case("baroclinic_vortex", mesh, stack, state, setup.days * 86400.0, coriolis=cor, rest=rest,
                extras={"setup": setup, "eta_rest": eta_rest})


# ---------------------------------------------------------------------------
# Low-Froude Taylor-Green flow
# ---------------------------------------------------------------------------

def taylor_green_mesh(n: int) -> Mesh:
    return build_cartesian(n, n, 2 * math.pi, 2 * math.pi, bc="periodic")


def init_taylor_green(mesh: Mesh, eps: float, g: float = 1.0, depth: float = 1.0) -> Case:
    """Steady incompressible vortex array with potential g depth + eps^2 p.

    u = (sin x cos y, -cos x sin y), p = (cos 2x + cos 2y) / 4.
    """
    stack = LayerStack((1.0,), g=g, eps=eps)
    x, y = mesh.centroid[:, 0], mesh.centroid[:, 1]
    p = 0.25 * (np.cos(2 * x) + np.cos(2 * y))
    h = (g * depth + eps ** 2 * p) / g
    u = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)], axis=-1)
    state = State.from_primitive(stack, h[:, None], u[:, None, :], np.zeros(mesh.n_cells))
    return Case("taylor_green", mesh, stack, state, 1.0, rest=rest_state(stack, mesh, depth))


# ---------------------------------------------------------------------------
# Randomised layered states
# ---------------------------------------------------------------------------

def random_layers_mesh(n: int = 8, box: float = 8e3) -> Mesh:
    return build_cartesian(n, n, box, box, bc="periodic")


def init_random_layers(mesh: Mesh, seed: int = 0, n_layers: int = 5, thickness: float = 100.0,
                       spread: float = 0.5, froude: float = 0.1, g: float = 9.81) -> Case:
    """Periodic stack with random densities, thicknesses and velocities.

    Thicknesses are uniform in thickness (1 +- spread); each velocity
    component is uniform in +-froude times the local barotropic wave speed.
    """
    if not 0 <= spread < 1:
        raise ValueError("spread must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    rho = np.sort(1000.0 + rng.uniform(0.0, 50.0, n_layers))
    stack = LayerStack(rho, g=g)
    h = thickness * rng.uniform(1.0 - spread, 1.0 + spread, (mesh.n_cells, n_layers))
    c = np.sqrt(g * h.sum(axis=1))[:, None, None]
    u = froude * c * rng.uniform(-1.0, 1.0, (mesh.n_cells, n_layers, 2))
    state = State.from_primitive(stack, h, u, np.zeros(mesh.n_cells))
    return Case("random_layers", mesh, stack, state, 0.0, extras={"seed": seed})


# ---------------------------------------------------------------------------
# Registry used by the command line
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    """Default resolution and the builders of a named test case."""

    mesh: object                     # callable (nx, ny) -> Mesh
    init: object                     # callable (mesh, params, seed) -> Case
    default_shape: tuple[int, int]
    params: dict = field(default_factory=dict)   # accepted scenario.* keys and defaults
    vortex: bool = False


def _square(builder):
    def make(nx, ny):
        if nx != ny:
            raise ValueError("this scenario needs a square mesh (nx == ny)")
        return builder(nx)
    return make


SCENARIOS: dict[str, ScenarioSpec] = {
    "linear_waves": ScenarioSpec(
        _square(linear_wave_mesh),
        lambda mesh, p, seed: init_linear_waves(mesh, LinearWaveSetup(n_layers=int(p["layers"])), eps=p["eps"]),
        (41, 41), {"layers": 5, "eps": 1.0}),
    "linear_waves_single": ScenarioSpec(
        _square(linear_wave_mesh),
        lambda mesh, p, seed: linear_waves_single_layer(mesh, depth=p["depth"]),
        (11, 11), {"depth": 5000.0}),
    "gaussian_bump": ScenarioSpec(
        _square(bump_mesh), lambda mesh, p, seed: init_gaussian_bump(mesh), (20, 20)),
    "lake": ScenarioSpec(
        lake_mesh, lambda mesh, p, seed: init_lake(mesh, perturbed=bool(p["perturbed"])),
        (300, 100), {"perturbed": False}),
    "baroclinic_vortex": ScenarioSpec(
        _square(vortex_mesh),
        lambda mesh, p, seed: init_baroclinic_vortex(mesh, VortexSetup(days=p["days"])),
        (60, 60), {"days": 10.0}, vortex=True),
    "taylor_green": ScenarioSpec(
        _square(taylor_green_mesh), lambda mesh, p, seed: init_taylor_green(mesh, p["eps"]),
        (32, 32), {"eps": 1e-2}),
    "random_layers": ScenarioSpec(
        _square(random_layers_mesh),
        lambda mesh, p, seed: init_random_layers(mesh, seed=seed, n_layers=int(p["layers"]), froude=p["froude"]),
        (8, 8), {"layers": 5, "froude": 0.1}),
}


def build_case(name: str, shape: tuple[int, int] | None = None, params: dict | None = None, seed: int = 0) -> Case:
    """Mesh plus initial state of a registered scenario."""
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    spec = SCENARIOS[name]
    unknown = set(params or {}) - set(spec.params)
    if unknown:
        raise KeyError(f"scenario {name!r} has no parameter(s) {sorted(unknown)}")
    merged = {**spec.params, **(params or {})}
    nx, ny = shape or spec.default_shape
    return spec.init(spec.mesh(nx, ny), merged, seed)
