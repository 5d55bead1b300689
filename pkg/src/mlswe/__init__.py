"""Energy-stable explicit finite-volume solver for the layered shallow-water equations."""

from .mesh import Mesh, build_cartesian, read_mesh, write_mesh
from .physics import LayerStack, State, mechanical_energy, potential
from .scheme import PositivityError, SchemeParams, step_first_order, tendency
from .timestepping import CoriolisParams, Integrator, adaptive_dt, heun_step, imex_hcn222_step

__all__ = [
    "Mesh", "build_cartesian", "read_mesh", "write_mesh",
    "LayerStack", "State", "mechanical_energy", "potential",
    "PositivityError", "SchemeParams", "step_first_order", "tendency",
    "CoriolisParams", "Integrator", "adaptive_dt", "heun_step", "imex_hcn222_step",
]
