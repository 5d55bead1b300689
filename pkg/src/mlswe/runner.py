"""Run orchestration shared by the command line and the acceptance checks."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diagnostics import DiagnosticsRecord, convergence_order, energy_monotonicity_check, l2_error
from .hllc import HLLCSolver
from .physics import State, mechanical_energy, surfaces
from .scenarios import Case, build_case
from .scheme import PositivityError, SchemeParams
from .timestepping import Integrator

SOLVERS = ("present", "hllc")
BLOWUP_FACTOR = 10.0


def make_stepper(case: Case, params: SchemeParams, solver: str = "present"):
    """Object with ``dt(state)`` and ``step(state, dt)`` for the chosen solver."""
    if solver == "present":
        return Integrator(case.mesh, case.stack, params, case.coriolis)
    if solver == "hllc":
        if case.stack.n_layers != 1:
            raise ValueError("the HLLC solver handles a single layer")
        if case.coriolis is not None and case.coriolis.active:
            raise ValueError("the HLLC solver has no Coriolis term")
        return HLLCSolver(case.mesh, g=case.stack.g, order=params.order_space, cfl=params.cfl,
                          limiter=params.limiter, rho=float(case.stack.rho[0]))
    raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")


def rest_deviation(case: Case, state: State) -> float:
    """Largest interface displacement from the rest reference, or nan without one."""
    if case.rest is None:
        return math.nan
    eta = surfaces(case.stack, state.H, state.zb)
    eta_rest = surfaces(case.stack, case.rest.H, case.rest.zb)
    return float(np.max(np.abs(eta - eta_rest)))


def tracked_surface(case: Case, state: State) -> np.ndarray | None:
    """Top-surface field used for vortex tracking, or None for other cases."""
    if case.name != "baroclinic_vortex":
        return None
    return surfaces(case.stack, state.H, state.zb)[:, 0]


@dataclass
class RunResult:
    state: State
    time: float
    steps: int
    wall: float
    record: DiagnosticsRecord
    energy: list = field(default_factory=list)     # one entry per step when requested
    aborted: str | None = None

    @property
    def energy_ratio(self) -> float:
        """E(end) / E(0); a state that stays at zero energy counts as ratio 1."""
        e = self.record.energy
        if e[0] == 0:
            return 1.0 if e[-1] == 0 else math.inf
        return float(e[-1] / e[0])


def run_case(case: Case, params: SchemeParams, t_end: float | None = None, output_interval: float | None = None,
             solver: str = "present", on_output: Callable[[int, float, State], None] | None = None,
             energy_every_step: bool = False, blowup: float | None = None) -> RunResult:
    """Advance ``case`` to ``t_end`` with diagnostics at every output time.

    Output times are 0, k * output_interval and t_end; the step is shortened
    to land on them. With ``energy_every_step`` the energy is also stored
    after each step; ``blowup`` stops the run once E exceeds blowup * E(0).
    Numerical failures propagate as PositivityError or FloatingPointError.
    """
    t_end = case.t_end if t_end is None else float(t_end)
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    if output_interval is not None and not output_interval > 0:
        raise ValueError("output_interval must be positive")
    stepper = make_stepper(case, params, solver)
    record = DiagnosticsRecord(case.stack.n_layers, with_vortex=case.name == "baroclinic_vortex")
    state = case.state
    start = time.perf_counter()

    def output(index, t, s, dt):
        record.sample(t, s, case.mesh, case.stack, params.gamma, dt, reference=case.rest,
                      vortex_field=tracked_surface(case, s))
        if on_output is not None:
            on_output(index, t, s)

    dt0 = stepper.dt(state)
    output(0, 0.0, state, dt0)
    energies = [record.energy[0]] if energy_every_step else []
    t, steps, index = 0.0, 0, 1
    next_out = output_interval if output_interval else math.inf
    tol = 1e-12 * max(1.0, t_end)
    while t < t_end - tol:
        dt = min(stepper.dt(state), t_end - t, next_out - t)
        state, dt = stepper.step(state, dt)
        t += dt
        steps += 1
        if energy_every_step:
            energies.append(mechanical_energy(case.stack, state, case.mesh, reference=case.rest)[0])
            if blowup is not None and not energies[-1] <= blowup * abs(energies[0]):
                return RunResult(state, t, steps, time.perf_counter() - start, record, energies, "blow-up")
        at_output = abs(t - next_out) <= tol
        if at_output or t >= t_end - tol:
            output(index, t, state, dt)
            index += 1
            while next_out <= t + tol:
                next_out += output_interval
    return RunResult(state, t, steps, time.perf_counter() - start, record, energies)


# ---------------------------------------------------------------------------
# Parameter scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanPoint:
    cfl: float
    gamma: float
    alpha: float
    strict: bool           # energy decreased at every step
    stable: bool           # no net energy growth over the run
    energy_ratio: float
    error: str = ""


SCAN_HEADER = "CFL,gamma,alpha,strict,stable,energy_ratio,error"


def scan_point(scenario: str, shape, scenario_params: dict, seed: int, base: SchemeParams,
               cfl: float, gamma: float, alpha: float, t_end: float | None = None,
               growth_factor: float = 1.0, rtol: float = 1e-12) -> ScanPoint:
    """One direct simulation with both energy verdicts; failures become a verdict."""
    params = SchemeParams(gamma=gamma, alpha=alpha, cfl=cfl, order_space=base.order_space,
                          order_time=base.order_time, limiter=base.limiter,
                          slope_cap_r=base.slope_cap_r, slope_cap_c=base.slope_cap_c)
    case = build_case(scenario, shape, scenario_params, seed)
    try:
        res = run_case(case, params, t_end=t_end, energy_every_step=True, blowup=BLOWUP_FACTOR)
    except (PositivityError, FloatingPointError) as exc:
        return ScanPoint(cfl, gamma, alpha, False, False, math.inf, type(exc).__name__)
    e = res.energy
    if len(e) < 2:
        # a run without steps cannot violate either verdict
        return ScanPoint(cfl, gamma, alpha, True, True, 1.0)
    strict = res.aborted is None and energy_monotonicity_check(e, "strict", rtol=rtol).passed
    stable = res.aborted is None and energy_monotonicity_check(e, "net-growth", growth_factor=growth_factor).passed
    ratio = e[-1] / e[0] if e[0] != 0 else math.nan
    return ScanPoint(cfl, gamma, alpha, strict, stable, float(ratio), res.aborted or "")


def _scan_task(args):
    return scan_point(*args)


def run_scan(scenario: str, shape, scenario_params: dict, seed: int, base: SchemeParams,
             cfls, gammas, alphas, t_end: float | None = None, growth_factor: float = 1.0,
             workers: int = 1) -> list[ScanPoint]:
    """Grid of independent runs; results keep the (CFL, gamma, alpha) loop order."""
    tasks = [(scenario, shape, scenario_params, seed, base, float(c), float(g), float(a), t_end, growth_factor)
             for c in cfls for g in gammas for a in alphas]
    if workers <= 1 or len(tasks) <= 1:
        return [_scan_task(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_task, tasks))


def write_scan_csv(points, path) -> None:
    with open(path, "w") as fh:
        fh.write(SCAN_HEADER + "\n")
        for p in points:
            fh.write(f"{p.cfl!r},{p.gamma!r},{p.alpha!r},{int(p.strict)},{int(p.stable)},{p.energy_ratio!r},{p.error}\n")


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemeChoice:
    label: str
    solver: str
    params: SchemeParams


def default_schemes(cfl: float = 0.5) -> list[SchemeChoice]:
    """First- and second-order HLLC and present schemes with their customary constants."""
    return [
        SchemeChoice("hllc-1", "hllc", SchemeParams(cfl=cfl)),
        SchemeChoice("present-1", "present", SchemeParams(gamma=0.5, alpha=0.5, cfl=cfl)),
        SchemeChoice("hllc-2", "hllc", SchemeParams(cfl=cfl, order_space=2, order_time=2)),
        SchemeChoice("present-2", "present", SchemeParams(gamma=0.1, alpha=0.1, cfl=cfl, order_space=2, order_time=2)),
    ]


@dataclass(frozen=True)
class ConvergenceRow:
    scheme: str
    n: int
    error: float
    order: float          # nan on the coarsest mesh


CONVERGENCE_HEADER = "scheme,n,error,order"


def thickness(case: Case, state: State) -> np.ndarray:
    return state.H / case.stack.rho


def run_convergence(scenario: str, meshes, reference_n: int, schemes: list[SchemeChoice] | None = None,
                    reference: SchemeChoice | None = None, scenario_params: dict | None = None,
                    t_end: float | None = None) -> list[ConvergenceRow]:
    """Errors against a self-generated fine-mesh solution, restricted to each mesh.

    The error is the root-mean-square of the layer thickness difference,
    sqrt(sum_K m_K |h_K - h_ref,K|^2 / |domain|).
    """
    meshes = [int(n) for n in meshes]
    if any(reference_n % n for n in meshes):
        raise ValueError("every mesh must be nested in the reference mesh")
    if sorted(meshes) != meshes or len(set(meshes)) != len(meshes):
        raise ValueError("meshes must be strictly increasing")
    schemes = schemes or default_schemes()
    reference = reference or SchemeChoice("hllc-2", "hllc", SchemeParams(order_space=2, order_time=2))
    ref_case = build_case(scenario, (reference_n, reference_n), scenario_params)
    ref_state = run_case(ref_case, reference.params, t_end=t_end, solver=reference.solver).state
    ref_h = thickness(ref_case, ref_state)
    rows = []
    for choice in schemes:
        errors = []
        for n in meshes:
            case = build_case(scenario, (n, n), scenario_params)
            state = run_case(case, choice.params, t_end=t_end, solver=choice.solver).state
            err = l2_error(thickness(case, state), ref_h, case.mesh, (reference_n, reference_n))
            errors.append(err / math.sqrt(float(case.mesh.area.sum())))
        orders = [math.nan] + convergence_order(errors, meshes)
        rows += [ConvergenceRow(choice.label, n, e, o) for n, e, o in zip(meshes, errors, orders)]
    return rows


def write_convergence_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(CONVERGENCE_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.scheme},{r.n},{r.error!r},{r.order!r}\n")
