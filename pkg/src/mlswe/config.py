"""Flat ``section.key = value`` configuration files.

Blank lines and ``#`` comments are ignored, lists are comma-separated and
``none`` clears an optional value. Every key is typed by :data:`SCHEMA` (or by
the defaults of the chosen scenario for ``scenario.*`` keys); unknown keys
and bad values raise :class:`ConfigError`. :func:`echo` writes the fully
resolved configuration in the same format, so parsing an echo gives back the
same configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .scenarios import SCENARIOS, Case, build_case
from .scheme import SchemeParams
from .timestepping import CoriolisParams


class ConfigError(ValueError):
    """Invalid configuration text or values."""


# kind: str, int, float, bool, float?, floats, ints, strs
SCHEMA: dict[str, tuple[str, object]] = {
    "scenario.name": ("str", "linear_waves"),
    "mesh.nx": ("int", None),
    "mesh.ny": ("int", None),
    "scheme.solver": ("str", "present"),
    "scheme.gamma": ("float", 0.5),
    "scheme.alpha": ("float", 0.5),
    "scheme.cfl": ("float", 0.5),
    "scheme.order_space": ("int", 1),
    "scheme.order_time": ("int", 1),
    "scheme.limiter": ("bool", False),
    "scheme.slope_cap_r": ("float?", None),
    "scheme.slope_cap_c": ("float", 1.0),
    "physics.coriolis": ("bool", None),
    "physics.f0": ("float?", None),
    "physics.beta": ("float?", None),
    "run.t_end": ("float?", None),
    "run.output_interval": ("float?", None),
    "run.snapshots": ("bool", True),
    "run.figures": ("bool", False),
    "scan.cfl": ("floats", [0.5]),
    "scan.gamma_min": ("float", 0.0),
    "scan.gamma_max": ("float", 1.0),
    "scan.gamma_step": ("float", 0.1),
    "scan.alpha_min": ("float", 0.0),
    "scan.alpha_max": ("float", 1.0),
    "scan.alpha_step": ("float", 0.1),
    "scan.growth_factor": ("float", 1.0),
    "linstab.mode": ("str", "sums"),
    "linstab.cfl_min": ("float", 0.05),
    "linstab.cfl_max": ("float", 1.5),
    "linstab.cfl_step": ("float", 0.05),
    "linstab.sum_min": ("float", 0.0),
    "linstab.sum_max": ("float", 2.0),
    "linstab.sum_step": ("float", 0.1),
    "linstab.policy": ("str", "equal"),
    "linstab.cfl": ("float", 0.25),
    "linstab.gamma_min": ("float", 0.0),
    "linstab.gamma_max": ("float", 1.0),
    "linstab.gamma_step": ("float", 0.1),
    "linstab.alpha_min": ("float", 0.0),
    "linstab.alpha_max": ("float", 1.0),
    "linstab.alpha_step": ("float", 0.1),
    "linstab.dim": ("int", 1),
    "linstab.order_space": ("int", 1),
    "linstab.order_time": ("int", 1),
    "linstab.n_theta": ("int", 256),
    "linstab.u_bar": ("float", 0.0),
    "linstab.g": ("float", 1.0),
    "linstab.h": ("float", 1.0),
    "linstab.densities": ("floats", [1.0]),
    "linstab.tol": ("float", 1e-9),
    "converge.meshes": ("ints", [10, 20, 40, 80]),
    "converge.reference": ("int", 640),
    "converge.schemes": ("strs", ["hllc-1", "present-1", "hllc-2", "present-2"]),
}

SECTIONS = ("scenario", "mesh", "scheme", "physics", "run", "scan", "linstab", "converge")
_TRUE = {"true", "on", "yes", "1"}
_FALSE = {"false", "off", "no", "0"}


def _convert(key: str, kind: str, raw: str):
    text = raw.strip()
    try:
        if kind == "str":
            if not text:
                raise ValueError("empty value")
            return text
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float?":
            return None if text.lower() == "none" else float(text)
        if kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        items = [t.strip() for t in text.split(",")] if text else []
        if any(not t for t in items):
            raise ValueError("empty list item")
        if kind == "floats":
            return [float(t) for t in items]
        if kind == "ints":
            return [int(t) for t in items]
        if kind == "strs":
            return items
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    raise ConfigError(f"{key}: unsupported kind {kind}")


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _kind_of(default) -> str:
    if isinstance(default, bool):
        return "bool"
    if isinstance(default, int):
        return "int"
    if isinstance(default, float):
        return "float"
    return "str"


def parse_lines(text: str) -> dict[str, str]:
    """Raw ``key -> value`` strings; duplicate keys are an error."""
    raw: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {number}: expected 'section.key = value'")
        key, value = (part.strip() for part in body.split("=", 1))
        if key.count(".") != 1 or key.split(".")[0] not in SECTIONS:
            raise ConfigError(f"line {number}: bad key {key!r}")
        if key in raw:
            raise ConfigError(f"line {number}: duplicate key {key!r}")
        raw[key] = value
    return raw


@dataclass
class RunConfig:
    """Resolved configuration: every schema key plus the scenario parameters."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def scenario(self) -> str:
        return self.values["scenario.name"]

    @property
    def scenario_params(self) -> dict:
        return {k.split(".", 1)[1]: v for k, v in self.values.items()
                if k.startswith("scenario.") and k != "scenario.name"}

    @property
    def shape(self) -> tuple[int, int]:
        return self.values["mesh.nx"], self.values["mesh.ny"]

    def scheme_params(self) -> SchemeParams:
        v = self.values
        return SchemeParams(gamma=v["scheme.gamma"], alpha=v["scheme.alpha"], cfl=v["scheme.cfl"],
                            order_space=v["scheme.order_space"], order_time=v["scheme.order_time"],
                            limiter=v["scheme.limiter"], slope_cap_r=v["scheme.slope_cap_r"],
                            slope_cap_c=v["scheme.slope_cap_c"])

    def build_case(self, seed: int = 0) -> Case:
        case = build_case(self.scenario, self.shape, self.scenario_params, seed)
        v = self.values
        if not v["physics.coriolis"]:
            case.coriolis = None
        else:
            base = case.coriolis or CoriolisParams()
            f0 = base.f0 if v["physics.f0"] is None else v["physics.f0"]
            beta = base.beta if v["physics.beta"] is None else v["physics.beta"]
            case.coriolis = CoriolisParams(f0, beta, base.y_ref)
        return case


def resolve(raw: dict[str, str]) -> RunConfig:
    """Typed configuration with defaults filled in and ranges validated."""
    values = {}
    for key, (kind, default) in SCHEMA.items():
        values[key] = _convert(key, kind, raw[key]) if key in raw else default
    name = values["scenario.name"]
    if name not in SCENARIOS:
        raise ConfigError(f"scenario.name: unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    spec = SCENARIOS[name]
    for pname, default in spec.params.items():
        key = f"scenario.{pname}"
        values[key] = _convert(key, _kind_of(default), raw[key]) if key in raw else default
    unknown = sorted(set(raw) - set(values))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    if values["mesh.nx"] is None:
        values["mesh.nx"] = spec.default_shape[0]
    if values["mesh.ny"] is None:
        values["mesh.ny"] = spec.default_shape[1]
    if values["physics.coriolis"] is None:
        values["physics.coriolis"] = spec.vortex
    _validate(values)
    return RunConfig(values)


def _validate(v: dict) -> None:
    def need(ok, message):
        if not ok:
            raise ConfigError(message)
    need(v["mesh.nx"] > 0 and v["mesh.ny"] > 0, "mesh.nx and mesh.ny must be positive")
    need(v["scheme.solver"] in ("present", "hllc"), "scheme.solver must be 'present' or 'hllc'")
    try:
        SchemeParams(gamma=v["scheme.gamma"], alpha=v["scheme.alpha"], cfl=v["scheme.cfl"],
                     order_space=v["scheme.order_space"], order_time=v["scheme.order_time"],
                     limiter=v["scheme.limiter"], slope_cap_r=v["scheme.slope_cap_r"],
                     slope_cap_c=v["scheme.slope_cap_c"])
    except ValueError as exc:
        raise ConfigError(f"scheme: {exc}") from None
    need(v["run.t_end"] is None or v["run.t_end"] >= 0, "run.t_end must be non-negative")
    need(v["run.output_interval"] is None or v["run.output_interval"] > 0, "run.output_interval must be positive")
    for sec in ("scan.gamma", "scan.alpha", "linstab.cfl", "linstab.sum", "linstab.gamma", "linstab.alpha"):
        need(v[f"{sec}_step"] > 0, f"{sec}_step must be positive")
        need(v[f"{sec}_min"] >= 0, f"{sec}_min must be non-negative")
    need(all(c > 0 for c in v["scan.cfl"]), "scan.cfl values must be positive")
    need(v["scan.growth_factor"] > 0, "scan.growth_factor must be positive")
    need(v["linstab.mode"] in ("sums", "constants"), "linstab.mode must be 'sums' or 'constants'")
    need(v["linstab.policy"] in ("equal", "gamma-only", "alpha-only", "product-zero"), "unknown linstab.policy")
    need(v["linstab.dim"] in (1, 2), "linstab.dim must be 1 or 2")
    need(v["linstab.order_space"] in (1, 2) and v["linstab.order_time"] in (1, 2), "linstab orders must be 1 or 2")
    need(v["linstab.n_theta"] >= 2, "linstab.n_theta must be at least 2")
    need(len(v["linstab.densities"]) >= 1 and all(r > 0 for r in v["linstab.densities"]),
         "linstab.densities must be positive")
    need(all(n > 0 for n in v["converge.meshes"]) and v["converge.reference"] > 0, "converge meshes must be positive")


def grid(v: dict, prefix: str) -> list[float]:
    """Inclusive range ``prefix_min .. prefix_max`` with ``prefix_step``, rounded to the step."""
    lo, hi, step = v[f"{prefix}_min"], v[f"{prefix}_max"], v[f"{prefix}_step"]
    if hi < lo:
        return []
    n = int((hi - lo) / step + 1e-9)
    decimals = max(0, -int(f"{step:e}".split("e")[1]) + 6)
    return [round(lo + k * step, decimals) for k in range(n + 1)]


def parse(text: str) -> RunConfig:
    return resolve(parse_lines(text))


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse(text)


def echo(config: RunConfig) -> str:
    """Every resolved key in schema order, one ``key = value`` line each."""
    lines = []
    for section in SECTIONS:
        keys = [k for k in config.values if k.split(".", 1)[0] == section]
        for key in keys:
            lines.append(f"{key} = {_format(config.values[key])}")
    return "\n".join(lines) + "\n"
