"""Command line: ``mlswe {run,scan,linstab,converge} --config FILE --out DIR``.

Exit status 0 on success, 2 for configuration errors and 3 when a run
aborts numerically (negative mass or non-finite values).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, RunConfig
from .output import write_figures, write_snapshot, write_summary
from .runner import (SchemeChoice, default_schemes, rest_deviation, run_case, run_convergence, run_scan,
                     write_convergence_csv, write_scan_csv)
from .scheme import PositivityError, SchemeParams
from .stability import scan_constants, scan_stability, write_stability_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("mlswe")


def _prepare(args) -> tuple[RunConfig, Path]:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.parse("")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(cfgmod.echo(cfg))
    return cfg, out


def cmd_run(cfg: RunConfig, out: Path, args) -> int:
    case = cfg.build_case(seed=args.seed)
    params = cfg.scheme_params()
    t_end = cfg["run.t_end"] if cfg["run.t_end"] is not None else case.t_end

    def on_output(index, t, state):
        if cfg["run.snapshots"]:
            write_snapshot(out / f"fields_{index:05d}.txt", case, state)

    start = time.perf_counter()
    result = run_case(case, params, t_end=t_end, output_interval=cfg["run.output_interval"],
                      solver=cfg["scheme.solver"], on_output=on_output)
    result.record.to_csv(out / "diagnostics.csv")
    summary = {
        "scenario": cfg.scenario,
        "t_end": repr(result.time),
        "steps": result.steps,
        "energy_ratio": repr(result.energy_ratio),
        "min_H": repr(float(result.state.H.min())),
        "max_speed": repr(float(np.sqrt(np.max(np.sum(result.state.velocity ** 2, axis=-1))))),
        "max_rest_deviation": repr(rest_deviation(case, result.state)),
        "wall_time": f"{time.perf_counter() - start:.3f}",
    }
    write_summary(out / "summary.txt", summary)
    if cfg["run.figures"]:
        write_figures(out, case, result.state, result.record)
    for k, v in summary.items():
        print(f"{k} = {v}")
    return EXIT_OK


def cmd_scan(cfg: RunConfig, out: Path, args) -> int:
    v = cfg.values
    points = run_scan(cfg.scenario, cfg.shape, cfg.scenario_params, args.seed, cfg.scheme_params(),
                      v["scan.cfl"], cfgmod.grid(v, "scan.gamma"), cfgmod.grid(v, "scan.alpha"),
                      t_end=v["run.t_end"], growth_factor=v["scan.growth_factor"], workers=args.threads)
    write_scan_csv(points, out / "scan.csv")
    print(f"{len(points)} points, {sum(p.stable for p in points)} stable, {sum(p.strict for p in points)} strict")
    return EXIT_OK


def cmd_linstab(cfg: RunConfig, out: Path, args) -> int:
    v = cfg.values
    kw = dict(n_theta=v["linstab.n_theta"], tol=v["linstab.tol"], dim=v["linstab.dim"],
              order_space=v["linstab.order_space"], order_time=v["linstab.order_time"],
              u_bar=v["linstab.u_bar"], h_bar=v["linstab.h"], g=v["linstab.g"], rho=v["linstab.densities"])
    if v["linstab.mode"] == "sums":
        points = scan_stability(cfgmod.grid(v, "linstab.cfl"), cfgmod.grid(v, "linstab.sum"),
                                policy=v["linstab.policy"], **kw)
    else:
        points = scan_constants(v["linstab.cfl"], cfgmod.grid(v, "linstab.gamma"),
                                cfgmod.grid(v, "linstab.alpha"), **kw)
    write_stability_csv(points, out / "stability.csv")
    print(f"{len(points)} points, {sum(p.stable for p in points)} stable")
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out: Path, args) -> int:
    v = cfg.values
    available = {c.label: c for c in default_schemes(cfl=v["scheme.cfl"])}
    unknown = [s for s in v["converge.schemes"] if s not in available]
    if unknown:
        raise ConfigError(f"converge.schemes: unknown scheme(s) {unknown}; choose from {sorted(available)}")
    schemes = [available[s] for s in v["converge.schemes"]]
    reference = SchemeChoice("hllc-2", "hllc", SchemeParams(cfl=v["scheme.cfl"], order_space=2, order_time=2))
    rows = run_convergence(cfg.scenario, v["converge.meshes"], v["converge.reference"], schemes, reference,
                           cfg.scenario_params, t_end=v["run.t_end"])
    write_convergence_csv(rows, out / "convergence.csv")
    for r in rows:
        print(f"{r.scheme:10s} {r.n:5d} {r.error:.3e} {r.order:.2f}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "scan": cmd_scan, "linstab": cmd_linstab, "converge": cmd_converge}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlswe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="configuration file (defaults apply when omitted)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes for scans")
        p.add_argument("--seed", type=int, default=0, help="seed for randomised scenarios")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        log.error("--threads must be at least 1")
        return EXIT_CONFIG
    try:
        cfg, out = _prepare(args)
        return COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (KeyError, ValueError) as exc:
        log.error("invalid setup: %s", exc)
        return EXIT_CONFIG
    except (PositivityError, FloatingPointError) as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
