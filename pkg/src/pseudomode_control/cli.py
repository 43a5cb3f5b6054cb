"""Command-line entry points.

    pseudomode-control simulate    --config run.json --out out/
    pseudomode-control optimize    --config run.json --out out/ [--strict]
    pseudomode-control reachable   --config run.json --out out/ [--threads N]
    pseudomode-control selectivity --config run.json --out out/ [--seed N]

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 target not
reached (``optimize --strict``).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .dynamics import (
    ControlField,
    MultiModeParams,
    SystemParams,
    propagate,
    propagate_multimode,
)
from .optimizer import (
    REACHED_THRESHOLD,
    OptimizationError,
    PopulationTargetProblem,
    SelectivityProblem,
    final_population,
    optimize_restarts,
    selectivity_gain,
)
from .output import (
    BOUNDARY_COLUMNS,
    FIELD_COLUMNS,
    GRID_COLUMNS,
    trajectory_header,
    trajectory_rows,
    write_csv,
    write_json,
)
from .reachable import GridSpec, classify, map_reachable, prescan_constant, status_counts
from .shapes import render

log = logging.getLogger("pseudomode_control")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_UNREACHED = 4

THREADS_ENV = "PSEUDOMODE_THREADS"
# populations may exceed 1 by rounding only
POP_SLACK = 1e-9
# below this the w = 0 populations are taken as equal and G is not reported
GAIN_DENOM_FLOOR = 1e-12


class NumericFailure(RuntimeError):
    pass


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}: expected an integer, got {env!r}")
    return 1


def _effective_config(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, seed=args.seed))
    return cfg


def _single_mode(cfg: RunConfig, what: str) -> SystemParams:
    if isinstance(cfg.system, MultiModeParams):
        raise ConfigError(f"system: {what} supports a single Lorentzian mode only")
    return cfg.system


def _check_physical(pop: np.ndarray, cfg: RunConfig):
    # c1 never gains norm from an empty or singly excited bath
    if cfg.initial_label in ("case1", "case2") and np.max(pop) > 1 + POP_SLACK:
        raise NumericFailure(f"population exceeded 1 (max {np.max(pop)!r})")
    if not np.all(np.isfinite(pop)):
        raise NumericFailure("non-finite population in trajectory")


def _field_rows(field: ControlField, q: float):
    for k, w in enumerate(field.samples):
        yield (k * field.dt * q, w / q)


def cmd_simulate(cfg: RunConfig, out: Path, args) -> int:
    if (cfg.shape is None) == (cfg.samples is None):
        raise ConfigError("shape, samples: simulate needs exactly one of them")
    q = cfg.q_unit
    n_modes = cfg.system.n_modes if cfg.multimode else 1
    if cfg.samples is not None:
        field = ControlField(cfg.dt, cfg.samples)
    elif cfg.horizon > 0:
        field = render(cfg.shape, cfg.dt, cfg.horizon)
    else:
        field = None
    if field is None:
        s0 = cfg.initial
        ys = np.array([list(s0.y) if cfg.multimode else [s0.y]])
        rows = trajectory_rows([0.0], np.array([s0.c1]), ys, [cfg.shape.value(0.0)], q)
        write_csv(out / "trajectory.csv", trajectory_header(n_modes), rows)
        _check_physical(np.array([abs(s0.c1) ** 2]), cfg)
        return EXIT_OK
    if cfg.multimode:
        traj = propagate_multimode(cfg.system, field, cfg.initial)
        c1, ys = traj.c1, traj.amplitudes[:, 1:]
    else:
        traj = propagate(cfg.system, field, cfg.initial)
        c1, ys = traj.c1, traj.y[:, None]
    _check_physical(np.abs(c1) ** 2, cfg)
    omegas = np.append(field.samples, field.samples[-1])
    write_csv(out / "trajectory.csv", trajectory_header(n_modes), trajectory_rows(traj.times, c1, ys, omegas, q))
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, out: Path, args) -> int:
    params = _single_mode(cfg, "optimize")
    opt = cfg.optimizer
    if opt.t_final is None or opt.target_pop is None:
        raise ConfigError("optimizer.t_final, optimizer.target_pop: required for optimize")
    problem = PopulationTargetProblem(params, opt.t_final, opt.target_pop, cfg.initial, opt.omega_max)
    start = time.perf_counter()
    best, runs = optimize_restarts(
        problem, opt.restarts, opt.seed, cfg.dt, opt.max_iters, opt.tol, workers=_threads(args)
    )
    traj = propagate(params, best.field, cfg.initial)
    _check_physical(traj.pop, cfg)
    q = cfg.q_unit
    write_csv(out / "field.csv", FIELD_COLUMNS, _field_rows(best.field, q))
    omegas = np.append(best.field.samples, best.field.samples[-1])
    write_csv(out / "trajectory.csv", trajectory_header(1), trajectory_rows(traj.times, traj.c1, traj.y[:, None], omegas, q))
    status = classify(best.cost)
    write_json(
        out / "summary.json",
        {
            "cost": best.cost,
            "status": status,
            "pop_final": float(traj.pop[-1]),
            "iterations": best.iterations,
            "converged": best.converged,
            "restarts_used": len(runs),
            "best_seed": best.seed,
            "max_abs_omega": float(np.abs(best.field.samples).max()) / q,
            "runtime_s": time.perf_counter() - start,
        },
    )
    if args.strict and best.cost >= REACHED_THRESHOLD:
        log.error("target not reached: final cost %.4g >= %.2g", best.cost, REACHED_THRESHOLD)
        return EXIT_UNREACHED
    return EXIT_OK


def cmd_reachable(cfg: RunConfig, out: Path, args) -> int:
    params = _single_mode(cfg, "reachable")
    if cfg.grid is None:
        raise ConfigError("grid: required block for reachable")
    g = cfg.grid
    omega_max = g.omega_max if g.omega_max is not None else cfg.optimizer.omega_max
    if omega_max is None:
        raise ConfigError("grid.omega_max: reachable maps need a finite bound")
    spec = GridSpec(g.t_max, g.n_t, g.n_pop, omega_max, cfg.initial, cfg.dt)
    start = time.perf_counter()
    pre = prescan_constant(params, spec, g.n_omega)
    cells = map_reachable(params, spec, cfg.optimizer.max_iters, cfg.optimizer.seed, _threads(args), pre)
    q = cfg.q_unit
    write_csv(out / "grid.csv", GRID_COLUMNS, ((c.t_q * q, c.pop_target, c.status, c.final_cost) for c in cells))
    write_csv(
        out / "boundary.csv",
        BOUNDARY_COLUMNS,
        zip(pre.boundary_times * q, pre.boundary_zero, pre.boundary_max),
    )
    write_json(
        out / "summary.json",
        {
            "counts": status_counts(cells),
            "params": {"p": params.p / q, "q": params.q / q, "omega_c": params.omega_c / q, "omega_max": omega_max / q},
            "grid": {"t_max": g.t_max, "n_t": g.n_t, "n_pop": g.n_pop, "n_omega": g.n_omega, "dt": cfg.dt},
            "initial": cfg.initial_label,
            "seed": cfg.optimizer.seed,
            "budget": cfg.optimizer.max_iters,
            "symmetric_prescan": pre.symmetric,
            "runtime_s": time.perf_counter() - start,
        },
    )
    return EXIT_OK


def _selectivity_run(cfg: RunConfig, params: SystemParams, omega_max, threads: int):
    sel, opt = cfg.selectivity, cfg.optimizer
    problem = SelectivityProblem(params, sel.alpha, sel.lam, sel.t_f, cfg.initial, omega_max)
    start = time.perf_counter()
    best, runs = optimize_restarts(problem, opt.restarts, opt.seed, cfg.dt, opt.max_iters, opt.tol, workers=threads)
    pop1, pop2 = problem.populations(best.field.samples, best.field.dt)
    free = np.zeros(best.field.n_steps)
    free1 = final_population(problem.params1, free, best.field.dt, cfg.initial)
    free2 = final_population(problem.params2, free, best.field.dt, cfg.initial)
    gain = None
    if abs(free1 - free2) >= GAIN_DENOM_FLOOR:
        gain = selectivity_gain(pop1, pop2, free1, free2)
    summary = {
        "C": best.cost,
        "G": gain,
        "pop1": pop1,
        "pop2": pop2,
        "pop1_free": free1,
        "pop2_free": free2,
        "restarts_used": len(runs),
        "best_seed": best.seed,
        "max_abs_omega": float(np.abs(best.field.samples).max()) / cfg.q_unit,
        "omega_max": None if omega_max is None else omega_max / cfg.q_unit,
        "alpha": sel.alpha,
        "lambda": sel.lam,
        "t_f": sel.t_f,
        "runtime_s": time.perf_counter() - start,
    }
    return best, summary


def cmd_selectivity(cfg: RunConfig, out: Path, args) -> int:
    params = _single_mode(cfg, "selectivity")
    if cfg.selectivity is None:
        raise ConfigError("selectivity: required block for selectivity")
    threads = _threads(args)
    q = cfg.q_unit
    if cfg.selectivity.sweep is None:
        best, summary = _selectivity_run(cfg, params, cfg.optimizer.omega_max, threads)
        write_csv(out / "field.csv", FIELD_COLUMNS, _field_rows(best.field, q))
        write_json(out / "summary.json", summary)
        return EXIT_OK
    rows = []
    for bound in cfg.selectivity.sweep:
        best, summary = _selectivity_run(cfg, params, bound, threads)
        tag = f"{bound:g}"
        write_csv(out / f"field_wmax_{tag}.csv", FIELD_COLUMNS, _field_rows(best.field, q))
        write_json(out / f"summary_wmax_{tag}.json", summary)
        rows.append((bound / q, summary["C"], summary["pop1"], summary["pop2"], summary["max_abs_omega"]))
    write_csv(out / "sweep.csv", ("omega_max", "C", "pop1", "pop2", "max_abs_omega"), rows)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "reachable": cmd_reachable,
    "selectivity": cmd_selectivity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudomode-control", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override optimizer.seed")
        p.add_argument("--threads", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or 1)")
        p.add_argument("--strict", action="store_true", help="exit 4 when the optimisation target is not reached")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _effective_config(load_config(args.config), args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](cfg, out, args)
        write_json(out / "config_echo.json", cfg.to_dict())
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, OptimizationError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
