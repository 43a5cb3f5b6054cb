"""Reachable (time, population) maps under bounded detuning.

The plane is cut into cells whose centres are point targets. A prescan with
constant fields marks what a constant detuning can already reach; every other
cell gets its own projected-gradient run with the cell time as horizon.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import CASE1, ControlField, ReducedState, SystemParams, _propagator_entries
from .optimizer import (
    DEFAULT_DT,
    REACHED_THRESHOLD,
    OptimizationError,
    PopulationTargetProblem,
    optimize,
    random_field,
)
from .shapes import grid_for

log = logging.getLogger(__name__)

__all__ = [
    "NEAR_THRESHOLD",
    "STATUSES",
    "GridSpec",
    "CellResult",
    "Prescan",
    "classify",
    "constant_populations",
    "prescan_constant",
    "solve_cell",
    "map_reachable",
    "status_counts",
]

NEAR_THRESHOLD = 0.05
STATUSES = ("constant_reachable", "reached", "near", "unreached")
# a cell run stops once its cost is this small; classification only needs < 0.01
CELL_STOP_COST = 1e-3


@dataclass(frozen=True)
class GridSpec:
    t_max: float
    n_t: int
    n_pop: int
    omega_max: float
    init: ReducedState = CASE1
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        if self.n_t < 1 or self.n_pop < 1:
            raise ValueError("grid needs at least one row and one column")
        if not self.omega_max >= 0:
            raise ValueError("omega_max must be >= 0")

    @property
    def times(self) -> np.ndarray:
        """Column centres."""
        return (np.arange(self.n_t) + 0.5) * self.t_max / self.n_t

    @property
    def pops(self) -> np.ndarray:
        """Row centres in [0, 1]."""
        return (np.arange(self.n_pop) + 0.5) / self.n_pop


@dataclass
class CellResult:
    t_q: float
    pop_target: float
    status: str
    final_cost: float
    field: ControlField | None = None


def classify(cost: float, thresholds: tuple[float, float] = (REACHED_THRESHOLD, NEAR_THRESHOLD)) -> str:
    """'reached' below the first threshold, 'near' below the second, else 'unreached'."""
    reached, near = thresholds
    if cost < reached:
        return "reached"
    if cost < near:
        return "near"
    return "unreached"


def _is_real_state(s: ReducedState) -> bool:
    # |c1|^2 is even in w when (c1, y) is real up to a global phase
    v = s.as_array()
    k = int(np.argmax(np.abs(v)))
    if abs(v[k]) == 0:
        return True
    w = v * np.conj(v[k]) / abs(v[k])
    return bool(np.all(np.abs(w.imag) <= 1e-14 * np.abs(v).max()))


def constant_populations(params: SystemParams, omegas, times, s0: ReducedState) -> np.ndarray:
    """|c1(t)|^2 under constant detuning, shape (len(omegas), len(times))."""
    w = np.asarray(omegas, dtype=float)[:, None]
    t = np.asarray(times, dtype=float)[None, :]
    u11, u12, _ = _propagator_entries(params.p, params.q, w, t)
    c1 = u11 * s0.c1 + u12 * s0.y
    return np.abs(c1) ** 2


@dataclass
class Prescan:
    omegas: np.ndarray
    symmetric: bool
    reachable: np.ndarray  # bool, (n_pop, n_t)
    best_cost: np.ndarray  # (n_pop, n_t)
    best_omega: np.ndarray  # (n_pop, n_t)
    boundary_times: np.ndarray
    boundary_zero: np.ndarray  # population under w = 0
    boundary_max: np.ndarray  # population under w = omega_max


def prescan_constant(params: SystemParams, grid: GridSpec, n_omega: int = 101) -> Prescan:
    """Mark the cells a constant detuning in [-omega_max, omega_max] reaches within 0.01.

    For real initial states the population is even in the detuning, so only
    [0, omega_max] is swept (``symmetric`` is then set on the result).
    """
    if n_omega < 2:
        raise ValueError("n_omega must be >= 2")
    symmetric = _is_real_state(grid.init)
    lo = 0.0 if symmetric else -grid.omega_max
    omegas = np.linspace(lo, grid.omega_max, n_omega)
    pops = constant_populations(params, omegas, grid.times, grid.init)  # (n_omega, n_t)
    diff = np.abs(pops[:, None, :] - grid.pops[None, :, None])  # (n_omega, n_pop, n_t)
    idx = np.argmin(diff, axis=0)
    best = np.take_along_axis(diff, idx[None], axis=0)[0]
    n_b, _ = grid_for(grid.t_max, grid.dt)
    bt = np.linspace(0.0, grid.t_max, n_b + 1)
    edge = constant_populations(params, [0.0, grid.omega_max], bt, grid.init)
    return Prescan(
        omegas=omegas,
        symmetric=symmetric,
        reachable=best < REACHED_THRESHOLD,
        best_cost=best,
        best_omega=omegas[idx],
        boundary_times=bt,
        boundary_zero=edge[0],
        boundary_max=edge[1],
    )


def solve_cell(
    params: SystemParams,
    t_target: float,
    pop_target: float,
    omega_max: float,
    s0: ReducedState = CASE1,
    dt: float = DEFAULT_DT,
    budget: int = 800,
    seed=0,
    keep_field: bool = False,
    near: float = NEAR_THRESHOLD,
) -> CellResult:
    """Optimise a single cell; failures are reported as unreached with infinite cost."""
    if t_target <= 0:
        cost = abs(s0.pop - pop_target)
        return CellResult(t_target, pop_target, classify(cost, (REACHED_THRESHOLD, near)), cost)
    problem = PopulationTargetProblem(params, t_target, pop_target, s0, omega_max)
    n, step = grid_for(t_target, dt)
    rng = np.random.default_rng(seed)
    try:
        res = optimize(problem, random_field(problem, n, step, rng), budget, stop_cost=CELL_STOP_COST)
    except (OptimizationError, FloatingPointError, ValueError) as exc:
        log.warning("cell (t=%g, pop=%g) failed: %s", t_target, pop_target, exc)
        return CellResult(t_target, pop_target, "unreached", math.inf)
    status = classify(res.cost, (REACHED_THRESHOLD, near))
    return CellResult(t_target, pop_target, status, res.cost, res.field if keep_field else None)


def _solve_task(args):
    params, t, pop, grid, budget, seed, keep_field = args
    return solve_cell(params, t, pop, grid.omega_max, grid.init, grid.dt, budget, seed, keep_field)


def _default_workers() -> int:
    env = os.environ.get("PSEUDOMODE_THREADS")
    if env:
        return max(1, int(env))
    return 1


def map_reachable(
    params: SystemParams,
    grid: GridSpec,
    budget: int = 800,
    seed: int = 0,
    workers: int | None = None,
    prescan: Prescan | None = None,
    keep_fields: bool = False,
) -> list[CellResult]:
    """Classify every grid cell; results are row-major (population rows, time columns).

    Cell (i, j) is seeded with ``SeedSequence([seed, i, j])``, so the output
    does not depend on how cells are scheduled across ``workers`` processes.
    """
    if prescan is None:
        prescan = prescan_constant(params, grid)
    times, pops = grid.times, grid.pops
    results: list[CellResult | None] = [None] * (grid.n_pop * grid.n_t)
    tasks, slots = [], []
    for i, pop in enumerate(pops):
        for j, t in enumerate(times):
            k = i * grid.n_t + j
            if prescan.reachable[i, j]:
                results[k] = CellResult(float(t), float(pop), "constant_reachable", float(prescan.best_cost[i, j]))
            else:
                cell_seed = np.random.SeedSequence([seed, i, j])
                tasks.append((params, float(t), float(pop), grid, budget, cell_seed, keep_fields))
                slots.append(k)
    workers = workers or _default_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(_solve_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        solved = [_solve_task(task) for task in tasks]
    for k, cell in zip(slots, solved):
        results[k] = cell
    return results


def status_counts(cells) -> dict[str, int]:
    counts = {s: 0 for s in STATUSES}
    for c in cells:
        counts[c.status] += 1
    return counts
