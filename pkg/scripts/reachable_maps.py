"""Reachable-set maps for the strong (w_max = 2, 10) and weak coupling cases.

Each map goes to its own grid CSV plus a boundary CSV; status counts are printed.
"""
import argparse
import math
import time
from pathlib import Path

from pseudomode_control import CASE1, CASE2, SystemParams
from pseudomode_control.output import BOUNDARY_COLUMNS, GRID_COLUMNS, write_csv
from pseudomode_control.reachable import GridSpec, map_reachable, prescan_constant, status_counts

RUNS = {
    "strong_w10": (math.sqrt(5.0), dict(t_max=3.0, omega_max=10.0, dt=0.02)),
    "strong_w2": (math.sqrt(5.0), dict(t_max=3.0, omega_max=2.0, dt=0.02)),
    "weak_w2": (0.25, dict(t_max=30.0, omega_max=2.0, dt=0.1)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", nargs="+", default=list(RUNS), choices=list(RUNS))
    ap.add_argument("--n", type=int, default=40, help="cells per axis")
    ap.add_argument("--case", choices=["case1", "case2"], default="case1")
    ap.add_argument("--budget", type=int, default=800)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("out/maps"))
    args = ap.parse_args()

    init = CASE1 if args.case == "case1" else CASE2
    for name in args.runs:
        p, kw = RUNS[name]
        params = SystemParams(p)
        grid = GridSpec(n_t=args.n, n_pop=args.n, init=init, **kw)
        start = time.perf_counter()
        pre = prescan_constant(params, grid)
        cells = map_reachable(params, grid, args.budget, args.seed, args.workers, pre)
        tag = f"{name}_{args.case}"
        write_csv(args.out / f"{tag}_grid.csv", GRID_COLUMNS,
                  ((c.t_q, c.pop_target, c.status, c.final_cost) for c in cells))
        write_csv(args.out / f"{tag}_boundary.csv", BOUNDARY_COLUMNS,
                  zip(pre.boundary_times, pre.boundary_zero, pre.boundary_max))
        print(f"{tag}: {status_counts(cells)} in {time.perf_counter() - start:.0f}s")


if __name__ == "__main__":
    main()
