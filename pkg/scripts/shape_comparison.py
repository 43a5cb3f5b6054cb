"""Constant, square-wave and magic-sinusoid detuning at Theta = 20 q.

Writes one trajectory CSV per shape and prints the time-averaged population.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from pseudomode_control import CASE1, ShapeSpec, SystemParams, magic_ratio, propagate, render
from pseudomode_control.output import TRAJECTORY_COLUMNS, trajectory_rows, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta", type=float, default=20.0)
    ap.add_argument("--horizon", type=float, default=3.0)
    ap.add_argument("--dt", type=float, default=0.0005)
    ap.add_argument("--out", type=Path, default=Path("out/shapes"))
    args = ap.parse_args()

    params = SystemParams(math.sqrt(5.0))
    w = magic_ratio() * args.theta
    shapes = {
        "constant": ShapeSpec("constant", omega_max=w),
        "square_wave": ShapeSpec("square_wave", omega_max=w),
        "sinusoid": ShapeSpec("sinusoid", omega_max=w, theta=args.theta),
    }
    for name, shape in shapes.items():
        field = render(shape, args.dt, args.horizon)
        traj = propagate(params, field, CASE1)
        omegas = np.append(field.samples, field.samples[-1])
        write_csv(args.out / f"{name}.csv", TRAJECTORY_COLUMNS,
                  trajectory_rows(traj.times, traj.c1, traj.y[:, None], omegas))
        mean = np.sum(0.5 * (traj.pop[1:] + traj.pop[:-1]) * np.diff(traj.times)) / args.horizon
        print(f"{name:12s} mean pop {mean:.5f}  final {traj.pop[-1]:.5f}")


if __name__ == "__main__":
    main()
