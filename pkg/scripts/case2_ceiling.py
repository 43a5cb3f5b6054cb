"""Largest |c1|^2 reachable from (c1, y) = (0, 1) at a fixed time.

Compares the optimiser (target population 1) against the two-piece protocol
that waits at w = 0 until t* and then holds w_max.
"""
import argparse
import math

from pseudomode_control import CASE2, SystemParams, constant_propagator
from pseudomode_control.optimizer import PopulationTargetProblem, optimize_restarts
from pseudomode_control.shapes import switch_time_tstar


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, nargs="+", default=[0.8, 1.0, 1.4, 2.0, 3.0])
    ap.add_argument("--omega-max", type=float, default=10.0)
    ap.add_argument("--restarts", type=int, default=5)
    args = ap.parse_args()

    params = SystemParams(math.sqrt(5.0))
    t_star = switch_time_tstar(params)
    first = constant_propagator(params, 0.0, t_star)
    print(f"t* = {t_star:.6f}")
    print("   t   two-piece  optimised")
    for t in args.t:
        if t > t_star:
            second = constant_propagator(params, args.omega_max, t - t_star)
            two = abs(second.u11 * first.u12 + second.u12 * first.u22) ** 2
        else:
            two = abs(constant_propagator(params, 0.0, t).u12) ** 2
        problem = PopulationTargetProblem(params, t, 1.0, CASE2, args.omega_max)
        best, _ = optimize_restarts(problem, args.restarts)
        print(f"{t:5.2f} {two:10.4f} {1 - best.cost:10.4f}")


if __name__ == "__main__":
    main()
