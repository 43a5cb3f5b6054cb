"""Two-qubit selectivity: C and G against alpha, and C against the bound w_max."""
import argparse
import math

import numpy as np

from pseudomode_control import SystemParams
from pseudomode_control.optimizer import SelectivityProblem, final_population, optimize_restarts, selectivity_gain


def run(params, alpha, lam, t_f, omega_max, restarts, seed, workers):
    problem = SelectivityProblem(params, alpha, lam, t_f, omega_max=omega_max)
    best, runs = optimize_restarts(problem, restarts, seed, workers=workers)
    pop1, pop2 = problem.populations(best.field.samples, best.field.dt)
    zero = np.zeros(best.field.n_steps)
    free1 = final_population(problem.params1, zero, best.field.dt, problem.s0)
    free2 = final_population(problem.params2, zero, best.field.dt, problem.s0)
    gain = selectivity_gain(pop1, pop2, free1, free2) if abs(free1 - free2) > 1e-12 else float("nan")
    return best, pop1, pop2, gain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mode", choices=["alpha", "bound"], default="alpha")
    ap.add_argument("--lam", type=float, default=2.0)
    ap.add_argument("--t-f", type=float, default=1.225)
    ap.add_argument("--restarts", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    params = SystemParams(math.sqrt(5.0))
    if args.mode == "alpha":
        print("alpha      C        G     pop1    pop2   max|w|")
        for alpha in np.arange(0.05, 0.501, 0.05):
            best, pop1, pop2, gain = run(params, alpha, args.lam, args.t_f, None, args.restarts, args.seed, args.workers)
            amp = np.abs(best.field.samples).max()
            print(f"{alpha:5.2f} {best.cost:8.4f} {gain:8.2f} {pop1:7.4f} {pop2:7.4f} {amp:7.2f}")
    else:
        print("w_max      C      pop1    pop2")
        for bound in range(1, 11):
            best, pop1, pop2, _ = run(params, 0.5, args.lam, args.t_f, float(bound), args.restarts, args.seed, args.workers)
            print(f"{bound:5d} {best.cost:8.4f} {pop1:7.4f} {pop2:7.4f}")


if __name__ == "__main__":
    main()
