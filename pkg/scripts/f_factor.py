"""Weak-coupling time rescaling f under a magic-frequency sinusoid.

Fits f for several couplings and evaluates both qubits at the time the second
one is expected to reach its ground state.
"""
import argparse

from pseudomode_control import CASE1, SystemParams, magic_sinusoid, propagate, render
from pseudomode_control.optimizer import fit_f_factor


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega-max", type=float, default=6.36)
    ap.add_argument("--p", type=float, nargs="+", default=[0.25, 0.125])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--dt", type=float, default=0.02)
    args = ap.parse_args()

    w = args.omega_max
    fs = {}
    for p in args.p:
        horizon = 60.0 / p**2  # long enough to fall below the fit floor
        fs[p] = fit_f_factor(SystemParams(p), render(magic_sinusoid(w), args.dt, horizon), w)
        print(f"p = {p:g}: f = {fs[p]:.4f}")
    p1 = args.p[0]
    p2 = p1 * (1 + args.alpha)
    t_f = 5 * (1 + w**2) / (2 * p2**2 * fs[p1])
    field = render(magic_sinusoid(w), args.dt, t_f)
    pop1 = propagate(SystemParams(p1), field, CASE1).pop[-1]
    pop2 = propagate(SystemParams(p2), field, CASE1).pop[-1]
    print(f"t_f = {t_f:.1f}: pop1 = {pop1:.4f}, pop2 = {pop2:.4f}, difference {pop1 - pop2:.4f}")


if __name__ == "__main__":
    main()
