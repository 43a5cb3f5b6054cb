"""Optimal control of a qubit coupled to a Lorentzian bath through its effective mode."""
from .dynamics import (
    CASE1,
    CASE2,
    ControlField,
    Matrix2,
    MultiModeParams,
    MultiModeState,
    ReducedState,
    SystemParams,
    Trajectory,
    constant_propagator,
    propagate,
    propagate_multimode,
)
from .optimizer import PopulationTargetProblem, SelectivityProblem, optimize, optimize_restarts
from .reachable import GridSpec, map_reachable, prescan_constant
from .shapes import ShapeSpec, magic_ratio, magic_sinusoid, render, switch_time_tstar

__version__ = "0.1.0"
