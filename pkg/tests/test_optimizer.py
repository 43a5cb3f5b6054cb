import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudomode_control.dynamics import CASE1, CASE2, ControlField, ReducedState, SystemParams, propagate
from pseudomode_control.optimizer import (
    OptimizationError,
    PopulationTargetProblem,
    SelectivityProblem,
    UndefinedGainError,
    final_population,
    fit_f_factor,
    gradient,
    optimize,
    optimize_restarts,
    population_cost,
    population_gradient,
    random_field,
    selectivity_cost,
    selectivity_gain,
)
from pseudomode_control.shapes import ShapeSpec, grid_for, magic_sinusoid, render

SQRT5 = math.sqrt(5.0)


def central_differences(problem, samples, dt, h=1e-6):
    out = np.empty(len(samples))
    for k in range(len(samples)):
        up, down = samples.copy(), samples.copy()
        up[k] += h
        down[k] -= h
        out[k] = (problem.cost(up, dt) - problem.cost(down, dt)) / (2 * h)
    return out


# -- costs ------------------------------------------------------------------


def test_population_cost():
    assert population_cost(ReducedState(math.sqrt(0.5), 0), 0.5) == pytest.approx(0.0, abs=1e-15)
    assert population_cost(ReducedState(math.sqrt(0.3), 0), 0.8) == pytest.approx(0.5)


def test_selectivity_cost():
    assert selectivity_cost(1.0, 0.0, 7.0) == -1.0
    assert selectivity_cost(0.0, 0.0, 2.0) == 0.0
    assert selectivity_cost(0.4, 0.1, 2.0) == pytest.approx(-0.2)


def test_selectivity_gain():
    assert selectivity_gain(1.0, 0.0, 0.6, 0.4) == pytest.approx(5.0)
    assert selectivity_gain(0.7, 0.2, 0.7, 0.2) == pytest.approx(1.0)
    with pytest.raises(UndefinedGainError):
        selectivity_gain(0.5, 0.1, 0.3, 0.3)


def test_problem_validation():
    params = SystemParams(1.0)
    with pytest.raises(ValueError):
        PopulationTargetProblem(params, -1.0, 0.5)
    with pytest.raises(ValueError):
        PopulationTargetProblem(params, 1.0, 1.5)
    with pytest.raises(ValueError):
        SelectivityProblem(params, alpha=-1.0)
    with pytest.raises(ValueError):
        SelectivityProblem(params, lam=-0.1)
    assert SelectivityProblem(params, alpha=0.5).params2.p == pytest.approx(1.5)


# -- gradients ----------------------------------------------------------------


def test_final_population_matches_propagation(rng):
    params = SystemParams(SQRT5)
    samples = rng.uniform(-10, 10, 30)
    traj = propagate(params, ControlField(0.02, samples), CASE2)
    assert final_population(params, samples, 0.02, CASE2) == pytest.approx(traj.pop[-1], abs=1e-13)


def test_gradient_vanishes_without_coupling(rng):
    problem = PopulationTargetProblem(SystemParams(0.0), 0.4, 0.3)
    field = ControlField(0.02, rng.uniform(-5, 5, 20))
    # zero analytically; the block exponential leaves rounding noise only
    assert np.max(np.abs(gradient(problem, field))) <= 1e-15


def test_gradient_matches_finite_differences(rng):
    problem = PopulationTargetProblem(SystemParams(SQRT5), 0.4, 0.9)
    samples = rng.uniform(-10, 10, 20)
    exact = problem.cost_and_gradient(samples, 0.02)[1]
    fd = central_differences(problem, samples, 0.02)
    assert np.max(np.abs(exact - fd)) <= 1e-6 * np.max(np.abs(exact))


def test_selectivity_gradient_is_linear_combination(rng):
    problem = SelectivityProblem(SystemParams(SQRT5), alpha=0.5, lam=2.0, t_final=0.4)
    samples = rng.uniform(-5, 5, 20)
    _, g1 = population_gradient(problem.params1, samples, 0.02, CASE1)
    _, g2 = population_gradient(problem.params2, samples, 0.02, CASE1)
    assert np.allclose(problem.cost_and_gradient(samples, 0.02)[1], 2.0 * g2 - g1, rtol=0, atol=1e-15)


@settings(max_examples=25)
@given(
    p=st.floats(0.1, 5.0),
    n=st.integers(1, 25),
    target=st.floats(0.0, 1.0),
    seed=st.integers(0, 2**31),
    case2=st.booleans(),
)
def test_gradient_property(p, n, target, seed, case2):
    rng = np.random.default_rng(seed)
    s0 = CASE2 if case2 else CASE1
    problem = PopulationTargetProblem(SystemParams(p), n * 0.05, target, s0)
    samples = rng.uniform(-15, 15, n)
    pop, g = population_gradient(problem.params, samples, 0.05, s0)
    fd = np.empty(n)
    h = 1e-6
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        fd[k] = (final_population(problem.params, samples + e, 0.05, s0)
                 - final_population(problem.params, samples - e, 0.05, s0)) / (2 * h)
    # finite differences bottom out near eps / h
    scale = max(np.max(np.abs(g)), 1e-4)
    assert np.max(np.abs(g - fd)) <= 1e-5 * scale


# -- optimize ------------------------------------------------------------------


def test_initial_point_optimal():
    params = SystemParams(SQRT5)
    free = propagate(params, ControlField.constant(0.0, 0.02, 40), CASE1).pop[-1]
    problem = PopulationTargetProblem(params, 0.8, free, omega_max=10.0)
    res = optimize(problem, ControlField.constant(0.0, 0.02, 40))
    assert res.iterations <= 1
    assert res.cost == pytest.approx(0.0, abs=1e-12)
    assert res.converged


def test_reaches_low_population_target():
    problem = PopulationTargetProblem(SystemParams(SQRT5), 1.5, 0.02, CASE1, 10.0)
    n, dt = grid_for(1.5, 0.02)
    res = optimize(problem, random_field(problem, n, dt, np.random.default_rng(1)))
    assert res.cost < 0.01


@pytest.mark.parametrize("seed", range(4))
def test_history_monotone_and_bounds(seed):
    rng = np.random.default_rng(seed)
    problem = PopulationTargetProblem(SystemParams(SQRT5), 2.0, 0.6, CASE2, 3.0)
    res = optimize(problem, random_field(problem, 100, 0.02, rng), max_iters=150)
    assert np.all(np.diff(res.cost_history) <= 0)
    assert np.max(np.abs(res.field.samples)) <= 3.0
    assert len(res.cost_history) == res.iterations + 1


def test_selectivity_history_monotone():
    problem = SelectivityProblem(SystemParams(SQRT5), t_final=1.225)
    n, dt = grid_for(1.225, 0.02)
    res = optimize(problem, random_field(problem, n, dt, np.random.default_rng(3)), max_iters=100)
    assert np.all(np.diff(res.cost_history) <= 0)
    assert res.cost < res.cost_history[0]


def test_optimize_clips_initial_field():
    problem = PopulationTargetProblem(SystemParams(SQRT5), 0.2, 0.5, omega_max=1.0)
    res = optimize(problem, ControlField(0.02, np.full(10, 5.0)), max_iters=5)
    assert np.max(np.abs(res.field.samples)) <= 1.0


def test_non_finite_cost_aborts():
    class Broken(PopulationTargetProblem):
        def cost_and_gradient(self, samples, dt):
            return math.nan, np.zeros_like(samples)

    problem = Broken(SystemParams(1.0), 0.2, 0.5)
    with pytest.raises(OptimizationError):
        optimize(problem, ControlField(0.02, np.zeros(10)))


def test_stop_cost_and_callback():
    seen = []
    problem = PopulationTargetProblem(SystemParams(SQRT5), 1.0, 0.2, omega_max=10.0)
    res = optimize(
        problem,
        random_field(problem, 50, 0.02, np.random.default_rng(0)),
        stop_cost=0.05,
        callback=lambda it, c: seen.append((it, c)),
    )
    assert res.cost <= 0.05 and res.converged
    assert [c for _, c in seen] == res.cost_history[1:]


def test_restarts_deterministic_and_seeded():
    problem = SelectivityProblem(SystemParams(SQRT5), t_final=0.6)
    best, runs = optimize_restarts(problem, 3, seed=11, max_iters=30)
    assert [r.seed for r in runs] == [11, 12, 13]
    assert best.cost == min(r.cost for r in runs)
    again, _ = optimize_restarts(problem, 3, seed=11, max_iters=30, workers=2)
    assert np.array_equal(again.field.samples, best.field.samples)
    with pytest.raises(ValueError):
        optimize_restarts(problem, 0)


# -- f factor -------------------------------------------------------------------


def test_f_factor_constant_field_is_one():
    params = SystemParams(0.25)
    field = render(ShapeSpec("constant", omega_max=6.36), 0.02, 800.0)
    assert fit_f_factor(params, field, 6.36) == pytest.approx(1.0, rel=0.01)


def test_f_factor_independent_of_coupling():
    field = render(magic_sinusoid(6.36), 0.02, 3000.0)
    f1 = fit_f_factor(SystemParams(0.25), field, 6.36)
    f2 = fit_f_factor(SystemParams(0.125), field, 6.36)
    assert f1 == pytest.approx(f2, rel=0.02)


def test_f_factor_needs_samples():
    with pytest.raises(ValueError):
        fit_f_factor(SystemParams(SQRT5), ControlField(1.0, [0.0]), 1.0)


def test_weak_coupling_selectivity_is_futile():
    omega_max = 6.36
    p1 = 0.25
    field = render(magic_sinusoid(omega_max), 0.02, 3000.0)
    f = fit_f_factor(SystemParams(p1), field, omega_max)
    p2 = 1.5 * p1
    t_f = 5 * (1 + omega_max**2) / (2 * p2**2 * f)
    sine = render(magic_sinusoid(omega_max), 0.02, t_f)
    pop1 = propagate(SystemParams(p1), sine, CASE1).pop[-1]
    pop2 = propagate(SystemParams(p2), sine, CASE1).pop[-1]
    assert pop1 - pop2 == pytest.approx(0.10, abs=0.02)
    assert pop1 - pop2 < 0.41
