import math

import numpy as np
import pytest

from conftest import quadratic_problem, quadratic_triple
from proxflow import prox
from proxflow.damping import ConstantDamping, DecayingDamping
from proxflow.errors import ParameterError
from proxflow.odelab import (
    AcceleratedFlow,
    GradientFlow,
    continuous_rate_check,
    local_error_order,
    reference_integrator_order,
    reference_trajectory,
)
from proxflow.solvers import Problem


def test_reference_integrator_is_at_least_fourth_order():
    assert reference_integrator_order() >= 3.9


def test_gradient_flow_zero_field_constant(rng):
    zero = prox.FunctionOracle(value=lambda x: 0.0, grad=np.zeros_like)
    x0 = rng.standard_normal(3)
    traj = reference_trajectory(GradientFlow(zero), x0, T=2.0, steps=50)
    np.testing.assert_array_equal(traj.xs[-1], x0)


def test_gradient_flow_scalar_decay():
    quad = prox.Quadratic(np.array([[1.0]]))
    traj = reference_trajectory(GradientFlow(quad), np.array([1.0]), T=1.0, steps=200)
    assert traj.xs[-1][0] == pytest.approx(math.exp(-1.0), abs=1e-10)


def test_accelerated_flow_critically_damped_closed_form():
    # xddot + 2 xdot + x = 0 from (x0, v0): x(t) = (x0 + (v0+x0) t) e^{-t}
    quad = prox.Quadratic(np.array([[1.0]]))
    flow = AcceleratedFlow(quad, ConstantDamping(2.0))
    x0, v0 = 1.0, 0.5
    traj = reference_trajectory(flow, np.array([x0]), np.array([v0]), T=3.0, steps=600)
    expected = (x0 + (v0 + x0) * traj.ts) * np.exp(-traj.ts)
    np.testing.assert_allclose(traj.xs[:, 0], expected, atol=1e-8)


def test_accelerated_flow_velocity_decay_zero_field():
    zero = prox.FunctionOracle(value=lambda x: 0.0, grad=np.zeros_like)
    flow = AcceleratedFlow(zero, ConstantDamping(1.5))
    traj = reference_trajectory(flow, np.zeros(1), np.array([1.0]), T=2.0, steps=400)
    np.testing.assert_allclose(traj.vs[:, 0], np.exp(-1.5 * traj.ts), atol=1e-9)


def test_reference_trajectory_preconditions():
    quad = prox.Quadratic(np.array([[1.0]]))
    with pytest.raises(ParameterError):
        reference_trajectory(GradientFlow(quad), np.ones(1), steps=0)
    flow = AcceleratedFlow(quad, DecayingDamping(3.0))
    with pytest.raises(ParameterError):
        reference_trajectory(flow, np.ones(1), np.ones(1), t0=0.0, T=1.0)
    with pytest.raises(ParameterError):
        reference_trajectory(flow, np.ones(1), None, t0=1.0, T=2.0)


H_GRID = np.logspace(-3, -1, 8)


@pytest.mark.parametrize("method", ["admm", "dy", "tseng"])
@pytest.mark.parametrize("schedule", [DecayingDamping(3.0), ConstantDamping(1.0)],
                         ids=["decaying", "constant"])
def test_local_error_order_accelerated(method, schedule):
    problem = quadratic_problem(seed=7)
    if method == "tseng":
        problem = Problem(g=problem.g, w=problem.w)
    fit = local_error_order(method, problem, schedule, H_GRID, x0=np.array([1.2, -0.7, 0.4]))
    assert 1.8 <= fit.slope <= 2.2
    assert fit.r_squared > 0.99


def test_local_error_order_combined_damping():
    from proxflow.damping import CombinedDamping

    problem = quadratic_problem(seed=7)
    fit = local_error_order("dy", problem, CombinedDamping(2.0, 0.4), H_GRID,
                            x0=np.array([1.2, -0.7, 0.4]))
    assert 1.8 <= fit.slope <= 2.2


@pytest.mark.parametrize("method", ["admm", "fb"])
def test_local_error_order_plain(method):
    problem = quadratic_problem(seed=7)
    if method == "fb":
        problem = Problem(g=problem.g, w=problem.w)
    fit = local_error_order(method, problem, None, H_GRID, x0=np.array([1.2, -0.7, 0.4]))
    assert 1.8 <= fit.slope <= 2.2


def test_local_error_order_translation_invariant():
    # replacing every term value(x) by value(x - a) shifts the whole
    # measurement rigidly and leaves the fitted order unchanged
    f, g, w = quadratic_triple(seed=7)
    problem = quadratic_problem(seed=7)
    a = np.array([0.4, -1.1, 0.6])

    def shift(term):
        return prox.Quadratic(term.P, term.q - term.P @ a)

    shifted = Problem(f=shift(f), g=shift(g), w=shift(w))
    x0 = np.array([1.2, -0.7, 0.4])
    fit = local_error_order("dy", problem, ConstantDamping(1.0), H_GRID, x0=x0)
    fit_shifted = local_error_order("dy", shifted, ConstantDamping(1.0), H_GRID, x0=x0 + a)
    np.testing.assert_allclose(fit_shifted.errors, fit.errors, rtol=1e-6, atol=1e-14)
    assert fit_shifted.slope == pytest.approx(fit.slope, abs=1e-4)


def test_local_error_order_oracle_resolution_insensitive():
    # halving the RK substep changes the measured errors by under 1%
    problem = quadratic_problem(seed=7)
    x0 = np.array([1.2, -0.7, 0.4])
    fit1 = local_error_order("dy", problem, ConstantDamping(1.0), H_GRID, x0=x0,
                             rk_substeps=64)
    fit2 = local_error_order("dy", problem, ConstantDamping(1.0), H_GRID, x0=x0,
                             rk_substeps=128)
    np.testing.assert_allclose(fit2.errors, fit1.errors, rtol=1e-2)


def test_local_error_order_degenerate_grid_rejected():
    problem = quadratic_problem(seed=7)
    with pytest.raises(ParameterError):
        local_error_order("dy", problem, None, [1e-3, 2e-3], x0=np.zeros(3))


def test_rate_gradient_flow_strongly_convex():
    m = 1.0
    quad = prox.Quadratic(np.diag([m, 4.0]))
    fit = continuous_rate_check(GradientFlow(quad), quad, np.zeros(2), 0.0, T=8.0,
                                x0=np.array([1.0, 1.0]), steps=4000, kind="exponential")
    assert fit.exponent == pytest.approx(m, rel=0.15)


def test_rate_accelerated_decaying_convex():
    quartic = prox.FunctionOracle(value=lambda x: 0.25 * float(np.sum(x ** 4)),
                                  grad=lambda x: x ** 3)
    fit = continuous_rate_check(
        AcceleratedFlow(quartic, DecayingDamping(3.0)), quartic,
        np.zeros(1), 0.0, T=300.0, x0=np.array([1.5]), v0=np.zeros(1), t0=1.0,
        steps=120_000, kind="power", window=(0.03, 1.0))
    assert fit.exponent <= -1.7


def test_rate_accelerated_constant_strongly_convex():
    m = 4.0
    quad = prox.Quadratic(np.array([[m]]))
    fit = continuous_rate_check(
        AcceleratedFlow(quad, ConstantDamping(2.0 * math.sqrt(m))), quad,
        np.zeros(1), 0.0, T=10.0, x0=np.array([1.0]), v0=np.zeros(1),
        steps=8000, kind="exponential")
    assert fit.exponent == pytest.approx(math.sqrt(m), rel=0.25)


def test_rate_gradient_flow_convex_power():
    # descent flow on the quartic decays at least as fast as 1/t
    quartic = prox.FunctionOracle(value=lambda x: 0.25 * float(np.sum(x ** 4)),
                                  grad=lambda x: x ** 3)
    fit = continuous_rate_check(GradientFlow(quartic), quartic, np.zeros(1), 0.0,
                                T=200.0, x0=np.array([1.5]), t0=1.0, steps=20_000,
                                kind="power", window=(0.05, 1.0))
    assert fit.exponent <= -0.9
