import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distirl import scenario
from distirl.errors import ConfigError, SimulationDiverged
from distirl.irl import control_rows
from distirl.sim import (AgentModel, ExoSystem, RewardModel, SimState, central_difference_jacobian,
                         coupled_derivative, coupled_step, rk4_step)

DT = 0.0005


def scenario_models(zeta0=(0.0, 1.0)):
    return scenario.make_agent1(), scenario.make_agent2(), scenario.make_exo(zeta0)


def initial_state(zeta0=(0.0, 1.0)):
    return SimState(0.0, np.array([1.0, -1.0]), np.array([1.0, -1.0]), np.array(zeta0), DT)


def test_rk4_zero_field():
    y = rk4_step(lambda t, y: np.zeros_like(y), 0.0, np.array([3.0, -1.0]), DT)
    assert np.array_equal(y, [3.0, -1.0])


def test_rk4_matches_exponential():
    y = rk4_step(lambda t, y: -y, 0.0, np.array([1.0]), DT)
    assert abs(y[0] - math.exp(-DT)) < 1e-12


def test_rk4_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        rk4_step(lambda t, y: y, 0.0, np.ones(1), 0.0)


def test_rk4_nonfinite_names_time():
    with pytest.raises(SimulationDiverged) as exc:
        rk4_step(lambda t, y: np.array([np.inf]), 2.5, np.ones(1), DT)
    assert exc.value.t == 2.5


def test_coupled_step_matches_fine_reference():
    a1, a2, exo = scenario_models()
    s = initial_state()
    coarse = coupled_step(s, a1, a2, exo)
    f = coupled_derivative(a1, a2, exo)
    y = np.concatenate([s.x1, s.x2, s.zeta])
    h = DT / 10
    for k in range(10):
        y = rk4_step(f, k * h, y, h)
    got = np.concatenate([coarse.x1, coarse.x2, coarse.zeta])
    assert np.max(np.abs(got - y)) < 1e-9
    assert coarse.t == DT


def test_equilibrium_is_fixed():
    zero_policy = lambda x, t: np.zeros(1)
    a1 = AgentModel(2, 1, scenario.agent1_drift, zero_policy)
    a2 = scenario.make_agent2(policy=zero_policy)
    exo = scenario.make_exo((0.0, 0.0))
    s = SimState(0.0, np.zeros(2), np.zeros(2), np.zeros(2), DT)
    out = coupled_step(s, a1, a2, exo)
    assert np.array_equal(out.x1, s.x1) and np.array_equal(out.x2, s.x2)
    assert np.array_equal(out.zeta, s.zeta)


def test_disturbance_is_sine():
    a1, a2, exo = scenario_models()
    s = initial_state()
    worst = 0.0
    for _ in range(4000):
        s = coupled_step(s, a1, a2, exo)
        d = exo.C @ s.zeta
        worst = max(worst, abs(d[0]), abs(d[1] - math.sin(s.t)))
    assert worst < 1e-8


def test_control_row_identity_along_trajectory():
    a1, a2, exo = scenario_models()
    basis = scenario.make_basis()
    g = np.array([[0.0], [3.0]])
    s = initial_state()
    worst = 0.0
    for k in range(2000):
        s = coupled_step(s, a1, a2, exo)
        if k % 100 == 0:
            u = scenario.optimal_control(s.x2)
            rows, rhs = control_rows(s.x2, u, basis, g)
            worst = max(worst, float(np.max(np.abs(rows @ scenario.W_TRUE + rhs))))
    assert worst < 1e-12


def test_exo_norm_preserved_over_100s():
    exo = scenario.make_exo()
    z = exo.zeta.copy()
    f = lambda t, z: exo.A @ z
    for k in range(int(100 / DT)):
        z = rk4_step(f, k * DT, z, DT)
    assert abs(np.linalg.norm(z) - 1.0) < 1e-6


def test_deterministic():
    a1, a2, exo = scenario_models()
    runs = []
    for _ in range(2):
        s = initial_state()
        for _ in range(500):
            s = coupled_step(s, a1, a2, exo)
        runs.append(np.concatenate([s.x1, s.x2, s.zeta]).tobytes())
    assert runs[0] == runs[1]


def test_blowup_bound():
    a1, a2, exo = scenario_models()
    with pytest.raises(SimulationDiverged):
        coupled_step(initial_state(), a1, a2, exo, blowup=0.5)


def test_dimension_mismatch():
    a1, a2, exo = scenario_models()
    s = SimState(0.0, np.zeros(3), np.zeros(2), np.zeros(2), DT)
    with pytest.raises(ConfigError):
        coupled_step(s, a1, a2, exo)


def test_time_advances_without_drift():
    a1, a2, exo = scenario_models()
    s = initial_state()
    for _ in range(20000):
        s = coupled_step(s, a1, a2, exo)
    assert s.t == 20000 * DT


def test_reward_rejects_nonpositive_r():
    with pytest.raises(ConfigError):
        RewardModel(scenario.sigma_Q, [0, 1], [0.0], scenario.sigma_V, scenario.grad_sigma_V, [1, 1, 1])


def test_reward_and_value():
    rm = scenario.make_reward()
    x = np.array([0.5, -0.2])
    assert rm.reward(x, np.array([2.0])) == pytest.approx(0.04 + 4.0)
    assert rm.value(x) == pytest.approx(scenario.optimal_value(x))
    assert np.allclose(rm.weights, scenario.W_TRUE)


@settings(max_examples=200, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_grad_sigma_v_matches_finite_differences(a, b):
    x = np.array([a, b])
    J = central_difference_jacobian(scenario.sigma_V, x)
    G = scenario.grad_sigma_V(x)
    scale = max(1.0, float(np.max(np.abs(G))))
    assert np.max(np.abs(J - G)) <= 1e-6 * scale


def test_undisturbed_cost_matches_value():
    agent = scenario.make_agent2()

    def f(t, y):
        x = y[:2]
        u = agent.control_policy(x, t)
        return np.concatenate([agent.drift(x, u), [x[1] ** 2 + float(u @ u)]])

    x0 = np.array([1.0, -1.0])
    y = np.array([*x0, 0.0])
    dt = 0.002
    for k in range(int(60 / dt)):
        y = rk4_step(f, k * dt, y, dt)
    assert y[2] == pytest.approx(scenario.optimal_value(x0), rel=1e-2)


def test_agent_drift_adds_parameterized_part():
    a2 = scenario.make_agent2()
    x, u = np.array([0.3, 0.4]), np.array([0.1])
    expected = np.array([x[1], 3 * u[0]]) + scenario.THETA_TRUE.T @ scenario.agent2_features(x, u)
    assert np.allclose(a2.drift(x, u), expected)
    assert a2.p == 3
