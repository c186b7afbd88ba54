"""The two-agent benchmark: nonlinear agents sharing a sinusoidal disturbance.

Agent 2's closed loop under ``u = -3 x_2`` is optimal for the cost
``int x_2^2 + u^2 dt`` with value ``x_1^2 (pi/2 + atan(5 x_1)) + x_2^2``.
The IRL basis below represents that value and reward exactly.
"""
from __future__ import annotations

import math

import numpy as np

from .irl import IrlBasis
from .sim import AgentModel, ExoSystem, RewardModel

HALF_PI = 0.5 * math.pi

THETA_TRUE = np.array([[0.0, -1.0], [0.0, -2.5], [0.0, 4.0]])
W_V_TRUE = np.array([HALF_PI, 1.0, 1.0])
W_Q_TRUE = np.array([0.0, 1.0])
R_TRUE = np.array([1.0])
W_TRUE = np.concatenate([W_V_TRUE, W_Q_TRUE])

A_EXO = np.array([[0.0, 1.0], [-1.0, 0.0]])
C_EXO = np.array([[0.0, 0.0], [1.0, 0.0]])
K_OBS = np.array([[1.0, 0.5], [0.0, 5.0]])


def agent1_drift(x, u):
    x1, x2 = x[0], x[1]
    return np.array([x2, x1 * x2 + 3.0 * x2 * x2 + 5.0 * u[0]])


def agent2_nominal(x, u):
    return np.array([x[1], 3.0 * u[0]])


def agent2_features(x, u):
    x1 = x[0]
    return np.array([x1 * (HALF_PI + math.atan(5.0 * x1)),
                     x1 * x1 / (1.0 + 25.0 * x1 * x1),
                     x[1]])


def optimal_control(x, t=0.0):
    return np.array([-3.0 * x[1]])


def stabilizing_control(gain):
    def policy(x, t=0.0):
        return np.array([-gain * (x[0] + x[1])])

    return policy


def sigma_V(x):
    x1, x2 = x[0], x[1]
    sq = x1 * x1
    return np.array([sq, sq * math.atan(5.0 * x1), x2 * x2])


def grad_sigma_V(x):
    x1, x2 = x[0], x[1]
    d2 = 2.0 * x1 * math.atan(5.0 * x1) + 5.0 * x1 * x1 / (1.0 + 25.0 * x1 * x1)
    return np.array([[2.0 * x1, 0.0], [d2, 0.0], [0.0, 2.0 * x2]])


def sigma_Q(x):
    return np.array([x[0] * x[0], x[1] * x[1]])


def make_agent1(gain: float = 2.0) -> AgentModel:
    return AgentModel(n=2, m=1, nominal_drift=agent1_drift, control_policy=stabilizing_control(gain),
                      control_gain=np.array([[0.0], [5.0]]))


def make_agent2(theta=THETA_TRUE, policy=optimal_control) -> AgentModel:
    return AgentModel(n=2, m=1, nominal_drift=agent2_nominal, control_policy=policy,
                      features=agent2_features, true_params=np.array(theta, dtype=float),
                      control_gain=np.array([[0.0], [3.0]]))


def make_exo(zeta0=(0.0, 1.0), A=A_EXO, C=C_EXO) -> ExoSystem:
    return ExoSystem(np.array(A, dtype=float), np.array(C, dtype=float), np.array(zeta0, dtype=float))


def make_reward() -> RewardModel:
    return RewardModel(sigma_Q=sigma_Q, W_Q=W_Q_TRUE, R_diag=R_TRUE, sigma_V=sigma_V,
                       grad_sigma_V=grad_sigma_V, W_V=W_V_TRUE)


def make_basis(r1: float = 1.0) -> IrlBasis:
    return IrlBasis(sigma_V=sigma_V, grad_sigma_V=grad_sigma_V, sigma_Q=sigma_Q, P=3, L=2, m=1, r1=r1)


def optimal_value(x) -> float:
    return float(W_V_TRUE @ sigma_V(x))
