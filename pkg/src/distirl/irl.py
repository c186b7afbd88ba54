"""Inverse Bellman error regressors and the recursive reward-weight estimator.

Unknowns are stacked as ``W = [W_V; W_Q; r_2..r_m]``; the first control
weight ``r1`` is fixed to remove the scale ambiguity. Each observation
(x, u, theta_hat) contributes one inverse Bellman row and ``m`` optimality
rows, arranged so that ``rows @ W + rhs = 0`` holds at the true weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError
from .gains import estimate_rate, gamma_rate, project_spectrum, rk4_gain_step
from .sim import AgentModel
from .stacks import IrlRecord


@dataclass
class IrlBasis:
    sigma_V: Callable[[np.ndarray], np.ndarray]
    grad_sigma_V: Callable[[np.ndarray], np.ndarray]  # P x n
    sigma_Q: Callable[[np.ndarray], np.ndarray]
    P: int
    L: int
    m: int
    r1: float = 1.0

    def __post_init__(self):
        if self.r1 <= 0:
            raise ConfigError("r1 must be positive")
        if min(self.P, self.L, self.m) < 1:
            raise ConfigError("basis dimensions must be positive")

    @property
    def dim(self) -> int:
        return self.P + self.L + self.m - 1

    def split(self, W: np.ndarray):
        """(W_V, W_Q, r_2..r_m) views of a stacked weight vector."""
        P, L = self.P, self.L
        return W[:P], W[P:P + L], W[P + L:]


def inverse_bellman_row(x, u, theta_hat, basis: IrlBasis, nominal, features) -> tuple[np.ndarray, float]:
    """Row ``[grad sigma_V(x) Y_hat; sigma_Q(x); u_2^2..u_m^2]`` and rhs ``r1 u_1^2``.

    ``Y_hat = f°(x, u) + theta_hat^T sigma(x, u)`` is the estimated
    undisturbed drift.
    """
    y_hat = nominal(x, u) + theta_hat.T @ features(x, u)
    row = np.concatenate([basis.grad_sigma_V(x) @ y_hat, basis.sigma_Q(x), np.square(u[1:])])
    if not np.all(np.isfinite(row)):
        raise ValueError(f"non-finite inverse Bellman row at x={x}, u={u}")
    return row, basis.r1 * float(u[0]) ** 2


def control_rows(x, u, basis: IrlBasis, g_prime: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimality rows from ``-2 R u = g'^T grad sigma_V^T W_V``.

    Row 0 carries the known weight on its right-hand side (``2 r1 u_1``);
    rows i >= 1 couple to r_{i+1} through ``2 u_i``.
    """
    m, P, L = basis.m, basis.P, basis.L
    sigma_g = g_prime.T @ basis.grad_sigma_V(x).T  # m x P
    rows = np.zeros((m, basis.dim))
    rows[:, :P] = sigma_g
    for i in range(1, m):
        rows[i, P + L + i - 1] = 2.0 * u[i]
    rhs = np.zeros(m)
    rhs[0] = 2.0 * basis.r1 * u[0]
    return rows, rhs


@dataclass
class IrlModel:
    """Everything needed to turn an observation of Agent 2 into regressor rows."""

    basis: IrlBasis
    nominal: Callable[[np.ndarray, np.ndarray], np.ndarray]
    features: Callable[[np.ndarray, np.ndarray], np.ndarray]
    g_prime: np.ndarray

    @classmethod
    def for_agent(cls, basis: IrlBasis, agent: AgentModel) -> "IrlModel":
        if agent.control_gain is None:
            raise ConfigError("IRL needs a control-affine agent with constant input gain")
        if agent.features is None:
            raise ConfigError("IRL needs the agent's feature map")
        if agent.m != basis.m:
            raise ConfigError("basis control dimension does not match the agent")
        return cls(basis, agent.nominal_drift, agent.features, agent.control_gain)

    def block(self, x, u, theta_hat) -> tuple[np.ndarray, np.ndarray]:
        row, r0 = inverse_bellman_row(x, u, theta_hat, self.basis, self.nominal, self.features)
        rows, rhs = control_rows(x, u, self.basis, self.g_prime)
        return np.vstack([row, rows]), np.concatenate([[r0], rhs])

    def record(self, x, u, theta_hat, t: float) -> IrlRecord:
        B, rhs = self.block(x, u, theta_hat)
        return IrlRecord(np.array(x, dtype=float), np.array(u, dtype=float),
                         np.array(theta_hat, dtype=float), t, block=B, rhs=rhs)


def irl_regressor(record: IrlRecord) -> np.ndarray:
    return record.block


def irl_cross(record: IrlRecord) -> np.ndarray:
    """-B_i^T rhs_i, the data term of the weight update."""
    return -record.block.T @ record.rhs


def assemble_system(stack: Sequence[IrlRecord], basis: IrlBasis, nominal, g_prime,
                    features=None) -> tuple[np.ndarray, np.ndarray]:
    """Stack (1 + m) rows per record into (Sigma_hat, Sigma_u1).

    Every record is evaluated with its own stored theta_hat snapshot.
    """
    if features is None:
        raise ConfigError("assemble_system needs the agent feature map")
    model = IrlModel(basis, nominal, features, np.asarray(g_prime, dtype=float))
    blocks = [model.block(r.x, r.u, r.theta_hat_snapshot) for r in stack]
    if not blocks:
        return np.zeros((0, basis.dim)), np.zeros(0)
    return np.vstack([b for b, _ in blocks]), np.concatenate([r for _, r in blocks])


def irl_summary(stack: Sequence[IrlRecord], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """(Sigma_hat^T Sigma_hat, -Sigma_hat^T Sigma_u1) from cached record blocks."""
    M = np.zeros((dim, dim))
    b = np.zeros(dim)
    for r in stack:
        M += r.block.T @ r.block
        b -= r.block.T @ r.rhs
    return M, b


@dataclass
class IrlState:
    W_hat: np.ndarray
    gamma: np.ndarray
    alpha: float
    beta: float
    gamma_bounds: tuple[float, float] = (1e-4, 1e4)

    def __post_init__(self):
        self.W_hat = np.asarray(self.W_hat, dtype=float).ravel()
        self.gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")

    @classmethod
    def initial(cls, dim: int, alpha: float, beta: float, W0=None, gamma0=None,
                gamma_bounds=(1e-4, 1e4)):
        W0 = np.zeros(dim) if W0 is None else W0
        gamma0 = np.eye(dim) if gamma0 is None else gamma0
        return cls(W0, gamma0, alpha, beta, tuple(gamma_bounds))


def w_derivative(s: IrlState, Sigma_hat: np.ndarray, Sigma_u1: np.ndarray) -> np.ndarray:
    """alpha Gamma Sigma_hat^T (-Sigma_hat W_hat - Sigma_u1)."""
    Sigma_hat = np.atleast_2d(Sigma_hat)
    return s.alpha * s.gamma @ Sigma_hat.T @ (-Sigma_hat @ s.W_hat - np.ravel(Sigma_u1))


def gamma_derivative(s: IrlState, Sigma_hat: np.ndarray) -> np.ndarray:
    Sigma_hat = np.atleast_2d(Sigma_hat)
    return gamma_rate(s.gamma, Sigma_hat.T @ Sigma_hat, s.alpha, s.beta)


def irl_step(s: IrlState, summary: tuple[np.ndarray, np.ndarray], dt: float,
             t: float | None = None) -> IrlState:
    """RK4-advance (W_hat, Gamma) with a fixed (Sigma^T Sigma, -Sigma^T Sigma_u1)."""
    M, b = summary
    W, gamma = rk4_gain_step(s.W_hat, s.gamma, M, b, s.alpha, s.beta, dt)
    return replace(s, W_hat=W, gamma=project_spectrum(gamma, *s.gamma_bounds, t=t))


def summary_rate(s: IrlState, summary) -> np.ndarray:
    M, b = summary
    return estimate_rate(s.W_hat, s.gamma, M, b, s.alpha)
