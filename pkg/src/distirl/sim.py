"""Agent models, the exogenous disturbance system and the fixed-step integrator."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, SimulationDiverged

Vector = np.ndarray


@dataclass
class AgentModel:
    """Control-affine-or-not agent ``xdot = f(x, u) + theta^T sigma(x, u) + d``.

    ``nominal_drift`` is the known part f°. For Agent 1 (the observer) the whole
    model is known, so ``true_params`` may be ``None`` and ``features`` unused.
    ``control_gain`` is the constant input Jacobian df/du (n x m) when the agent
    is control affine with constant gain, otherwise ``None``.
    """

    n: int
    m: int
    nominal_drift: Callable[[Vector, Vector], Vector]
    control_policy: Callable[[Vector, float], Vector]
    features: Callable[[Vector, Vector], Vector] | None = None
    true_params: np.ndarray | None = None
    control_gain: np.ndarray | None = None

    @property
    def p(self) -> int:
        return 0 if self.true_params is None else self.true_params.shape[0]

    def __post_init__(self):
        if self.true_params is not None:
            self.true_params = np.asarray(self.true_params, dtype=float)
            if self.true_params.ndim != 2 or self.true_params.shape[1] != self.n:
                raise ConfigError(f"true_params must be p x {self.n}, got {self.true_params.shape}")
            if self.features is None:
                raise ConfigError("an agent with parameters needs a feature map")
        if self.control_gain is not None:
            self.control_gain = np.asarray(self.control_gain, dtype=float)
            if self.control_gain.shape != (self.n, self.m):
                raise ConfigError(f"control_gain must be {self.n} x {self.m}")

    def drift(self, x: Vector, u: Vector) -> Vector:
        """Undisturbed dynamics f(x, u) with the true parameters."""
        out = np.asarray(self.nominal_drift(x, u), dtype=float)
        if self.true_params is not None:
            out = out + self.true_params.T @ self.features(x, u)
        return out


@dataclass
class ExoSystem:
    """Autonomous linear system zeta' = A zeta generating d = C zeta."""

    A: np.ndarray
    C: np.ndarray
    zeta: Vector

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.zeta = np.asarray(self.zeta, dtype=float).ravel()
        N = self.zeta.size
        if self.A.shape != (N, N):
            raise ConfigError(f"A must be {N} x {N}, got {self.A.shape}")
        if self.C.shape[1] != N:
            raise ConfigError(f"C must have {N} columns, got {self.C.shape}")

    @property
    def N(self) -> int:
        return self.zeta.size

    def disturbance(self, zeta: Vector | None = None) -> Vector:
        return self.C @ (self.zeta if zeta is None else zeta)


@dataclass
class SimState:
    t: float
    x1: Vector
    x2: Vector
    zeta: Vector
    dt: float
    step: int = 0
    t0: float = 0.0


@dataclass
class RewardModel:
    """Ground-truth reward Q(x) + u^T R u and optimal value W_V^T sigma_V(x)."""

    sigma_Q: Callable[[Vector], Vector]
    W_Q: Vector
    R_diag: Vector
    sigma_V: Callable[[Vector], Vector]
    grad_sigma_V: Callable[[Vector], np.ndarray]
    W_V: Vector

    def __post_init__(self):
        self.W_Q = np.asarray(self.W_Q, dtype=float)
        self.W_V = np.asarray(self.W_V, dtype=float)
        self.R_diag = np.asarray(self.R_diag, dtype=float)
        if np.any(self.R_diag <= 0):
            raise ConfigError("control weights must be strictly positive")

    def reward(self, x: Vector, u: Vector) -> float:
        return float(self.W_Q @ self.sigma_Q(x) + self.R_diag @ (u * u))

    def value(self, x: Vector) -> float:
        return float(self.W_V @ self.sigma_V(x))

    @property
    def weights(self) -> Vector:
        """Stacked unknowns [W_V; W_Q; r_2..r_m] with r_1 taken as known."""
        return np.concatenate([self.W_V, self.W_Q, self.R_diag[1:]])


def rk4_step(derivative, t: float, y: Vector, dt: float) -> Vector:
    """Classical fourth-order Runge-Kutta advance of ``y`` by ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1 = derivative(t, y)
    k2 = derivative(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = derivative(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = derivative(t + dt, y + dt * k3)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(out).all():
        raise SimulationDiverged("non-finite derivative", t)
    return out


def coupled_derivative(agent1: AgentModel, agent2: AgentModel, exo: ExoSystem):
    """Right-hand side of the stacked state [x1; x2; zeta].

    Both agents see the same d = C zeta. Controls are evaluated from each
    agent's policy at the stage state.
    """
    n1, n2 = agent1.n, agent2.n

    def f(t, y):
        x1, x2, zeta = y[:n1], y[n1:n1 + n2], y[n1 + n2:]
        d = exo.C @ zeta
        u1 = agent1.control_policy(x1, t)
        u2 = agent2.control_policy(x2, t)
        return np.concatenate([agent1.drift(x1, u1) + d, agent2.drift(x2, u2) + d, exo.A @ zeta])

    return f


def check_bound(y: Vector, bound: float, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise SimulationDiverged("non-finite state", t)
    if np.max(np.abs(y)) > bound:
        raise SimulationDiverged(f"state norm exceeded blow-up bound {bound:g}", t)


def coupled_step(s: SimState, agent1: AgentModel, agent2: AgentModel, exo: ExoSystem,
                 dt: float | None = None, blowup: float = 1e6) -> SimState:
    """Advance both agents and the exo-system together by one RK4 step."""
    dt = s.dt if dt is None else dt
    if s.x1.size != agent1.n or s.x2.size != agent2.n or s.zeta.size != exo.N:
        raise ConfigError("state dimensions do not match the models")
    if exo.C.shape[0] != agent1.n or agent1.n != agent2.n:
        raise ConfigError("both agents must share the disturbance dimension of C")
    y = np.concatenate([s.x1, s.x2, s.zeta])
    y = rk4_step(coupled_derivative(agent1, agent2, exo), s.t, y, dt)
    step = s.step + 1
    t = s.t0 + step * dt
    check_bound(y, blowup, t)
    n1, n2 = agent1.n, agent2.n
    return replace(s, t=t, x1=y[:n1], x2=y[n1:n1 + n2], zeta=y[n1 + n2:], step=step)


def central_difference_jacobian(func, x: Vector, h: float = 1e-6) -> np.ndarray:
    """Jacobian of ``func`` at ``x`` by central differences, shape (len(func(x)), len(x))."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(func(x + e)) - np.asarray(func(x - e))) / (2 * h))
    return np.stack(cols, axis=1)
