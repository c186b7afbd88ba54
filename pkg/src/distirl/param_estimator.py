"""Concurrent-learning least-squares estimation of the unknown drift parameters."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .gains import estimate_rate, gamma_rate, project_spectrum, rk4_gain_step
from .stacks import PeRecord


@dataclass
class ThetaEstimator:
    theta_hat: np.ndarray  # p x n
    gamma: np.ndarray  # p x p
    alpha: float
    beta: float
    gamma_bounds: tuple[float, float] = (1e-4, 1e4)

    def __post_init__(self):
        self.theta_hat = np.atleast_2d(np.asarray(self.theta_hat, dtype=float))
        self.gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")

    @classmethod
    def initial(cls, p: int, n: int, alpha: float, beta: float, theta0=None, gamma0=None,
                gamma_bounds=(1e-4, 1e4)):
        theta0 = np.zeros((p, n)) if theta0 is None else theta0
        gamma0 = np.eye(p) if gamma0 is None else gamma0
        return cls(theta0, gamma0, alpha, beta, tuple(gamma_bounds))


def pe_summary(stack: Sequence[PeRecord], p: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(sum S_i S_i^T, sum S_i (X_i - F_i - D_hat_i)^T) over the stack."""
    if len(stack) == 0:
        return np.zeros((p, p)), np.zeros((p, n))
    S = np.stack([r.S for r in stack])
    Y = np.stack([r.X - r.F - r.D_hat for r in stack])
    return S.T @ S, S.T @ Y


def theta_derivative(e: ThetaEstimator, stack: Sequence[PeRecord]) -> np.ndarray:
    """alpha Gamma sum_i S_i (X_i - F_i - theta_hat^T S_i - D_hat_i)^T; zero for an empty stack."""
    M, b = pe_summary(stack, *e.theta_hat.shape)
    return estimate_rate(e.theta_hat, e.gamma, M, b, e.alpha)


def gamma_theta_derivative(e: ThetaEstimator, stack: Sequence[PeRecord]) -> np.ndarray:
    M, _ = pe_summary(stack, *e.theta_hat.shape)
    return gamma_rate(e.gamma, M, e.alpha, e.beta)


def estimator_step(e: ThetaEstimator, stack: Sequence[PeRecord] | None, dt: float,
                   summary=None, t: float | None = None) -> ThetaEstimator:
    """RK4-advance (theta_hat, Gamma) jointly, then project Gamma's spectrum.

    ``summary`` is a precomputed ``pe_summary`` of ``stack``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    M, b = pe_summary(stack, *e.theta_hat.shape) if summary is None else summary
    theta, gamma = rk4_gain_step(e.theta_hat, e.gamma, M, b, e.alpha, e.beta, dt)
    gamma = project_spectrum(gamma, *e.gamma_bounds, t=t)
    return replace(e, theta_hat=theta, gamma=gamma)
