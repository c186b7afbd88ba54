"""Least-squares gain dynamics shared by the parameter and IRL estimators.

Both estimators have the form

    w'     = alpha * Gamma @ (b - M @ w)
    Gamma' = beta * Gamma - alpha * Gamma @ M @ Gamma

with ``M`` the information matrix of the main history stack.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

from .errors import ConditioningError

UNDERFLOW = 1e-12


def estimate_rate(w, gamma, M, b, alpha):
    return alpha * gamma @ (b - M @ w)


def gamma_rate(gamma, M, alpha, beta):
    return beta * gamma - alpha * gamma @ M @ gamma


def project_spectrum(gamma: np.ndarray, lower: float, upper: float, t: float | None = None) -> np.ndarray:
    """Symmetrize ``gamma`` and clip its eigenvalues into [lower, upper]."""
    gamma = 0.5 * (gamma + gamma.T)
    lam, V, info = lapack.dsyevd(gamma)
    if info != 0:
        lam, V = np.linalg.eigh(gamma)
    if lam[0] < UNDERFLOW:
        raise ConditioningError(f"gain eigenvalue {lam[0]:.3g} below {UNDERFLOW:g}", t)
    if lam[0] >= lower and lam[-1] <= upper:
        return gamma
    lam = np.clip(lam, lower, upper)
    return (V * lam) @ V.T


def rk4_gain_step(w, gamma, M, b, alpha, beta, dt):
    """One RK4 step of the joint (estimate, gain) flow with M and b held fixed."""

    def f(w_, g_):
        return estimate_rate(w_, g_, M, b, alpha), gamma_rate(g_, M, alpha, beta)

    k1w, k1g = f(w, gamma)
    k2w, k2g = f(w + 0.5 * dt * k1w, gamma + 0.5 * dt * k1g)
    k3w, k3g = f(w + 0.5 * dt * k2w, gamma + 0.5 * dt * k2g)
    k4w, k4g = f(w + dt * k3w, gamma + dt * k3g)
    w_new = w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    g_new = gamma + dt / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g)
    return w_new, g_new


def euler_gain_step(w, gamma, M, b, alpha, beta, dt):
    return (w + dt * estimate_rate(w, gamma, M, b, alpha),
            gamma + dt * gamma_rate(gamma, M, alpha, beta))
