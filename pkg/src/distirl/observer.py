"""Exponential observer for the exogenous disturbance state."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def spectral_abscissa(M: np.ndarray) -> float:
    """Largest real part over the eigenvalues of ``M``."""
    return float(np.max(np.linalg.eigvals(M).real))


@dataclass
class ObserverState:
    zeta_hat: np.ndarray
    K: np.ndarray
    A: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.K = np.atleast_2d(np.asarray(self.K, dtype=float))
        self.zeta_hat = np.asarray(self.zeta_hat, dtype=float).ravel()
        N, n = self.zeta_hat.size, self.C.shape[0]
        if self.A.shape != (N, N) or self.C.shape != (n, N) or self.K.shape != (N, n):
            raise ConfigError(
                f"observer shapes inconsistent: A{self.A.shape} C{self.C.shape} "
                f"K{self.K.shape} zeta_hat({N},)")
        for name in ("A", "C", "K", "zeta_hat"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ConfigError(f"observer {name} has non-finite entries")
        E = self.error_matrix
        if spectral_abscissa(E) >= 0:
            raise ConfigError(
                f"A - K C is not Hurwitz (eigenvalues {np.linalg.eigvals(E)})")
        if np.max(np.linalg.eigvalsh(0.5 * (E + E.T))) >= 0:
            # Hurwitz is enough for exponential decay of the linear error system.
            warnings.warn("A - K C is Hurwitz but its symmetric part is not negative definite",
                          stacklevel=2)

    @property
    def error_matrix(self) -> np.ndarray:
        return self.A - self.K @ self.C

    @property
    def decay_rate(self) -> float:
        return spectral_abscissa(self.error_matrix)


def observer_derivative(obs: ObserverState, x_dot, x, u, agent1_drift, zeta_hat=None) -> np.ndarray:
    """A zeta_hat + K (x_dot - (f(x, u) + C zeta_hat)).

    ``zeta_hat`` overrides the stored estimate, which lets an integrator
    evaluate intermediate stages without mutating ``obs``.
    """
    z = obs.zeta_hat if zeta_hat is None else zeta_hat
    x_dot = np.asarray(x_dot, dtype=float)
    if x_dot.shape != (obs.C.shape[0],):
        raise ConfigError(f"x_dot must have length {obs.C.shape[0]}")
    innovation = x_dot - (agent1_drift(x, u) + obs.C @ z)
    return obs.A @ z + obs.K @ innovation


def d_hat(obs: ObserverState) -> np.ndarray:
    return obs.C @ obs.zeta_hat


def error_envelope(obs: ObserverState) -> tuple[float, float]:
    """(c, rate) such that ||e^{(A-KC)t} v|| <= c e^{rate t} ||v||.

    ``c`` is the condition number of the eigenvector basis.
    """
    E = obs.error_matrix
    w, V = np.linalg.eig(E)
    return float(np.linalg.cond(V)), float(np.max(w.real))
