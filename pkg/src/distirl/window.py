"""Sliding-window integrals X, F, S and D_hat over [t - T, t]."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ConfigError


class WindowPoint(NamedTuple):
    X: np.ndarray
    F: np.ndarray
    S: np.ndarray
    D_hat: np.ndarray


def quadrature_weights(k: int, rule: str) -> np.ndarray:
    """Unit-spacing weights for ``k`` intervals (``k + 1`` samples)."""
    w = np.ones(k + 1)
    if rule == "trapezoid":
        w[0] = w[-1] = 0.5
    elif rule == "simpson":
        if k % 2:
            raise ConfigError(f"Simpson's rule needs an even number of intervals, got {k}")
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w /= 3.0
    else:
        raise ConfigError(f"unknown quadrature rule {rule!r}")
    return w


class WindowBuffers:
    """Ring buffer of samples spaced ``dt`` apart covering the last ``T`` seconds.

    Each sample holds x, f°(x, u), sigma(x, u) and d_hat. Storage is written
    twice (at ``i`` and ``i + cap``) so the ordered window is always one
    contiguous slice.
    """

    def __init__(self, n: int, p: int, T: float, dt: float, t0: float = 0.0,
                 quadrature: str = "trapezoid"):
        if not (T > 0 and dt > 0):
            raise ConfigError("T and dt must be positive")
        k = T / dt
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise ConfigError(f"dt={dt} does not divide T={T}")
        self.n, self.p, self.T, self.dt, self.t0 = n, p, T, dt, t0
        self.k = int(round(k))
        self.quadrature = quadrature
        self._weights = quadrature_weights(self.k, quadrature) * dt
        # memory: (k + 2) samples of width 3n + p, doubled for contiguous reads
        self.capacity = math.ceil(k - 1e-9) + 2
        self._width = 3 * n + p
        self._data = np.zeros((2 * self.capacity, self._width))
        self._times = np.zeros(2 * self.capacity)
        self._head = -1  # slot of the newest sample
        self._count = 0

    def __len__(self):
        return self._count

    @property
    def last_time(self) -> float | None:
        return None if self._count == 0 else float(self._times[self._head])

    def push_sample(self, t: float, x, f_nominal, sigma, d_hat) -> "WindowBuffers":
        row = np.concatenate([np.ravel(x), np.ravel(f_nominal), np.ravel(sigma), np.ravel(d_hat)])
        if row.size != self._width:
            raise ConfigError(f"sample has {row.size} entries, expected {self._width}")
        if not np.all(np.isfinite(row)) or not math.isfinite(t):
            raise ValueError(f"non-finite sample rejected at t={t}")
        last = self.last_time
        if last is not None:
            if t <= last:
                raise ValueError(f"sample time {t} does not exceed last buffered time {last}")
            if abs((t - last) - self.dt) > 1e-6 * self.dt:
                raise ValueError(f"sample spacing {t - last} differs from dt={self.dt}")
        self._head = (self._head + 1) % self.capacity
        for slot in (self._head, self._head + self.capacity):
            self._data[slot] = row
            self._times[slot] = t
        self._count = min(self._count + 1, self.capacity)
        return self

    def _ordered(self):
        end = self._head + self.capacity + 1
        start = end - self._count
        return self._times[start:end], self._data[start:end]

    def samples(self):
        """Copies of (times, x, f, sigma, d_hat), oldest first."""
        times, data = self._ordered()
        n, p = self.n, self.p
        return (times.copy(), data[:, :n].copy(), data[:, n:2 * n].copy(),
                data[:, 2 * n:2 * n + p].copy(), data[:, 2 * n + p:].copy())

    def zeros(self) -> WindowPoint:
        n, p = self.n, self.p
        return WindowPoint(np.zeros(n), np.zeros(n), np.zeros(p), np.zeros(n))

    def window_point(self, t: float | None = None) -> WindowPoint | None:
        """Window integrals ending at ``t`` (default: newest sample).

        All-zero before ``t0 + T``; ``None`` when the buffer does not cover
        the window (caller skips recording).
        """
        if t is None:
            t = self.last_time
            if t is None:
                return None
        if t < self.t0 + self.T - 1e-9 * self.dt:
            return self.zeros()
        times, data = self._ordered()
        if len(times) == 0:
            return None
        end = int(round((t - times[0]) / self.dt))
        start = end - self.k
        if start < 0 or end >= len(times):
            return None
        tol = 1e-6 * self.dt
        if abs(times[end] - t) > tol or abs(times[start] - (t - self.T)) > tol:
            return None
        block = data[start:end + 1]
        n, p = self.n, self.p
        integral = self._weights @ block[:, n:]
        X = block[-1, :n] - block[0, :n]
        return WindowPoint(X, integral[:n], integral[n:n + p], integral[n + p:])
