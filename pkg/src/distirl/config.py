"""Scenario configuration: defaults, validation and flat YAML I/O."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import scenario
from .errors import ConfigError


def _mat(a):
    return [list(map(float, row)) for row in np.asarray(a)]


@dataclass
class ScenarioConfig:
    dt: float = 0.0005
    t_final: float = 100.0
    T: float = 1.2
    N: int = 100
    M: int = 150
    alpha: float | None = None  # defaults to 1/N
    alpha_theta: float | None = None  # defaults to 1/N
    beta: float = 0.5
    beta_theta: float = 0.5
    psi: float = 0.01
    dwell_time: float = 5.0
    c_lower: float = 1e-3
    sigma_lower: float = 1e-3
    gamma_theta_bounds: list = field(default_factory=lambda: [1e-4, 1e4])
    gamma_bounds: list = field(default_factory=lambda: [1e-4, 1e4])
    irl_improvement: float = 0.1
    x1_0: list = field(default_factory=lambda: [1.0, -1.0])
    x2_0: list = field(default_factory=lambda: [1.0, -1.0])
    zeta_0: list = field(default_factory=lambda: [0.0, 1.0])
    zeta_hat_0: list = field(default_factory=lambda: [0.0, 0.0])
    theta_hat_0: list | None = None  # p x n, defaults to zeros
    W_hat_0: list | None = None  # defaults to zeros
    A: list = field(default_factory=lambda: _mat(scenario.A_EXO))
    C: list = field(default_factory=lambda: _mat(scenario.C_EXO))
    K: list = field(default_factory=lambda: _mat(scenario.K_OBS))
    agent1_gain: float = 2.0
    quadrature: str = "simpson"
    xdot_mode: str = "exact"
    blowup: float = 1e6
    seed: int | None = None
    csv_name: str = "run.csv"
    events_name: str = "events.csv"
    summary_name: str = "summary.json"

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = 1.0 / self.N
        if self.alpha_theta is None:
            self.alpha_theta = 1.0 / self.N

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def validate(self) -> "ScenarioConfig":
        positive = ["dt", "t_final", "T", "N", "M", "alpha", "alpha_theta", "beta", "beta_theta",
                    "psi", "dwell_time", "blowup", "agent1_gain"]
        for name in positive:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        for name in ("c_lower", "sigma_lower", "irl_improvement"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        k = self.T / self.dt
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise ConfigError(f"dt={self.dt} does not divide T={self.T}")
        for name in ("gamma_theta_bounds", "gamma_bounds"):
            lo, hi = getattr(self, name)
            if not 0 < lo < hi:
                raise ConfigError(f"{name} must satisfy 0 < lower < upper")
        if self.quadrature not in ("trapezoid", "simpson"):
            raise ConfigError(f"quadrature must be 'trapezoid' or 'simpson', got {self.quadrature!r}")
        if self.xdot_mode not in ("exact", "finite_difference"):
            raise ConfigError(f"xdot_mode must be 'exact' or 'finite_difference'")
        for name in ("x1_0", "x2_0", "zeta_0", "zeta_hat_0"):
            if np.shape(getattr(self, name)) != (2,):
                raise ConfigError(f"{name} must have length 2")
        for name in ("A", "C", "K"):
            if np.shape(getattr(self, name)) != (2, 2):
                raise ConfigError(f"{name} must be 2 x 2")
        if self.theta_hat_0 is not None and np.shape(self.theta_hat_0) != (3, 2):
            raise ConfigError("theta_hat_0 must be 3 x 2")
        if self.W_hat_0 is not None and np.shape(self.W_hat_0) != (5,):
            raise ConfigError("W_hat_0 must have length 5")
        arrays = [getattr(self, f.name) for f in fields(self) if isinstance(getattr(self, f.name), list)]
        if not all(np.all(np.isfinite(np.asarray(a, dtype=float))) for a in arrays):
            raise ConfigError("configuration arrays must be finite")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def from_dict(cls, data: dict | None) -> "ScenarioConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a flat mapping")
        return cls.from_dict(data)

    def replace(self, **changes) -> "ScenarioConfig":
        data = self.to_dict()
        data.update(changes)
        if "N" in changes and "alpha" not in changes:
            data["alpha"] = None
        if "N" in changes and "alpha_theta" not in changes:
            data["alpha_theta"] = None
        return ScenarioConfig.from_dict(data)
