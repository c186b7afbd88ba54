"""Distributed inverse reinforcement learning under matched disturbances.

An observer reconstructs the disturbance from a known exo-system, a
concurrent-learning estimator identifies the unknown drift parameters from
window integrals, and an inverse Bellman regression recovers the reward and
value weights of the observed agent.
"""
from .config import ScenarioConfig
from .errors import ConditioningError, ConfigError, SimulationDiverged
from .experiment import CSV_COLUMNS, RunLog, run

__all__ = ["ScenarioConfig", "run", "RunLog", "CSV_COLUMNS",
           "ConfigError", "SimulationDiverged", "ConditioningError"]
__version__ = "0.1.0"
