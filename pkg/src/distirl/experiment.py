"""Closed-loop run of disturbance observer, parameter estimator and IRL together."""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from . import scenario
from .config import ScenarioConfig
from .errors import SimulationDiverged
from .gains import estimate_rate
from .irl import IrlModel, IrlState, irl_cross, irl_regressor, irl_step
from .observer import ObserverState, observer_derivative
from .param_estimator import ThetaEstimator, estimator_step
from .sim import check_bound, rk4_step
from .stacks import DualStack, PeRecord, pe_cross, pe_regressor
from .window import WindowBuffers

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "t", "x1_1", "x1_2", "x2_1", "x2_2", "u1", "u2", "d_2", "dhat_2", "dist_err",
    "th1", "th2", "th3", "theta_err", "Wv1", "Wv2", "Wv3", "Wq1", "Wq2", "W_err",
    "lam_S", "lam_Sigma", "pe_purges", "irl_purges",
]
# logged in memory only
EXTRA_COLUMNS = [
    "zeta_err", "pe_gate", "irl_gate", "gth_min", "gth_max", "g_min", "g_max",
    "theta_rate", "W_rate", "pe_size", "irl_size",
]


@dataclass
class RunLog:
    config: ScenarioConfig
    data: np.ndarray
    events: list = field(default_factory=list)  # (t, stack, epoch, lambda_min, error)
    warnings: list = field(default_factory=list)
    final_theta: np.ndarray | None = None
    final_W: np.ndarray | None = None

    @property
    def columns(self) -> list[str]:
        return CSV_COLUMNS + EXTRA_COLUMNS

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def purges(self, stack: str) -> list[tuple]:
        return [e for e in self.events if e[1] == stack]

    def value_at(self, name: str, t: float) -> float:
        i = int(round((t - self.data[0, 0]) / self.config.dt))
        return float(self.data[i, self.columns.index(name)])

    def summary(self) -> dict:
        last = self.data[-1]
        col = self.columns.index
        pe_open = np.flatnonzero(self["pe_gate"] > 0)
        irl_open = np.flatnonzero(self["irl_gate"] > 0)
        return {
            "t_final": float(last[col("t")]),
            "dist_err": float(last[col("dist_err")]),
            "theta_err": float(last[col("theta_err")]),
            "W_err": float(last[col("W_err")]),
            "theta_hat": None if self.final_theta is None else self.final_theta.tolist(),
            "W_hat": None if self.final_W is None else self.final_W.tolist(),
            "pe_gate_opened_at": float(self["t"][pe_open[0]]) if pe_open.size else None,
            "irl_gate_opened_at": float(self["t"][irl_open[0]]) if irl_open.size else None,
            "pe_epochs": [{"t": e[0], "epoch": e[2], "lambda_min": e[3], "theta_err": e[4]}
                          for e in self.purges("pe")],
            "irl_epochs": [{"t": e[0], "epoch": e[2], "lambda_min": e[3], "W_err": e[4]}
                           for e in self.purges("irl")],
            "warnings": list(self.warnings),
        }

    def write_csv(self, path) -> None:
        k = len(CSV_COLUMNS)
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in self.data[:, :k]:
                fh.write(",".join(f"{v:.9g}" for v in row) + "\n")

    def write_events(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "stack", "epoch", "lambda_min", "error"])
            for t, stack, epoch, lam, err in self.events:
                w.writerow([f"{t:.9g}", stack, epoch, f"{lam:.9g}", f"{err:.9g}"])

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.write_csv(out / self.config.csv_name)
        self.write_events(out / self.config.events_name)
        (out / self.config.summary_name).write_text(json.dumps(self.summary(), indent=2) + "\n")
        return out


def _norm(a) -> float:
    a = np.ravel(a)
    return math.sqrt(a @ a)


def _snapshot_mean(stack) -> np.ndarray | None:
    if len(stack) == 0:
        return None
    return np.mean([r.theta_hat_snapshot for r in stack], axis=0)


def irl_purge_improves(stacks: DualStack, theta_now: np.ndarray, improvement: float) -> bool:
    """True when the transient stack's parameter snapshots sit closer to the
    current estimate than the main stack's by more than ``improvement``."""
    main_mean = _snapshot_mean(stacks.main)
    trans_mean = _snapshot_mean(stacks.transient)
    if main_mean is None:
        return True
    if trans_mean is None:
        return False
    d_main = np.linalg.norm(theta_now - main_mean)
    d_trans = np.linalg.norm(theta_now - trans_mean)
    return d_trans < (1.0 - improvement) * d_main


def run(config: ScenarioConfig | None = None, out_dir=None, theta_true=None,
        progress: bool = False) -> RunLog:
    """Simulate the benchmark and all estimators in one fixed-step loop."""
    cfg = (config or ScenarioConfig()).validate()
    dt, n_steps = cfg.dt, cfg.n_steps
    theta_true = scenario.THETA_TRUE if theta_true is None else np.asarray(theta_true, dtype=float)
    W_true = scenario.W_TRUE

    agent1 = scenario.make_agent1(cfg.agent1_gain)
    agent2 = scenario.make_agent2(theta_true)
    exo = scenario.make_exo(cfg.zeta_0, cfg.A, cfg.C)
    obs = ObserverState(np.array(cfg.zeta_hat_0, dtype=float), cfg.K, cfg.A, cfg.C)
    basis = scenario.make_basis(float(scenario.R_TRUE[0]))
    irl_model = IrlModel.for_agent(basis, agent2)
    n, p = agent2.n, agent2.p

    window = WindowBuffers(n, p, cfg.T, dt, t0=0.0, quadrature=cfg.quadrature)
    pe = DualStack(cfg.M, pe_regressor, cfg.psi, cfg.dwell_time, t0=0.0, min_lambda=cfg.c_lower,
                   cross=pe_cross)
    irl = DualStack(cfg.N, irl_regressor, cfg.psi, cfg.dwell_time, t0=0.0, min_lambda=cfg.sigma_lower,
                    cross=irl_cross)
    est = ThetaEstimator.initial(p, n, cfg.alpha_theta, cfg.beta_theta, cfg.theta_hat_0,
                                 gamma_bounds=cfg.gamma_theta_bounds)
    west = IrlState.initial(basis.dim, cfg.alpha, cfg.beta, cfg.W_hat_0, gamma_bounds=cfg.gamma_bounds)

    A, C = exo.A, exo.C
    f1 = agent1.drift
    pol1, pol2 = agent1.control_policy, agent2.control_policy
    exact_xdot = cfg.xdot_mode == "exact"

    def plant(t, y):
        x1, x2, zeta = y[0:2], y[2:4], y[4:6]
        d = C @ zeta
        u1, u2 = pol1(x1, t), pol2(x2, t)
        x1dot = f1(x1, u1) + d
        out = [x1dot, agent2.drift(x2, u2) + d, A @ zeta]
        if exact_xdot:
            out.append(observer_derivative(obs, x1dot, x1, u1, f1, zeta_hat=y[6:8]))
        return np.concatenate(out)

    y = np.concatenate([cfg.x1_0, cfg.x2_0, cfg.zeta_0] + ([cfg.zeta_hat_0] if exact_xdot else []))
    y = y.astype(float)
    zeta_hat = np.array(cfg.zeta_hat_0, dtype=float)

    data = np.empty((n_steps + 1, len(CSV_COLUMNS) + len(EXTRA_COLUMNS)))
    events = []
    pe_cache = (None, None)
    irl_cache = (None, None)
    M0 = (np.zeros((p, p)), np.zeros((p, n)))
    Mirl0 = (np.zeros((basis.dim, basis.dim)), np.zeros(basis.dim))
    run_warnings = []
    if cfg.t_final < cfg.T:
        msg = f"t_final={cfg.t_final} is shorter than the window T={cfg.T}; estimators never update"
        warnings.warn(msg, stacklevel=2)
        run_warnings.append(msg)

    def record_row(k, t, y, zeta_hat, u1, u2, pe_gate, irl_gate, theta_rate, W_rate):
        x1, x2, zeta = y[0:2], y[2:4], y[4:6]
        d = C @ zeta
        dh = C @ zeta_hat
        th = est.theta_hat
        W = west.W_hat
        gth = lapack.dsyev(est.gamma, compute_v=0)[0]
        gw = lapack.dsyev(west.gamma, compute_v=0)[0]
        data[k] = (
            t, x1[0], x1[1], x2[0], x2[1], u1[0], u2[0], d[1], dh[1], _norm(d - dh),
            th[0, 1], th[1, 1], th[2, 1], _norm(theta_true - th),
            W[0], W[1], W[2], W[3], W[4], _norm(W_true - W),
            pe.main.lambda_min, irl.main.lambda_min, pe.purges, irl.purges,
            _norm(zeta - zeta_hat), pe_gate, irl_gate, gth[0], gth[-1], gw[0], gw[-1],
            theta_rate, W_rate, len(pe.main), len(irl.main),
        )

    def push_window(t, x2, u2, zeta_hat):
        window.push_sample(t, x2, agent2.nominal_drift(x2, u2), agent2.features(x2, u2), C @ zeta_hat)

    t = 0.0
    u1, u2 = pol1(y[0:2], t), pol2(y[2:4], t)
    push_window(t, y[2:4], u2, zeta_hat)
    record_row(0, t, y, zeta_hat, u1, u2, 0, 0, 0.0, 0.0)

    for k in range(1, n_steps + 1):
        t_prev = t
        t = k * dt
        try:
            y_prev = y
            y = rk4_step(plant, t_prev, y, dt)
            check_bound(y[:6], cfg.blowup, t)
        except SimulationDiverged as exc:
            raise SimulationDiverged(f"simulation diverged: {exc}", t) from exc
        if exact_xdot:
            zeta_hat = y[6:8]
        else:
            # backward-difference derivative, inputs held at the step midpoint
            x1_prev, x1_new = y_prev[0:2], y[0:2]
            xdot_fd = (x1_new - x1_prev) / dt
            f_mid = 0.5 * (f1(x1_prev, pol1(x1_prev, t_prev)) + f1(x1_new, pol1(x1_new, t)))
            zeta_hat = rk4_step(lambda _t, z: A @ z + obs.K @ (xdot_fd - f_mid - C @ z),
                                t_prev, zeta_hat, dt)
        x1, x2 = y[0:2], y[2:4]
        u1, u2 = pol1(x1, t), pol2(x2, t)

        push_window(t, x2, u2, zeta_hat)
        if t >= cfg.T - 1e-9 * dt:
            wp = window.window_point(t)
            if wp is not None:
                pe.offer(PeRecord(wp.X, wp.F, wp.S, wp.D_hat, t))
        if pe.try_purge(t):
            events.append((t, "pe", pe.purges, pe.main.lambda_min,
                           float(np.linalg.norm(theta_true - est.theta_hat))))

        if pe_cache[0] != pe.main.version:
            pe_cache = (pe.main.version, (pe.main.gram, pe.main.cross_sum) if len(pe.main) else M0)
        pe_gate = pe.main.lambda_min >= cfg.c_lower and len(pe.main) > 0
        theta_rate = _norm(estimate_rate(est.theta_hat, est.gamma, *pe_cache[1], est.alpha))
        if pe_gate:
            est = estimator_step(est, None, dt, summary=pe_cache[1], t=t)

        if pe_gate:
            irl.offer(irl_model.record(x2, u2, est.theta_hat, t))
        if irl.try_purge(t, allow=lambda st: irl_purge_improves(st, est.theta_hat, cfg.irl_improvement)):
            events.append((t, "irl", irl.purges, irl.main.lambda_min,
                           float(np.linalg.norm(W_true - west.W_hat))))
        if irl_cache[0] != irl.main.version:
            irl_cache = (irl.main.version, (irl.main.gram, irl.main.cross_sum) if len(irl.main) else Mirl0)
        irl_gate = irl.main.lambda_min >= cfg.sigma_lower and len(irl.main) > 0
        W_rate = _norm(estimate_rate(west.W_hat, west.gamma, *irl_cache[1], west.alpha))
        if irl_gate:
            west = irl_step(west, irl_cache[1], dt, t=t)

        record_row(k, t, y, zeta_hat, u1, u2, int(pe_gate), int(irl_gate), theta_rate, W_rate)
        if progress and k % 20000 == 0:
            log.info("t=%.1f theta_err=%.3g W_err=%.3g", t, data[k, 13], data[k, 19])

    gate_col = len(CSV_COLUMNS) + EXTRA_COLUMNS.index("pe_gate")
    if not np.any(data[:, gate_col]):
        msg = "estimator never ungated: parameter stack never reached c_lower"
        warnings.warn(msg, stacklevel=2)
        run_warnings.append(msg)
    if not np.any(data[:, gate_col + 1]):
        msg = "IRL estimator never ungated: IRL stack never reached sigma_lower"
        warnings.warn(msg, stacklevel=2)
        run_warnings.append(msg)

    result = RunLog(cfg, data, events, run_warnings, est.theta_hat.copy(), west.W_hat.copy())
    if out_dir is not None:
        result.write(out_dir)
    return result
