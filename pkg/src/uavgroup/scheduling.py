"""Relaxed user scheduling for fixed bandwidth, power and trajectory."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelGains, rate
from .lp import LinearProgram, solve_lp
from .scenario import ScenarioConfig


class SchedulingInfeasible(RuntimeError):
    def __init__(self, message: str, binding=None):
        self.binding = binding
        super().__init__(message)


@dataclass(frozen=True)
class SchedulingMatrix:
    alpha: np.ndarray  # (K, N) in [0, 1]

    def rounded(self, threshold: float = 0.5) -> np.ndarray:
        """Binary view for display only; the optimizer keeps relaxed values."""
        return (self.alpha >= threshold).astype(float)


def qos_cap(R: np.ndarray, gamma_th: float) -> np.ndarray:
    """Largest alpha allowed by R >= alpha * gamma_th, capped at 1."""
    if gamma_th <= 0:
        return np.ones_like(R)
    return np.clip(R / gamma_th, 0.0, 1.0)


def scheduling_lp(R: np.ndarray, b: np.ndarray, p: np.ndarray, config: ScenarioConfig,
                  allowed: np.ndarray | None = None):
    """LP over [eta, alpha_active]; returns (lp, active mask).

    ``allowed`` (K x N bool) pins alpha to 0 wherever it is False.
    """
    K, N = R.shape
    cap = qos_cap(R, config.gamma_th)
    active = (R > 0) & (cap > 0)
    if allowed is not None:
        active &= np.asarray(allowed, dtype=bool)
    idx = np.flatnonzero(active.ravel())
    nv = 1 + idx.size
    k_of = idx // N
    n_of = idx % N
    Rf = R.ravel()[idx]
    rows = []
    rels = []
    rhs = []
    # average throughput of every user must reach eta
    user_rows = np.zeros((K, nv))
    user_rows[:, 0] = 1.0
    user_rows[k_of, 1 + np.arange(idx.size)] = -Rf / N
    rows.append(user_rows)
    rels += ["<="] * K
    rhs += [0.0] * K
    bw = np.zeros((N, nv))
    bw[n_of, 1 + np.arange(idx.size)] = b.ravel()[idx]
    pw = np.zeros((N, nv))
    pw[n_of, 1 + np.arange(idx.size)] = p.ravel()[idx]
    rows += [bw, pw]
    rels += ["<="] * (2 * N)
    rhs += [config.Bmax] * N + [config.Pmax] * N
    c = np.zeros(nv)
    c[0] = 1.0
    lo = np.zeros(nv)
    hi = np.concatenate([[np.inf], cap.ravel()[idx]])
    return LinearProgram(c, np.vstack(rows), rels, rhs, lo, hi), active


def optimize_scheduling(b, p, gains: ChannelGains, config: ScenarioConfig, allowed=None):
    """Solve the relaxed scheduling LP; returns (SchedulingMatrix, eta)."""
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    R = rate(b, p, gains.g)
    lp, active = scheduling_lp(R, b, p, config, allowed)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise SchedulingInfeasible(f"scheduling LP {sol.status}: {sol.message}")
    alpha = np.zeros_like(R)
    alpha[active] = np.clip(sol.x[1:], 0.0, 1.0)
    eta = float((alpha * R).mean(axis=1).min())
    alpha.setflags(write=False)
    return SchedulingMatrix(alpha), eta
