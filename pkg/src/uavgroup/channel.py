"""Line-of-sight air-to-ground channel, rates and average throughput."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ScenarioConfig

LN2 = np.log(2.0)


@dataclass(frozen=True)
class ChannelGains:
    d: np.ndarray  # (K, N) metres
    h: np.ndarray  # (K, N) linear power gain
    g: np.ndarray  # (K, N) h / N0, Hz/W


def gains_from_positions(q: np.ndarray, positions: np.ndarray, config: ScenarioConfig) -> ChannelGains:
    q = np.asarray(q, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if q.shape[0] != positions.shape[1]:
        raise ValueError(f"slot mismatch: UAV has {q.shape[0]}, users have {positions.shape[1]}")
    diff = q[None, :, :] - positions
    d2 = config.H**2 + np.einsum("knj,knj->kn", diff, diff)
    d = np.sqrt(d2)
    h = config.rho0 / d2
    return ChannelGains(d=d, h=h, g=h / config.N0)


def compute_gains(samples, track, config: ScenarioConfig) -> ChannelGains:
    return gains_from_positions(samples.q, track.positions, config)


def rate(b, p, g):
    """b * log2(1 + p g / b), extended by 0 at b = 0. Broadcasts."""
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    pos = b > 0
    safe_b = np.where(pos, b, 1.0)
    out = np.where(pos, safe_b * np.log1p(p * g / safe_b) / LN2, 0.0)
    return out if out.ndim else float(out)


def rate_matrix(b, p, gains: ChannelGains) -> np.ndarray:
    return rate(b, p, gains.g)


def average_throughput(alpha, b, p, gains: ChannelGains) -> np.ndarray:
    """Per-user time-averaged throughput (1/N) sum_n alpha R."""
    alpha = np.asarray(alpha, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    if not alpha.shape == b.shape == p.shape == gains.g.shape:
        raise ValueError(
            f"shape mismatch: alpha {alpha.shape}, b {b.shape}, p {p.shape}, g {gains.g.shape}")
    return (alpha * rate(b, p, gains.g)).mean(axis=1)


def min_throughput(alpha, b, p, gains: ChannelGains) -> float:
    return float(average_throughput(alpha, b, p, gains).min())
