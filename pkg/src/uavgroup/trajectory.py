"""Velocity block: polar-form throughput, SCA on the phase cosines, exact recovery.

With the circle fixed, the only decision left is the speed, and the lap
constraint makes the admissible speeds a short finite list. The SCA iterates
on the auxiliary cosines X_k[n] = cos(phi_n + phi_k) and is kept as a
cross-check; the returned speed always comes from scoring every admissible
speed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import LN2
from .dubins import TrajectoryPlan, TrajectorySamples, sample_trajectory
from .mobility import UserTrack
from .scenario import ScenarioConfig

QOS_RTOL = 1e-6


class SCAInfeasible(RuntimeError):
    pass


class EmptyVelocitySet(RuntimeError):
    pass


@dataclass(frozen=True)
class PolarChannelConstants:
    theta_w: np.ndarray  # alpha * b, Hz
    chi: np.ndarray  # rho0 p / (N0 b)
    lam: np.ndarray  # H^2 + r^2 + x^2 + y^2, m^2
    sig: np.ndarray  # 2 r sqrt(x^2 + y^2), m^2
    phi: np.ndarray  # atan2(y, x) relative to the circle centre
    b: np.ndarray
    qos: np.ndarray  # alpha * gamma_th, bit/s
    r_I: float
    delta: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.lam.shape


def polar_constants(r_I: float, track: UserTrack, alpha, b, p, config: ScenarioConfig,
                    center=(0.0, 0.0)) -> PolarChannelConstants:
    alpha = np.asarray(getattr(alpha, "alpha", alpha), dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    rel = track.positions - np.asarray(center, dtype=float)
    x, y = rel[..., 0], rel[..., 1]
    on = b > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        chi = np.where(on, config.rho0 * p / (config.N0 * np.where(on, b, 1.0)), 0.0)
    return PolarChannelConstants(
        theta_w=np.where(on, alpha * b, 0.0),
        chi=chi,
        lam=config.H**2 + r_I**2 + x * x + y * y,
        sig=2.0 * r_I * np.hypot(x, y),
        phi=np.arctan2(y, x),
        b=b,
        qos=alpha * config.gamma_th,
        r_I=float(r_I),
        delta=config.delta,
    )


def phase_cosines(v: float, consts: PolarChannelConstants) -> np.ndarray:
    """X_k[n] = cos(phi_n + phi_k) for the UAV flying clockwise at speed v."""
    N = consts.shape[1]
    phi_n = v * consts.delta * np.arange(N) / consts.r_I
    return np.cos(phi_n[None, :] + consts.phi)


def rate_density(X, consts: PolarChannelConstants) -> np.ndarray:
    """F(X) = log2(1 + chi / (lam + sig X))."""
    return np.log1p(consts.chi / (consts.lam + consts.sig * X)) / LN2


def slot_rates(v: float, consts: PolarChannelConstants) -> np.ndarray:
    return consts.b * rate_density(phase_cosines(v, consts), consts)


def throughput_of_velocity(v: float, consts: PolarChannelConstants, config: ScenarioConfig | None = None):
    if v <= 0:
        raise ValueError("velocity must be positive")
    F = rate_density(phase_cosines(v, consts), consts)
    return (consts.theta_w * F).mean(axis=1)


def sca_lower_bound(X, X_local, consts: PolarChannelConstants) -> np.ndarray:
    """log2(lam + sig X + chi) minus the tangent of log2(lam + sig X) at X_local."""
    X = np.asarray(X, dtype=float)
    X_local = np.asarray(X_local, dtype=float)
    inner = consts.lam + consts.sig * X
    at = consts.lam + consts.sig * X_local
    if np.any(inner <= 0) or np.any(at <= 0):
        raise ValueError("log argument must stay positive")
    F1 = np.log(inner + consts.chi) / LN2
    F2 = np.log(at) / LN2 + consts.sig * (X - X_local) / (at * LN2)
    return F1 - F2


@dataclass
class SCAStep:
    X: np.ndarray
    objective: float
    per_user: np.ndarray


def solve_sca_subproblem(X_local, consts: PolarChannelConstants, alpha=None, b=None,
                         config: ScenarioConfig | None = None) -> SCAStep:
    """Maximize the surrogate max-min throughput over X in [-1, 1].

    The surrogate is separable and concave per entry, and its peak sits at
    X_local - chi/sig. That peak maximizes every user's sum at once, so it
    also solves the max-min; the QoS superlevel set is an interval around the
    peak and is satisfied there whenever it is non-empty.
    """
    X_local = np.asarray(X_local, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        peak = np.where(consts.sig > 0, X_local - consts.chi / consts.sig, X_local)
    X = np.clip(peak, -1.0, 1.0)
    F = sca_lower_bound(X, X_local, consts)
    short = (consts.qos > 0) & (consts.b * F < consts.qos * (1 - QOS_RTOL))
    if np.any(short):
        k, n = np.argwhere(short)[0]
        raise SCAInfeasible(f"QoS interval empty at user {k + 1}, slot {n + 1}")
    per_user = (consts.theta_w * F).mean(axis=1)
    return SCAStep(X=X, objective=float(per_user.min()), per_user=per_user)


@dataclass
class VelocityChoice:
    v: float
    eta: float
    qos_ok: bool
    scores: dict = field(default_factory=dict)  # v -> (eta, qos_ok)

    def __iter__(self):
        return iter((self.v, self.eta))


def qos_satisfied(v: float, consts: PolarChannelConstants) -> bool:
    R = slot_rates(v, consts)
    return bool(np.all(R >= consts.qos * (1 - QOS_RTOL)))


def enumerate_velocity_oracle(plan: TrajectoryPlan, consts: PolarChannelConstants,
                              config: ScenarioConfig | None = None) -> VelocityChoice:
    """Score every admissible speed exactly; QoS-feasible speeds win, ties go to the slowest."""
    if not plan.feasible_velocities:
        raise EmptyVelocitySet("no admissible velocity")
    scores = {}
    best = None
    fallback = None
    for v in sorted(plan.velocities):
        eta = float(throughput_of_velocity(v, consts).min())
        ok = qos_satisfied(v, consts)
        scores[float(v)] = (eta, ok)
        if ok and (best is None or eta > best[1]):
            best = (float(v), eta)
        if fallback is None or eta > fallback[1]:
            fallback = (float(v), eta)
    if best is not None:
        return VelocityChoice(best[0], best[1], True, scores)
    return VelocityChoice(fallback[0], fallback[1], False, scores)


@dataclass
class TrajectoryResult:
    v: float
    samples: TrajectorySamples
    eta: float
    qos_ok: bool
    sca_trace: list[float]
    sca_nearest_v: float | None


def optimize_trajectory(plan: TrajectoryPlan, alpha, b, p, track: UserTrack, config: ScenarioConfig,
                        v_incumbent: float | None = None, max_sca: int = 30,
                        sca_tol: float = 1e-6) -> TrajectoryResult:
    consts = polar_constants(plan.r_I, track, alpha, b, p, config, plan.circle_I.center)
    vels = plan.velocities
    if vels.size == 0:
        raise EmptyVelocitySet("no admissible velocity")
    v0 = float(vels[0] if v_incumbent is None else v_incumbent)

    sca_trace: list[float] = []
    nearest = None
    X_local = phase_cosines(v0, consts)
    try:
        for _ in range(max_sca):
            step = solve_sca_subproblem(X_local, consts)
            sca_trace.append(step.objective)
            X_local = step.X
            if len(sca_trace) > 1 and abs(sca_trace[-1] - sca_trace[-2]) <= sca_tol * max(abs(sca_trace[-2]), 1e-300):
                break
        # admissible speed whose cosine pattern is closest to X*
        dist = [float(np.abs(phase_cosines(v, consts) - X_local).sum()) for v in vels]
        nearest = float(vels[int(np.argmin(dist))])
    except SCAInfeasible:
        pass

    choice = enumerate_velocity_oracle(plan, consts, config)
    return TrajectoryResult(v=choice.v, samples=sample_trajectory(plan, choice.v, config),
                            eta=choice.eta, qos_ok=choice.qos_ok, sca_trace=sca_trace,
                            sca_nearest_v=nearest)
