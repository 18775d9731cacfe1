"""Block-coordinate outer loop, the fixed-trajectory baselines and the randomized schemes."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import average_throughput, gains_from_positions, rate
from .dubins import (GeometryError, TrajectoryPlan, build_plan, circle_positions,
                     sample_trajectory)
from .mobility import UserTrack, generate_tracks
from .resources import AllocationState, DualLoopSettings, QoSInfeasible, optimize_resources
from .scenario import ScenarioConfig
from .scheduling import SchedulingInfeasible, optimize_scheduling, qos_cap
from .trajectory import EmptyVelocitySet, optimize_trajectory

_BLOCK_ERRORS = (SchedulingInfeasible, QoSInfeasible, GeometryError, EmptyVelocitySet)


@dataclass
class IterationRecord:
    l: int
    eta_sched: float
    eta_res: float
    eta_traj: float
    v: float
    wallclock: float


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def eta(self) -> np.ndarray:
        return self.column("eta_traj")

    def blockwise_drops(self, rtol: float = 1e-6) -> list[str]:
        """Places where a block or an outer step lowered the objective."""
        out = []
        prev = None
        for r in self.records:
            slack = rtol * max(abs(r.eta_traj), abs(r.eta_sched), 1.0)
            if prev is not None and r.eta_sched < prev - slack:
                out.append(f"l={r.l}: scheduling below previous iterate")
            if r.eta_res < r.eta_sched - slack:
                out.append(f"l={r.l}: resources below scheduling")
            if r.eta_traj < r.eta_res - slack:
                out.append(f"l={r.l}: trajectory below resources")
            prev = r.eta_traj
        return out

    def is_monotone(self, rtol: float = 1e-6) -> bool:
        return not self.blockwise_drops(rtol)


@dataclass
class RunResult:
    eta_final: float
    per_user_throughput: np.ndarray
    alpha: np.ndarray
    b: np.ndarray
    p: np.ndarray
    v_final: float | None
    trace: IterationTrace
    converged: bool
    iterations: int
    q: np.ndarray | None = None
    kind: str = "optimized"
    status: str = "ok"
    failed_block: str | None = None
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a, dtype=float).tolist()
        return {
            "kind": self.kind,
            "status": self.status,
            "failed_block": self.failed_block,
            "message": self.message,
            "eta_final": self.eta_final,
            "per_user_throughput": arr(self.per_user_throughput),
            "alpha": arr(self.alpha),
            "b": arr(self.b),
            "p": arr(self.p),
            "v_final": self.v_final,
            "q": arr(self.q),
            "converged": self.converged,
            "iterations": self.iterations,
            "trace": [vars(r) for r in self.trace.records],
            "extra": self.extra,
            "units": {"eta_final": "bit/s", "per_user_throughput": "bit/s", "alpha": "1",
                      "b": "Hz", "p": "W", "v_final": "m/s", "q": "m", "wallclock": "s"},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        def arr(a):
            return None if a is None else np.array(a, dtype=float)
        trace = IterationTrace([IterationRecord(**r) for r in data["trace"]])
        return cls(eta_final=data["eta_final"], per_user_throughput=arr(data["per_user_throughput"]),
                   alpha=arr(data["alpha"]), b=arr(data["b"]), p=arr(data["p"]),
                   v_final=data["v_final"], trace=trace, converged=data["converged"],
                   iterations=data["iterations"], q=arr(data.get("q")), kind=data["kind"],
                   status=data["status"], failed_block=data.get("failed_block"),
                   message=data.get("message", ""), extra=data.get("extra", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunResult":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _infeasible(kind: str, block: str, exc: Exception, config: ScenarioConfig,
                trace: IterationTrace | None = None) -> RunResult:
    K, N = config.K, config.N
    z = np.zeros((K, N))
    return RunResult(eta_final=0.0, per_user_throughput=np.zeros(K), alpha=z, b=z, p=z,
                     v_final=None, trace=trace or IterationTrace(), converged=False,
                     iterations=len(trace or ()), kind=kind, status="infeasible",
                     failed_block=block, message=str(exc))


def initial_allocation(config: ScenarioConfig) -> AllocationState:
    K, N = config.K, config.N
    b = np.full((K, N), config.Bmax / K)
    p = np.full((K, N), config.Pmax / K)
    return AllocationState(b=b, p=p, p_tilde=p / b, eta=0.0)


def _stop(eta: float, prev: float, config: ScenarioConfig) -> bool:
    return abs(eta - prev) <= config.epsilon


def algorithm1(config: ScenarioConfig, track: UserTrack | None = None,
               settings: DualLoopSettings | None = None) -> RunResult:
    """Alternate scheduling, bandwidth/power and speed until eta settles."""
    track = track if track is not None else generate_tracks(config)
    settings = settings or DualLoopSettings.from_config(config)
    trace = IterationTrace()
    try:
        plan = build_plan(track, config)
    except GeometryError as exc:
        return _infeasible("optimized", "trajectory", exc, config)
    v = float(plan.velocities[0])
    q = sample_trajectory(plan, v, config).q
    gains = gains_from_positions(q, track.positions, config)
    alloc = initial_allocation(config)
    alpha = np.ones((config.K, config.N))
    eta_prev = float(average_throughput(alpha, alloc.b, alloc.p, gains).min())
    warm = None
    converged = False
    for l in range(1, config.Lmax + 1):
        t0 = time.perf_counter()
        block = "scheduling"
        try:
            sched, eta_s = optimize_scheduling(alloc.b, alloc.p, gains, config)
            alpha = sched.alpha
            block = "resources"
            alloc = optimize_resources(alpha, gains, config, settings, incumbent=alloc, warm=warm)
            warm = alloc.info["warm"]
            block = "trajectory"
            traj = optimize_trajectory(plan, alpha, alloc.b, alloc.p, track, config, v_incumbent=v)
        except _BLOCK_ERRORS as exc:
            return _infeasible("optimized", block, exc, config, trace)
        v = traj.v
        q = traj.samples.q
        gains = gains_from_positions(q, track.positions, config)
        eta = float(average_throughput(alpha, alloc.b, alloc.p, gains).min())
        trace.records.append(IterationRecord(l, eta_s, alloc.eta, eta, v, time.perf_counter() - t0))
        if _stop(eta, eta_prev, config):
            converged = True
            break
        eta_prev = eta
    per_user = average_throughput(alpha, alloc.b, alloc.p, gains)
    return RunResult(eta_final=float(per_user.min()), per_user_throughput=per_user,
                     alpha=np.array(alpha), b=alloc.b, p=alloc.p, v_final=v, trace=trace,
                     converged=converged, iterations=len(trace), q=np.array(q),
                     extra={"plan": plan.summary()})


def optimize_fixed_trajectory(config: ScenarioConfig, q: np.ndarray, track: UserTrack,
                              allowed=None, kind: str = "fixed",
                              settings: DualLoopSettings | None = None) -> RunResult:
    """Scheduling and resource blocks only, on a given UAV path."""
    settings = settings or DualLoopSettings.from_config(config)
    gains = gains_from_positions(q, track.positions, config)
    alloc = initial_allocation(config)
    alpha = np.ones((config.K, config.N))
    if allowed is not None:
        alpha = alpha * np.asarray(allowed, dtype=bool)
    eta_prev = float(average_throughput(alpha, alloc.b, alloc.p, gains).min())
    trace = IterationTrace()
    warm = None
    converged = False
    for l in range(1, config.Lmax + 1):
        t0 = time.perf_counter()
        block = "scheduling"
        try:
            sched, eta_s = optimize_scheduling(alloc.b, alloc.p, gains, config, allowed)
            alpha = sched.alpha
            block = "resources"
            alloc = optimize_resources(alpha, gains, config, settings, incumbent=alloc, warm=warm)
            warm = alloc.info["warm"]
        except _BLOCK_ERRORS as exc:
            return _infeasible(kind, block, exc, config, trace)
        eta = alloc.eta
        trace.records.append(IterationRecord(l, eta_s, eta, eta, math.nan, time.perf_counter() - t0))
        if _stop(eta, eta_prev, config):
            converged = True
            break
        eta_prev = eta
    per_user = average_throughput(alpha, alloc.b, alloc.p, gains)
    return RunResult(eta_final=float(per_user.min()), per_user_throughput=per_user,
                     alpha=np.array(alpha), b=alloc.b, p=alloc.p, v_final=None, trace=trace,
                     converged=converged, iterations=len(trace), q=np.array(q), kind=kind)


def circular_path(config: ScenarioConfig, track: UserTrack, radius: float = 600.0) -> np.ndarray:
    center = track.centroids.mean(axis=0)
    return circle_positions(center, radius, config.Vmin, config.delta, config.N)


def uturn_slots(config: ScenarioConfig) -> int:
    """Slots spent on a minimum-radius half-circle at top speed."""
    return math.ceil(math.pi * config.safe_radius / (config.Vmax * config.delta) - 1e-12)


def straight_path(config: ScenarioConfig, track: UserTrack) -> tuple[np.ndarray, np.ndarray]:
    """Back-and-forth flight between the first and last centroids.

    Returns (positions, turning) where ``turning[n]`` marks slots spent in a
    U-turn, during which nobody is served.
    """
    a = track.centroids[0]
    z = track.centroids[-1]
    seg = z - a
    length = float(np.hypot(*seg))
    step = config.Vmax * config.delta
    leg = max(1, math.ceil(length / step - 1e-12))
    turn = uturn_slots(config)
    q = np.empty((config.N, 2))
    turning = np.zeros(config.N, dtype=bool)
    n = 0
    forward = True
    while n < config.N:
        start, end = (a, z) if forward else (z, a)
        for i in range(leg):
            if n >= config.N:
                break
            frac = min(i * step / length, 1.0) if length > 0 else 0.0
            q[n] = start + frac * (end - start)
            n += 1
        for _ in range(turn):
            if n >= config.N:
                break
            q[n] = end
            turning[n] = True
            n += 1
        forward = not forward
    return q, turning


def run_baseline_trajectory(config: ScenarioConfig, kind: str = "optimized",
                            track: UserTrack | None = None,
                            settings: DualLoopSettings | None = None) -> RunResult:
    track = track if track is not None else generate_tracks(config)
    if kind == "optimized":
        return algorithm1(config, track, settings)
    if kind == "circular600":
        return optimize_fixed_trajectory(config, circular_path(config, track), track,
                                         kind=kind, settings=settings)
    if kind == "straight":
        q, turning = straight_path(config, track)
        allowed = np.broadcast_to(~turning[None, :], (config.K, config.N))
        res = optimize_fixed_trajectory(config, q, track, allowed, kind=kind, settings=settings)
        res.extra["uturn_slots"] = int(turning.sum())
        return res
    raise ValueError(f"unknown trajectory kind {kind!r}")


def random_split(config: ScenarioConfig, stream: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded per-slot simplex splits of both budgets across all users."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(3, stream)))
    K, N = config.K, config.N
    wb = rng.dirichlet(np.ones(K), size=N).T
    wp = rng.dirichlet(np.ones(K), size=N).T
    return config.Bmax * wb, config.Pmax * wp


def _random_resources_run(config: ScenarioConfig, track: UserTrack, random_alpha: bool,
                          kind: str) -> RunResult:
    try:
        plan: TrajectoryPlan = build_plan(track, config)
    except GeometryError as exc:
        return _infeasible(kind, "trajectory", exc, config)
    b, p = random_split(config, 0)
    v = float(plan.velocities[0])
    q = sample_trajectory(plan, v, config).q
    gains = gains_from_positions(q, track.positions, config)
    trace = IterationTrace()
    if random_alpha:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(3, 1)))
        R = rate(b, p, gains.g)
        alpha = np.minimum(rng.random((config.K, config.N)), qos_cap(R, config.gamma_th))
        traj = optimize_trajectory(plan, alpha, b, p, track, config, v_incumbent=v)
        v, q = traj.v, traj.samples.q
        gains = gains_from_positions(q, track.positions, config)
        eta = float(average_throughput(alpha, b, p, gains).min())
        trace.records.append(IterationRecord(1, math.nan, math.nan, eta, v, 0.0))
        converged = True
    else:
        alpha = np.ones((config.K, config.N))
        eta_prev = float(average_throughput(alpha, b, p, gains).min())
        converged = False
        for l in range(1, config.Lmax + 1):
            t0 = time.perf_counter()
            try:
                sched, eta_s = optimize_scheduling(b, p, gains, config)
            except SchedulingInfeasible as exc:
                return _infeasible(kind, "scheduling", exc, config, trace)
            alpha = sched.alpha
            traj = optimize_trajectory(plan, alpha, b, p, track, config, v_incumbent=v)
            v, q = traj.v, traj.samples.q
            gains = gains_from_positions(q, track.positions, config)
            eta = float(average_throughput(alpha, b, p, gains).min())
            trace.records.append(IterationRecord(l, eta_s, eta_s, eta, v, time.perf_counter() - t0))
            if _stop(eta, eta_prev, config):
                converged = True
                break
            eta_prev = eta
    per_user = average_throughput(alpha, b, p, gains)
    return RunResult(eta_final=float(per_user.min()), per_user_throughput=per_user,
                     alpha=np.array(alpha), b=b, p=p, v_final=v, trace=trace, converged=converged,
                     iterations=len(trace), q=np.array(q), kind=kind)


def run_scheme(config: ScenarioConfig, scheme: str, track: UserTrack | None = None,
               settings: DualLoopSettings | None = None) -> RunResult:
    """I: full optimization. II: random bandwidth/power. III: random scheduling too."""
    track = track if track is not None else generate_tracks(config)
    scheme = scheme.upper()
    if scheme == "I":
        res = algorithm1(config, track, settings)
        res.kind = "scheme-I"
        return res
    if scheme == "II":
        return _random_resources_run(config, track, False, "scheme-II")
    if scheme == "III":
        return _random_resources_run(config, track, True, "scheme-III")
    raise ValueError(f"unknown scheme {scheme!r}")

