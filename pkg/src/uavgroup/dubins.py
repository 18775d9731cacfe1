"""RSR switch geometry on two clockwise circles and slotwise UAV sampling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mobility import UserTrack
from .scenario import ScenarioConfig

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    pass


class NoRSRTangentError(GeometryError):
    """No external tangent meets the RSR orientation convention."""


class InfeasiblePlanError(GeometryError):
    """No lap count gives a speed inside [Vmin, Vmax]."""


class OffCircleError(GeometryError):
    pass


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class TangentSolution:
    A: float
    Bline: float
    F: tuple[float, float]
    theta: float
    degenerate: bool = False
    # True when the switch point comes from the tangent-line formula, False
    # for the clockwise-phase fallback
    from_line_formula: bool = True


@dataclass(frozen=True)
class TrajectoryPlan:
    circle_I: Circle
    circle_F: Circle
    tangent: TangentSolution
    feasible_velocities: tuple[tuple[float, int], ...]
    q_I: tuple[float, float]
    q_F: tuple[float, float]
    T: float

    @property
    def r_I(self) -> float:
        return self.circle_I.radius

    @property
    def theta(self) -> float:
        return self.tangent.theta

    @property
    def velocities(self) -> np.ndarray:
        return np.array([v for v, _ in self.feasible_velocities])

    @property
    def spacing(self) -> float:
        return TWO_PI * self.r_I / self.T

    def laps_for(self, v: float) -> int:
        for vf, cir in self.feasible_velocities:
            if abs(vf - v) <= 1e-9 * max(abs(v), 1.0):
                return cir
        raise GeometryError(f"velocity {v} is not in the feasible set")

    def summary(self) -> dict:
        return {
            "r_I": self.circle_I.radius,
            "r_F": self.circle_F.radius,
            "center_I": list(self.circle_I.center),
            "center_F": list(self.circle_F.center),
            "theta": self.tangent.theta,
            "F": list(self.tangent.F),
            "q_I": list(self.q_I),
            "q_F": list(self.q_F),
            "T": self.T,
            "from_line_formula": self.tangent.from_line_formula,
            "feasible_velocities": [{"v": v, "laps": c} for v, c in self.feasible_velocities],
        }


@dataclass(frozen=True)
class TrajectorySamples:
    q: np.ndarray  # (N, 2)
    v: float


@dataclass
class ValidationReport:
    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def slots(self) -> list[int]:
        return [n for n, _ in self.violations]


def arc_length(q_a, q_b, r_I: float, center=(0.0, 0.0)) -> float:
    """Minor-arc length between two points of a circle, via the cosine rule."""
    a = np.asarray(q_a, dtype=float)
    b = np.asarray(q_b, dtype=float)
    c = np.asarray(center, dtype=float)
    for p in (a, b):
        off = abs(math.hypot(*(p - c)) - r_I)
        if off > 1e-6 * r_I:
            raise OffCircleError(f"point {tuple(p)} is {off:.3g} m off the circle")
    chord2 = float(np.dot(b - a, b - a))
    cos_angle = (2.0 * r_I**2 - chord2) / (2.0 * r_I**2)
    if cos_angle < -1.0:
        if cos_angle < -1.0 - 1e-9:
            raise GeometryError(f"chord {math.sqrt(chord2)} exceeds diameter {2 * r_I}")
        cos_angle = -1.0
    return r_I * math.acos(min(cos_angle, 1.0))


def _foot(cx: float, cy: float, A: float, Bl: float) -> tuple[float, float]:
    x = (cx - (Bl - cy) * A) / (A * A + 1.0)
    return x, A * x + Bl


def _solution_from_line(ci: Circle, cf: Circle, A: float, Bl: float) -> TangentSolution | None:
    """Tangent data for line y = A x + Bl if it meets the RSR convention."""
    (xi, yi), (xf, yf) = ci.center, cf.center
    if not (yi - A * xi - Bl < 0 and yf - A * xf - Bl < 0):
        return None
    F = _foot(xi, yi, A, Bl)
    G = _foot(xf, yf, A, Bl)
    # travelling from F to G must run left to right along the line
    if G[0] - F[0] < -1e-12 * max(ci.radius, cf.radius):
        return None
    ratio = min(max((xi - F[0]) / ci.radius, -1.0), 1.0)
    theta = math.acos(ratio)
    if theta >= math.pi:
        return None
    return TangentSolution(A=A, Bline=Bl, F=F, theta=theta)


def rsr_tangent(circle_I: Circle, circle_F: Circle) -> TangentSolution:
    """Switch point F and entry angle on circle_I for the RSR path to circle_F."""
    (xi, yi), (xf, yf) = circle_I.center, circle_F.center
    ri, rf = circle_I.radius, circle_F.radius
    dist = math.hypot(xf - xi, yf - yi)
    if dist <= 1e-6:
        if abs(ri - rf) <= 1e-9 * max(ri, rf):
            qi = (xi - ri, yi)
            return TangentSolution(A=0.0, Bline=yi, F=qi, theta=0.0, degenerate=True)
        raise NoRSRTangentError("concentric circles of different radii have no common tangent")
    if dist < abs(ri - rf) - 1e-12 * max(ri, rf):
        raise NoRSRTangentError("one circle lies strictly inside the other")

    if abs(ri - rf) < 1e-9 * max(ri, rf):
        dx, dy = xf - xi, yf - yi
        if dx <= 0:
            raise NoRSRTangentError("group displacement has no positive x component")
        A = dy / dx
        # line parallel to the centre line, shifted up by ri
        Bl = yi - A * xi + ri * math.sqrt(1.0 + A * A)
        sol = _solution_from_line(circle_I, circle_F, A, Bl)
        if sol is None:
            raise NoRSRTangentError("equal-radius tangent violates the orientation convention")
        return sol

    C = xi - (xi * rf - xf * ri) / (rf - ri)
    D = -yi - (yf * ri - yi * rf) / (rf - ri)
    denom = C * C - ri * ri
    disc = C * C * D * D - (ri * ri - C * C) * (ri * ri - D * D)
    disc = max(disc, 0.0)
    if abs(denom) < 1e-12 * ri * ri:
        raise NoRSRTangentError("vertical tangent line")
    roots = [(-C * D + math.sqrt(disc)) / denom, (-C * D - math.sqrt(disc)) / denom]
    if disc == 0.0:
        roots = roots[:1]
    for A in roots:
        Bl = ((-yf + A * xf) * ri - (-yi + A * xi) * rf) / (rf - ri)
        sol = _solution_from_line(circle_I, circle_F, A, Bl)
        if sol is not None:
            return sol
    raise NoRSRTangentError("no external tangent leaves both centres below it")


def clockwise_departure(circle_I: Circle, circle_F: Circle) -> TangentSolution:
    """General RSR departure for any group heading; theta in [0, 2*pi).

    theta is the clockwise phase of F measured from the westmost point of
    circle_I, so it agrees with rsr_tangent whenever that succeeds.
    """
    (xi, yi), (xf, yf) = circle_I.center, circle_F.center
    ri, rf = circle_I.radius, circle_F.radius
    d = np.array([xf - xi, yf - yi])
    L = float(np.hypot(*d))
    if L <= 1e-6:
        return TangentSolution(A=0.0, Bline=yi, F=(xi - ri, yi), theta=0.0,
                               degenerate=True, from_line_formula=False)
    delta_r = rf - ri
    if L < abs(delta_r):
        raise NoRSRTangentError("one circle lies strictly inside the other")
    base = math.atan2(d[1], d[0])
    beta = math.acos(max(min(-delta_r / L, 1.0), -1.0))
    for sgn in (1.0, -1.0):
        ang = base + sgn * beta
        n = np.array([math.cos(ang), math.sin(ang)])
        t = d + delta_r * n
        left = np.array([-t[1], t[0]])
        if float(np.dot(n, left)) > 0:
            break
    F = (xi + ri * n[0], yi + ri * n[1])
    theta = math.atan2(n[1], -n[0]) % TWO_PI
    A = t[1] / t[0] if abs(t[0]) > 1e-15 else math.inf
    Bl = F[1] - A * F[0] if math.isfinite(A) else math.nan
    return TangentSolution(A=A, Bline=Bl, F=F, theta=theta, from_line_formula=False)


def feasible_velocities(theta: float, r_I: float, T: float, Vmin: float, Vmax: float):
    """All (v, laps) with v = (theta + 2*pi*laps) * r_I / T inside [Vmin, Vmax]."""
    out = []
    lo = math.ceil((Vmin * T / r_I - theta) / TWO_PI - 1e-12)
    hi = math.floor((Vmax * T / r_I - theta) / TWO_PI + 1e-12)
    for cir in range(max(lo, 0), hi + 1):
        v = (theta + TWO_PI * cir) * r_I / T
        if Vmin - 1e-9 * Vmin <= v <= Vmax + 1e-9 * Vmax:
            out.append((v, cir))
    return tuple(out)


def build_plan(track: UserTrack, config: ScenarioConfig) -> TrajectoryPlan:
    """Circles from the group spread, RSR switch point and feasible speeds."""
    r_I = max(track.radii[0] / 2.0, config.safe_radius)
    r_F = max(track.radii[-1] / 2.0, config.safe_radius)
    c_I = tuple(float(x) for x in track.centroids[0])
    c_F = tuple(float(x) for x in track.centroids[-1])
    circle_I, circle_F = Circle(c_I, r_I), Circle(c_F, r_F)
    try:
        tangent = rsr_tangent(circle_I, circle_F)
    except NoRSRTangentError:
        tangent = clockwise_departure(circle_I, circle_F)
    vels = feasible_velocities(tangent.theta, r_I, config.T, config.Vmin, config.Vmax)
    if not vels:
        raise InfeasiblePlanError(
            f"no integer lap count fits {config.Vmin}..{config.Vmax} m/s "
            f"(r_I={r_I:.2f} m, theta={tangent.theta:.4f}, T={config.T} s)")
    q_I = (c_I[0] - r_I, c_I[1])
    return TrajectoryPlan(circle_I, circle_F, tangent, vels, q_I, tangent.F, config.T)


def circle_positions(center, radius: float, v: float, delta: float, N: int) -> np.ndarray:
    """Clockwise positions starting at the westmost point, one per slot."""
    phi = v * delta * np.arange(N) / radius
    cx, cy = center
    return np.stack([cx - radius * np.cos(phi), cy + radius * np.sin(phi)], axis=1)


def sample_trajectory(plan: TrajectoryPlan, v: float, config: ScenarioConfig) -> TrajectorySamples:
    plan.laps_for(v)
    q = circle_positions(plan.circle_I.center, plan.r_I, v, config.delta, config.N)
    q.setflags(write=False)
    return TrajectorySamples(q=q, v=float(v))


def validate_trajectory(samples: TrajectorySamples, plan: TrajectoryPlan,
                        config: ScenarioConfig) -> ValidationReport:
    report = ValidationReport()
    q = samples.q
    tol = 1e-9
    if np.hypot(*(q[0] - np.asarray(plan.q_I))) > tol * plan.r_I:
        report.violations.append((1, "q[1] differs from q_I"))
    for n in range(len(q) - 1):
        try:
            arc = arc_length(q[n], q[n + 1], plan.r_I, plan.circle_I.center)
        except GeometryError as exc:
            report.violations.append((n + 1, str(exc)))
            continue
        if arc < config.S_min * (1 - tol) or arc > config.S_max * (1 + tol):
            report.violations.append(
                (n + 1, f"arc {arc:.6g} m outside [{config.S_min}, {config.S_max}]"))
    gap = float(np.hypot(*(q[-1] - np.asarray(plan.q_F))))
    if gap > samples.v * config.delta * (1 + tol):
        report.violations.append((len(q), f"q[N] is {gap:.6g} m from q_F"))
    return report


def save_trajectory_csv(samples: TrajectorySamples, path: str | Path) -> None:
    lines = ["n,x,y"]
    for n, (x, y) in enumerate(samples.q, start=1):
        lines.append(f"{n},{float(x)!r},{float(y)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_plan_json(plan: TrajectoryPlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan.summary(), indent=2), encoding="utf-8")
