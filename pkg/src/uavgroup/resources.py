"""Joint bandwidth and power allocation by Lagrangian dual decomposition.

Layer 1 fixes the multipliers and solves the Lagrangian in closed form
(multi-level water-filling for the power spectral density, bang-bang
bandwidth). Layer 2 moves the multipliers along projected subgradients. The
converged spectral density is then frozen and the bandwidth re-optimized
exactly by an LP, which also restores primal feasibility.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import LN2, ChannelGains, rate
from .lp import LinearProgram, solve_lp
from .scenario import ScenarioConfig

log = logging.getLogger(__name__)

VARPI_FLOOR = 1e-12


class WaterLevelUnbounded(ArithmeticError):
    pass


class QoSInfeasible(RuntimeError):
    def __init__(self, message: str, binding=()):
        self.binding = list(binding)
        super().__init__(message)


class PoleError(ZeroDivisionError):
    pass


@dataclass
class DualMultipliers:
    mu: np.ndarray  # (K,)
    beta: np.ndarray  # (K, N)
    xi: np.ndarray  # (N,)
    varpi: np.ndarray  # (N,)

    def __post_init__(self):
        for name in ("mu", "beta", "xi", "varpi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if np.any(arr < 0):
                raise ValueError(f"multiplier {name} must be non-negative")
            setattr(self, name, arr)

    def copy(self) -> "DualMultipliers":
        return DualMultipliers(self.mu.copy(), self.beta.copy(), self.xi.copy(), self.varpi.copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.mu, self.beta.ravel(), self.xi, self.varpi])


@dataclass
class DualLoopSettings:
    step0: tuple[float, float, float, float] | None = None  # None: scale from first residuals
    Minner: int = 200
    Mouter: int = 100
    tol: float = 1e-4

    def __post_init__(self):
        if self.step0 is not None and (len(self.step0) != 4 or min(self.step0) <= 0):
            raise ValueError("step0 needs four positive values")
        if self.Minner < 1 or self.Mouter < 1 or self.tol <= 0:
            raise ValueError("iteration caps and tolerance must be positive")

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "DualLoopSettings":
        return cls(Minner=config.Minner, Mouter=config.Mouter, tol=config.dual_tol)


@dataclass
class AllocationState:
    b: np.ndarray
    p: np.ndarray
    p_tilde: np.ndarray
    eta: float
    converged: bool = True
    info: dict = field(default_factory=dict)


def waterfill_power(duals: DualMultipliers, gains: ChannelGains, N: int) -> np.ndarray:
    """Power spectral density per entry: [(mu + N beta)/(varpi N ln2) - 1/g]^+."""
    level_num = duals.mu[:, None] + N * duals.beta
    varpi = np.broadcast_to(duals.varpi[None, :], level_num.shape)
    if np.any((varpi == 0) & (level_num > 0)):
        raise WaterLevelUnbounded("water level unbounded: varpi_n = 0 with a positive weight")
    with np.errstate(divide="ignore", invalid="ignore"):
        level = np.where(level_num > 0, level_num / (varpi * N * LN2), 0.0)
        inv_g = np.where(gains.g > 0, 1.0 / gains.g, np.inf)
    return np.maximum(level - inv_g, 0.0)


def bandwidth_score(duals: DualMultipliers, p_tilde, alpha, gains: ChannelGains) -> np.ndarray:
    """Per-entry coefficient of b in the Lagrangian once p = p_tilde * b."""
    alpha = np.asarray(alpha, dtype=float)
    N = alpha.shape[1]
    weight = (duals.mu[:, None] + N * duals.beta) / N
    return (weight * alpha * np.log1p(gains.g * p_tilde) / LN2
            - duals.varpi[None, :] * alpha * p_tilde - duals.xi[None, :] * alpha)


def bandwidth_bang_bang(duals, p_tilde, alpha, gains, config: ScenarioConfig) -> np.ndarray:
    """Bmax where the score is strictly positive, 0 otherwise (ties go to 0)."""
    alpha = getattr(alpha, "alpha", alpha)
    f = bandwidth_score(duals, p_tilde, alpha, gains)
    return np.where(f > 0, config.Bmax, 0.0)


def gamma_constant(duals: DualMultipliers, alpha, config: ScenarioConfig) -> float:
    """Part of the Lagrangian that does not depend on b."""
    alpha = np.asarray(alpha, dtype=float)
    return float((duals.beta * alpha).sum() * config.gamma_th
                 - duals.xi.sum() * config.Bmax - duals.varpi.sum() * config.Pmax)


def dual_value(duals: DualMultipliers, alpha, gains, config: ScenarioConfig) -> float:
    """Lagrange dual function; an upper bound on the optimum when sum(mu) = 1."""
    alpha = getattr(alpha, "alpha", alpha)
    p_tilde = waterfill_power(_floored(duals), gains, alpha.shape[1])
    f = bandwidth_score(duals, p_tilde, alpha, gains)
    return float(config.Bmax * np.maximum(f, 0.0).sum() - gamma_constant(duals, alpha, config))


def residuals(state: AllocationState, alpha, gains: ChannelGains, config: ScenarioConfig):
    """Bracketed terms of the four multiplier updates."""
    alpha = np.asarray(alpha, dtype=float)
    R = rate(state.b, state.p, gains.g)
    r_mu = (alpha * R).mean(axis=1) - state.eta
    r_beta = R - alpha * config.gamma_th
    r_xi = config.Bmax - (alpha * state.b).sum(axis=0)
    r_varpi = config.Pmax - (alpha * state.p).sum(axis=0)
    return r_mu, r_beta, r_xi, r_varpi


def subgradient_step(duals: DualMultipliers, state: AllocationState, alpha, gains,
                     config: ScenarioConfig, m: int, step0=(1.0, 1.0, 1.0, 1.0)) -> DualMultipliers:
    """One projected step with step sizes step0_u / sqrt(m + 1)."""
    if m < 0:
        raise ValueError("iteration index must be non-negative")
    alpha = getattr(alpha, "alpha", alpha)
    scale = 1.0 / np.sqrt(m + 1.0)
    r_mu, r_beta, r_xi, r_varpi = residuals(state, alpha, gains, config)
    return DualMultipliers(
        mu=np.maximum(duals.mu - step0[0] * scale * r_mu, 0.0),
        beta=np.maximum(duals.beta - step0[1] * scale * r_beta, 0.0),
        xi=np.maximum(duals.xi - step0[2] * scale * r_xi, 0.0),
        varpi=np.maximum(duals.varpi - step0[3] * scale * r_varpi, 0.0),
    )


def _project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def _floored(duals: DualMultipliers) -> DualMultipliers:
    return DualMultipliers(duals.mu, duals.beta, duals.xi, np.maximum(duals.varpi, VARPI_FLOOR))


def initial_duals(alpha: np.ndarray, gains: ChannelGains, config: ScenarioConfig) -> DualMultipliers:
    """Multipliers at which an even split P/B of spectral density is water-filled."""
    K, N = alpha.shape
    mu = np.full(K, 1.0 / K)
    with np.errstate(divide="ignore"):
        inv_g = np.where(gains.g > 0, 1.0 / gains.g, 0.0).mean(axis=0)
    density = config.Pmax / config.Bmax
    varpi = (1.0 / K) / (N * LN2 * (density + inv_g))
    x = gains.g.mean(axis=0) * density
    xi = (1.0 / (K * N)) * (np.log1p(x) / LN2 - x / ((1 + x) * LN2))
    return DualMultipliers(mu, np.zeros((K, N)), np.maximum(xi, 0.0), varpi)


def layer_one(duals: DualMultipliers, alpha, gains, config: ScenarioConfig) -> AllocationState:
    """Closed-form maximizer of the Lagrangian, with eta* = 0."""
    N = alpha.shape[1]
    p_tilde = waterfill_power(_floored(duals), gains, N)
    b = bandwidth_bang_bang(duals, p_tilde, alpha, gains, config)
    return AllocationState(b=b, p=p_tilde * b, p_tilde=p_tilde, eta=0.0)


def _phi(x):
    return np.log1p(x) / LN2 - x / ((1.0 + x) * LN2)


_PHI_LOGX = np.linspace(-30.0, 40.0, 4001)
_PHI_TABLE = _phi(np.exp(_PHI_LOGX))


def _phi_inverse(t: np.ndarray) -> np.ndarray:
    """Solve log2(1+x) - x/((1+x) ln2) = t for x > 0; the left side increases in x."""
    x = np.exp(np.interp(t, _PHI_TABLE, _PHI_LOGX))
    for _ in range(3):
        # Newton on log x; phi'(x) = x / ((1+x)^2 ln2)
        slope = x * x / ((1.0 + x) ** 2 * LN2)
        x = x * np.exp(np.clip((t - _phi(x)) / np.maximum(slope, 1e-300), -2.0, 2.0))
    return x


def _capped_bandwidth(weight, price_b, p_tilde, g, Bmax: float, Pmax: float) -> np.ndarray:
    """Bandwidth maximizing weight*b*log2(1 + g*Pmax/b) - price_b*b on [Pmax/p_tilde, Bmax]."""
    t = price_b / weight
    out = np.full(t.shape, Bmax)
    pos = t > 0
    if np.any(pos):
        out[pos] = g[pos] * Pmax / _phi_inverse(t[pos])
    return np.clip(out, Pmax / p_tilde, Bmax)


def power_capped_response(weight, price_b, p_tilde, b, g, config: ScenarioConfig):
    """Per-entry Lagrangian maximizer when p <= Pmax is kept as a box constraint.

    Where the water-filled density at full bandwidth would need more than Pmax,
    the power sits at Pmax and the bandwidth solves the one-dimensional
    stationarity condition in [Pmax / p_tilde, Bmax]. Returns (b, density).
    """
    capped = (b > 0) & (weight > 0) & (p_tilde * b > config.Pmax)
    if not np.any(capped):
        return b, p_tilde
    b = b.copy()
    density = p_tilde.copy()
    bc = _capped_bandwidth(weight[capped], price_b[capped], p_tilde[capped], g[capped],
                           config.Bmax, config.Pmax)
    b[capped] = bc
    density[capped] = config.Pmax / bc
    return b, density


def response_density(duals: DualMultipliers, alpha, gains: ChannelGains, config: ScenarioConfig):
    """Spectral density each entry would use if it were given bandwidth."""
    N = alpha.shape[1]
    pt = waterfill_power(_floored(duals), gains, N)
    b = np.where(pt > 0, config.Bmax, 0.0)
    weight = alpha * (duals.mu[:, None] + N * duals.beta) / N
    _, density = power_capped_response(weight, alpha * duals.xi[None, :], pt, b, gains.g, config)
    return density


def refine_bandwidth(p_tilde_star, alpha, gains: ChannelGains, config: ScenarioConfig) -> AllocationState:
    """Freeze the spectral density and solve the bandwidth LP exactly."""
    alpha = np.asarray(getattr(alpha, "alpha", alpha), dtype=float)
    p_tilde_star = np.asarray(p_tilde_star, dtype=float)
    if not np.all(np.isfinite(p_tilde_star)):
        raise ValueError("spectral density must be finite")
    K, N = alpha.shape
    c = np.log1p(gains.g * p_tilde_star) / LN2
    gamma = config.gamma_th
    scheduled = alpha > 0
    dead = scheduled & (c <= 0)
    if gamma > 0 and np.any(dead):
        pairs = [(int(k) + 1, int(n) + 1) for k, n in zip(*np.nonzero(dead))]
        raise QoSInfeasible(f"{len(pairs)} scheduled entries have zero rate density", pairs)
    active = scheduled & (c > 0)
    idx = np.flatnonzero(active.ravel())
    k_of, n_of = idx // N, idx % N
    a_f = alpha.ravel()[idx]
    c_f = c.ravel()[idx]
    pt_f = p_tilde_star.ravel()[idx]
    nv = 1 + idx.size
    cols = 1 + np.arange(idx.size)
    user = np.zeros((K, nv))
    user[:, 0] = 1.0
    user[k_of, cols] = -a_f * c_f / N
    bw = np.zeros((N, nv))
    bw[n_of, cols] = a_f
    pw = np.zeros((N, nv))
    pw[n_of, cols] = a_f * pt_f
    A = np.vstack([user, bw, pw])
    rels = ["<="] * (K + 2 * N)
    rhs = np.concatenate([np.zeros(K), np.full(N, config.Bmax), np.full(N, config.Pmax)])
    lo = np.concatenate([[0.0], a_f * gamma / c_f])
    with np.errstate(divide="ignore"):
        hi_b = np.minimum(config.Bmax, np.where(pt_f > 0, config.Pmax / pt_f, np.inf))
    hi = np.concatenate([[np.inf], hi_b])
    short = lo[1:] > hi[1:] * (1 + 1e-12)
    if np.any(short):
        pairs = [(int(k_of[i]) + 1, int(n_of[i]) + 1) for i in np.flatnonzero(short)]
        raise QoSInfeasible("QoS floor needs more than the per-entry bandwidth/power cap", pairs)
    hi = np.maximum(hi, lo)
    obj = np.zeros(nv)
    obj[0] = 1.0
    sol = solve_lp(LinearProgram(obj, A, rels, rhs, lo, hi))
    if not sol.optimal:
        floor = (lo[1:] * a_f)
        over = [n + 1 for n in range(N) if floor[n_of == n].sum() > config.Bmax * (1 + 1e-9)]
        raise QoSInfeasible(f"bandwidth LP {sol.status}; slots over budget at the QoS floor: {over}",
                            [(int(k_of[i]) + 1, int(n_of[i]) + 1) for i in range(idx.size)
                             if n_of[i] + 1 in over])
    b = np.zeros((K, N))
    b.ravel()[idx] = sol.x[1:]
    p = p_tilde_star * b
    p_tilde = np.where(b > 0, p_tilde_star, 0.0)
    eta = float((alpha * b * c).mean(axis=1).min())
    return AllocationState(b=b, p=p, p_tilde=p_tilde, eta=eta)


def _auto_step0(duals: DualMultipliers, gains: ChannelGains, config: ScenarioConfig,
                K: int, N: int) -> tuple[float, ...]:
    """Half of each family's initial size divided by the natural size of its residual."""
    rate_scale = config.Bmax * np.log1p(config.Pmax * float(gains.g.mean()) / config.Bmax) / LN2
    dual = (1.0 / K, 1.0 / (K * N), max(float(duals.xi.mean()), 1e-300),
            max(float(duals.varpi.mean()), 1e-300))
    primal = (rate_scale, rate_scale, config.Bmax, config.Pmax)
    return tuple(0.5 * d / max(p, 1e-300) for d, p in zip(dual, primal))


def run_dual_loop(alpha, gains, config: ScenarioConfig, settings: DualLoopSettings,
                  duals: DualMultipliers | None = None, m0: int = 0, step0=None):
    """Projected subgradient iterations on the dual.

    Returns (final duals, running weighted average of the duals, info). A warm
    start passes the previous duals together with their iteration count ``m0``
    and step sizes so the diminishing schedule continues where it stopped.
    """
    alpha = np.asarray(alpha, dtype=float)
    K, N = alpha.shape
    duals = (duals or initial_duals(alpha, gains, config)).copy()
    step0 = step0 or settings.step0
    mu, beta, xi, varpi = duals.mu, duals.beta, duals.xi, duals.varpi
    g = gains.g
    with np.errstate(divide="ignore"):
        inv_g = np.where(g > 0, 1.0 / g, np.inf)
    Bmax, Pmax, gamma = config.Bmax, config.Pmax, config.gamma_th
    qos = alpha * gamma
    p_cap = Pmax / Bmax
    avg = [mu.copy(), beta.copy(), xi.copy(), varpi.copy()]
    weight = 0.0
    m = m0
    converged = False
    prev = None
    trace = []
    outer = 0
    for outer in range(1, settings.Mouter + 1):
        for _ in range(settings.Minner):
            # layer one: water-filling and bang-bang bandwidth at eta* = 0
            num = mu[:, None] + N * beta
            level = num / (np.maximum(varpi, VARPI_FLOOR)[None, :] * (N * LN2))
            pt = np.maximum(level - inv_g, 0.0)
            lg = np.log1p(g * pt) / LN2
            f = alpha * (num / N * lg - varpi[None, :] * pt - xi[None, :])
            on = f > 0
            b = np.where(on, Bmax, 0.0)
            # power cap kept as a box: those entries run at Pmax with a 1-D optimal bandwidth
            idx = np.flatnonzero(on & (pt > p_cap))
            if idx.size:
                bc = _capped_bandwidth((alpha * num).ravel()[idx] / N, (alpha * xi).ravel()[idx],
                                       pt.ravel()[idx], g.ravel()[idx], Bmax, Pmax)
                b.ravel()[idx] = bc
                pt.ravel()[idx] = Pmax / bc
                lg.ravel()[idx] = np.log1p(g.ravel()[idx] * Pmax / bc) / LN2
            R = b * lg
            ab = alpha * b
            r_mu = (alpha * R).mean(axis=1)
            r_beta = R - qos
            r_xi = Bmax - ab.sum(axis=0)
            r_varpi = Pmax - (ab * pt).sum(axis=0)
            if step0 is None:
                step0 = _auto_step0(duals, gains, config, K, N)
            scale = 1.0 / np.sqrt(m + 1.0)
            # eta is free in the Lagrangian, so the dual is finite only on sum(mu) = 1
            mu = _project_simplex(np.maximum(mu - step0[0] * scale * r_mu, 0.0), 1.0)
            beta = np.maximum(beta - step0[1] * scale * r_beta, 0.0)
            xi = np.maximum(xi - step0[2] * scale * r_xi, 0.0)
            varpi = np.maximum(varpi - step0[3] * scale * r_varpi, 0.0)
            m += 1
            w = scale
            weight += w
            for a, cur in zip(avg, (mu, beta, xi, varpi)):
                a += (w / weight) * (cur - a)
        trace.append((m, float(np.linalg.norm(r_mu)), float(np.linalg.norm(r_beta)),
                      float(np.linalg.norm(r_xi)), float(np.linalg.norm(r_varpi))))
        cur = np.concatenate([a.ravel() for a in avg])
        if prev is not None:
            change = np.linalg.norm(cur - prev) / max(np.linalg.norm(cur), 1e-300)
            if change < settings.tol:
                converged = True
                break
        prev = cur
    final = DualMultipliers(mu, beta, xi, varpi)
    averaged = DualMultipliers(*avg)
    return final, averaged, {"iterations": m - m0, "m": m, "outer": outer,
                             "converged": converged, "step0": step0, "trace": trace}


def optimize_resources(alpha, gains: ChannelGains, config: ScenarioConfig,
                       settings: DualLoopSettings | None = None,
                       incumbent: AllocationState | None = None,
                       warm: dict | None = None) -> AllocationState:
    """Dual decomposition, then the exact bandwidth LP on the frozen density.

    The LP is run on the density of the final and of the averaged multipliers,
    and on the incumbent's density when one is passed; the best is kept, so a
    feasible incumbent is never made worse. ``warm`` is the ``info["warm"]``
    of a previous call.
    """
    alpha = np.asarray(getattr(alpha, "alpha", alpha), dtype=float)
    settings = settings or DualLoopSettings.from_config(config)
    warm = warm or {}
    duals, avg, info = run_dual_loop(alpha, gains, config, settings, warm.get("duals"),
                                     warm.get("m", 0), warm.get("step0"))
    candidates = [("final", response_density(duals, alpha, gains, config)),
                  ("averaged", response_density(avg, alpha, gains, config))]
    if incumbent is not None:
        candidates.append(("incumbent", np.where(incumbent.b > 0, incumbent.p_tilde, 0.0)))
    best = None
    errors = []
    for name, pt in candidates:
        try:
            state = refine_bandwidth(pt, alpha, gains, config)
        except QoSInfeasible as exc:
            errors.append(exc)
            continue
        state.info["source"] = name
        if best is None or state.eta > best.eta:
            best = state
    if best is None:
        raise errors[-1]
    best.converged = info["converged"]
    best.info.update({k: info[k] for k in ("iterations", "outer", "converged")})
    best.info["duals"] = duals
    best.info["trace"] = info["trace"]
    best.info["warm"] = {"duals": duals, "m": info["m"], "step0": info["step0"]}
    if not info["converged"]:
        log.info("dual loop hit its caps after %d iterations", info["iterations"])
    return best


def psi_hessian(x: float, y: float, a: float) -> np.ndarray:
    """Hessian of x*log2(1 + a*y/x) in (x, y)."""
    if x <= 0:
        raise PoleError("Hessian of psi has a pole at x = 0")
    s = x + a * y
    off = a * a * y / (s * s * LN2)
    return np.array([
        [-a * a * y * y / (x * s * s * LN2), off],
        [off, -a * a * x / (s * s * LN2)],
    ])
