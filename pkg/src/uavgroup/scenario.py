"""Scenario constants, validation and the key=value config format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigParseError(ValueError):
    """Malformed config line."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ConfigValidationError(ValueError):
    """An invariant of ScenarioConfig is violated."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and algorithmic constants of one scenario (SI units)."""

    K: int = 6
    N: int = 120
    T: float = 120.0
    delta: float = 1.0
    H: float = 500.0
    rho0: float = 1e-5
    N0: float = 10 ** (-19.9)
    Bmax: float = 2e7
    Pmax: float = 1.0
    gamma_th: float = 8e6
    Vmin: float = 20.0
    Vmax: float = 100.0
    epsilon: float = 1e-3
    Lmax: int = 50
    Minner: int = 200
    Mouter: int = 100
    dual_tol: float = 1e-4
    Ve: float = 5.0
    seed: int = 0
    safe_radius: float = 200.0
    group_radius: float = 300.0
    perturbation_radius: float = 2.0

    def __post_init__(self):
        _validate(self)

    @property
    def S_min(self) -> float:
        return self.Vmin * self.delta

    @property
    def S_max(self) -> float:
        return self.Vmax * self.delta

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with ``changes``; N follows T/delta unless given explicitly."""
        if "N" not in changes and ("T" in changes or "delta" in changes):
            T = float(changes.get("T", self.T))
            delta = float(changes.get("delta", self.delta))
            changes["N"] = _derive_n(T, delta)
        return dataclasses.replace(self, **changes)


_INT_FIELDS = {f.name for f in fields(ScenarioConfig) if f.type in ("int", int)}
_FIELD_NAMES = [f.name for f in fields(ScenarioConfig)]


def _derive_n(T: float, delta: float) -> int:
    if delta <= 0:
        raise ConfigValidationError("delta", "must be positive")
    return max(int(round(T / delta)), 0)


def _validate(cfg: ScenarioConfig) -> None:
    for name in _FIELD_NAMES:
        value = getattr(cfg, name)
        if name in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigValidationError(name, f"expected integer, got {value!r}")
        elif not math.isfinite(float(value)) and name != "epsilon":
            raise ConfigValidationError(name, "must be finite")
    if cfg.K < 1:
        raise ConfigValidationError("K", "need at least one user")
    if cfg.N < 2:
        raise ConfigValidationError("N", "need at least two slots")
    if cfg.delta <= 0:
        raise ConfigValidationError("delta", "must be positive")
    if abs(cfg.N * cfg.delta - cfg.T) > 1e-9 * max(abs(cfg.T), 1e-300):
        raise ConfigValidationError("N", f"N*delta = {cfg.N * cfg.delta} != T = {cfg.T}")
    if not 0 < cfg.Vmin <= cfg.Vmax:
        raise ConfigValidationError("Vmin/Vmax", "need 0 < Vmin <= Vmax")
    for name in ("H", "Bmax", "Pmax", "rho0", "N0", "safe_radius"):
        if getattr(cfg, name) <= 0:
            raise ConfigValidationError(name, "must be positive")
    if cfg.gamma_th < 0:
        raise ConfigValidationError("gamma_th", "must be non-negative")
    if not cfg.epsilon > 0:
        raise ConfigValidationError("epsilon", "must be positive")
    for name in ("Lmax", "Minner", "Mouter"):
        if getattr(cfg, name) < 1:
            raise ConfigValidationError(name, "must be >= 1")
    if cfg.dual_tol <= 0:
        raise ConfigValidationError("dual_tol", "must be positive")
    for name in ("Ve", "group_radius", "perturbation_radius"):
        if getattr(cfg, name) < 0:
            raise ConfigValidationError(name, "must be non-negative")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigValidationError("seed", "must fit in 64 unsigned bits")


def default_config() -> ScenarioConfig:
    """Six users, H=500 m, 30 dBm, -50 dB, 8 Mbps, 20 MHz, -169 dBm/Hz, 20..100 m/s."""
    return ScenarioConfig()


paper_default_config = default_config


# unit suffix -> converter to SI linear
_UNIT_SUFFIXES = {
    "dBm": lambda x: 10 ** ((x - 30.0) / 10.0),
    "dB": lambda x: 10 ** (x / 10.0),
    "W": lambda x: x,
}


def parse_assignment(text: str, line_no: int | None = None) -> tuple[str, float | int]:
    """Parse one ``key=value`` pair into a (field, SI value) tuple."""
    if "=" not in text:
        raise ConfigParseError(f"expected key=value, got {text!r}", line_no)
    key, raw = (part.strip() for part in text.split("=", 1))
    if not key or not raw:
        raise ConfigParseError(f"empty key or value in {text!r}", line_no)
    field, convert = key, None
    if key not in _FIELD_NAMES and "_" in key:
        base, suffix = key.rsplit("_", 1)
        if base in _FIELD_NAMES and suffix in _UNIT_SUFFIXES:
            field, convert = base, _UNIT_SUFFIXES[suffix]
    if field not in _FIELD_NAMES:
        raise ConfigParseError(f"unknown key {key!r}", line_no)
    try:
        if field in _INT_FIELDS:
            if convert is not None:
                raise ConfigParseError(f"{field} takes no unit suffix", line_no)
            value: float | int = int(raw, 0)
        else:
            value = float(raw)
            if convert is not None:
                value = convert(value)
    except ValueError as exc:
        raise ConfigParseError(f"bad value for {key}: {raw!r}", line_no) from exc
    return field, value


def config_from_pairs(pairs: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Apply parsed pairs on top of ``base`` (defaults when omitted)."""
    base = base or default_config()
    values = {name: getattr(base, name) for name in _FIELD_NAMES}
    values.update(pairs)
    T_given, d_given, N_given = "T" in pairs, "delta" in pairs, "N" in pairs
    if not N_given and (T_given or d_given):
        values["N"] = _derive_n(values["T"], values["delta"])
    elif N_given and not T_given:
        values["T"] = values["N"] * values["delta"]
    return ScenarioConfig(**values)


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    pairs: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = parse_assignment(line, line_no)
        pairs[key] = value
    return config_from_pairs(pairs, base)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a UTF-8 key=value file; missing keys take the defaults."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_config_text(text)


def format_config(cfg: ScenarioConfig) -> str:
    lines = ["# uavgroup scenario"]
    for name in _FIELD_NAMES:
        value = getattr(cfg, name)
        lines.append(f"{name}={value if name in _INT_FIELDS else repr(float(value))}")
    return "\n".join(lines) + "\n"


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(cfg), encoding="utf-8")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)
