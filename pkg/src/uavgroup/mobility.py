"""Reference-point group mobility for the ground users.

Positions are indexed 0-based here: ``positions[k, n]`` is user ``k`` in slot
``n + 1``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import ScenarioConfig


@dataclass(frozen=True)
class UserTrack:
    positions: np.ndarray  # (K, N, 2)
    centroids: np.ndarray  # (N, 2)
    radii: np.ndarray  # (N,)

    @property
    def K(self) -> int:
        return self.positions.shape[0]

    @property
    def N(self) -> int:
        return self.positions.shape[1]

    @classmethod
    def from_positions(cls, positions) -> "UserTrack":
        pos = np.array(positions, dtype=float)
        if pos.ndim != 3 or pos.shape[2] != 2:
            raise ValueError(f"positions must be (K, N, 2), got {pos.shape}")
        pos.setflags(write=False)
        centroids = pos.mean(axis=0)
        radii = np.linalg.norm(pos - centroids[None], axis=2).max(axis=0)
        centroids.setflags(write=False)
        radii.setflags(write=False)
        return cls(pos, centroids, radii)


def _disk(rng: np.random.Generator, radius: float, size) -> np.ndarray:
    """Uniform samples in a disk, shape ``size + (2,)``."""
    rad = radius * np.sqrt(rng.random(size))
    ang = 2.0 * np.pi * rng.random(size)
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)


def group_heading(config: ScenarioConfig) -> float:
    """Seeded heading of the reference point, in (-pi/2, pi/2)."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0,)))
    return float(np.pi * (rng.random() - 0.5))


def generate_tracks(config: ScenarioConfig, offsets=None) -> UserTrack:
    """Seeded RPGM tracks with the slot-1 centroid at the origin.

    Each user's randomness comes from its own child stream, so user ``k`` gets
    the same draws whatever ``K`` is. Offsets and per-slot jitter are
    re-centred across the group so the centroid follows the reference point
    exactly.
    """
    K, N = config.K, config.N
    heading = group_heading(config)
    direction = np.array([np.cos(heading), np.sin(heading)])
    t = config.delta * np.arange(N)
    reference = config.Ve * t[:, None] * direction[None, :]

    if offsets is None:
        rows = []
        for k in range(K):
            rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(1, k)))
            rows.append(_disk(rng, config.group_radius, ()))
        offsets = np.array(rows)
    offsets = np.asarray(offsets, dtype=float).reshape(K, 2)
    offsets = offsets - offsets.mean(axis=0)

    jitter = np.zeros((K, N, 2))
    if config.perturbation_radius > 0:
        for k in range(K):
            rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(2, k)))
            jitter[k] = _disk(rng, config.perturbation_radius, (N,))
        jitter -= jitter.mean(axis=0, keepdims=True)

    positions = reference[None, :, :] + offsets[:, None, :] + jitter
    return UserTrack.from_positions(positions)


def distribution_radius(track: UserTrack, n: int) -> float:
    """Radius of the user group in 1-based slot ``n``."""
    if not 1 <= n <= track.N:
        raise IndexError(f"slot {n} outside 1..{track.N}")
    return float(track.radii[n - 1])


def step_bound(config: ScenarioConfig) -> float:
    """Largest per-slot displacement any generated user can make."""
    # re-centred jitter lies within 2*r_pert of the offset point
    return config.Ve * config.delta + 4.0 * config.perturbation_radius


def save_track_csv(track: UserTrack, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "n", "x", "y"])
        for k in range(track.K):
            for n in range(track.N):
                x, y = track.positions[k, n]
                writer.writerow([k + 1, n + 1, repr(float(x)), repr(float(y))])


def load_track_csv(path: str | Path) -> UserTrack:
    """Read a (k, n, x, y) CSV with 1-based indices."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no track rows")
    K = max(int(r["k"]) for r in rows)
    N = max(int(r["n"]) for r in rows)
    pos = np.full((K, N, 2), np.nan)
    for r in rows:
        pos[int(r["k"]) - 1, int(r["n"]) - 1] = (float(r["x"]), float(r["y"]))
    if np.isnan(pos).any():
        raise ValueError(f"{path}: track is missing (k, n) entries")
    return UserTrack.from_positions(pos)
