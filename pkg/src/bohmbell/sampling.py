"""Quantum-equilibrium initial conditions and the unit-disk hidden variables.

Random numbers come from counter-based Philox streams.  The key is derived
from ``(seed, setting)`` and the counter is the pair index, so pair ``i``
always receives the same draws no matter how a batch is split into chunks or
spread over workers.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .special import inverse_erf

__all__ = [
    "DiskPoint",
    "SeededRng",
    "setting_key",
    "stream_uniforms",
    "sample_disk",
    "disk_to_positions",
    "positions_to_disk",
    "sample_pair",
    "equilibrium_batch",
    "single_equilibrium_batch",
]

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class DiskPoint:
    r: float
    theta: float

    def __post_init__(self):
        if not (0 <= self.r < 1):
            raise ValueError(f"r must lie in [0, 1), got {self.r}")
        if not (0 <= self.theta < TWO_PI):
            raise ValueError(f"theta must lie in [0, 2pi), got {self.theta}")


def setting_key(*parts) -> tuple[int, ...]:
    """Hash a setting identifier (strings, ints, floats) into spawn-key words.

    Floats are hashed by their IEEE bit pattern, so ``0.5`` and ``0.5000000001``
    are different settings while repeated runs agree exactly.
    """
    h = hashlib.blake2b(digest_size=16)
    for part in parts:
        if isinstance(part, float):
            h.update(b"f" + struct.pack("<d", part))
        elif isinstance(part, (int, np.integer)):
            h.update(b"i" + int(part).to_bytes(16, "little", signed=True))
        else:
            h.update(b"s" + str(part).encode())
    return tuple(int.from_bytes(h.digest()[i : i + 4], "little") for i in range(0, 16, 4))


def _philox_key(seed: int, setting: tuple[int, ...]) -> np.ndarray:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(setting)).generate_state(2, np.uint64)


def stream_uniforms(seed: int, start: int, count: int, setting: tuple[int, ...] = ()) -> np.ndarray:
    """Uniforms in [0, 1) for streams ``start .. start+count-1``, shape ``(count, 4)``.

    Each stream owns one Philox block (four words); row ``i`` depends only on
    ``(seed, setting, start + i)``.
    """
    bitgen = np.random.Philox(key=_philox_key(seed, setting), counter=np.array([start, 0, 0, 0], dtype=np.uint64))
    return np.random.Generator(bitgen).random((count, 4))


@dataclass(frozen=True)
class SeededRng:
    """One pair's random stream."""

    seed: int
    stream_index: int
    setting: tuple[int, ...] = ()

    def uniforms(self) -> np.ndarray:
        return stream_uniforms(self.seed, self.stream_index, 1, self.setting)[0]


def sample_disk(rng: SeededRng) -> DiskPoint:
    """Radial coordinate and angle, each uniform: ``r ~ U[0,1)``, ``theta ~ U[0, 2pi)``."""
    u = rng.uniforms()
    return DiskPoint(float(u[0]), float(TWO_PI * u[1]))


def disk_to_positions(p, sigma0: float):
    """``F(r, theta) = sigma0 sqrt(-2 ln(1-r)) (cos theta, sin theta)``.

    ``p`` is a :class:`DiskPoint` or an ``(r, theta)`` pair of arrays.
    """
    r, theta = (p.r, p.theta) if isinstance(p, DiskPoint) else p
    r = np.asarray(r, float)
    if np.any(r >= 1) or np.any(r < 0):
        raise ValueError("disk radius must lie in [0, 1)")
    radius = sigma0 * np.sqrt(-2.0 * np.log1p(-r))
    return radius * np.cos(theta), radius * np.sin(theta)


def positions_to_disk(zA0, zB0, sigma0: float):
    """Inverse of :func:`disk_to_positions`; the origin maps to ``theta = 0``.

    Returns a :class:`DiskPoint` for scalar input, else an ``(r, theta)`` pair.
    """
    zA0, zB0 = np.asarray(zA0, float), np.asarray(zB0, float)
    rho2 = zA0**2 + zB0**2
    r = -np.expm1(-rho2 / (2 * sigma0**2))
    theta = np.mod(np.arctan2(zB0, zA0), TWO_PI)
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    if r.ndim == 0:
        return DiskPoint(float(r), float(theta))
    return r, theta


def sample_pair(rng: SeededRng, sigma0: float) -> tuple[float, float]:
    """Initial ``(zA0, zB0)`` distributed as ``|Psi_1(zA, zB, 0)|^2``."""
    zA, zB = disk_to_positions(sample_disk(rng), sigma0)
    return float(zA), float(zB)


def equilibrium_batch(seed: int, start: int, count: int, sigma0: float, setting: tuple[int, ...] = ()):
    """Vectorised :func:`sample_pair` for streams ``start .. start+count-1``.

    Returns ``(r, theta, zA0, zB0)`` arrays.
    """
    u = stream_uniforms(seed, start, count, setting)
    r, theta = u[:, 0], TWO_PI * u[:, 1]
    zA0, zB0 = disk_to_positions((r, theta), sigma0)
    return r, theta, zA0, zB0


def single_equilibrium_batch(seed: int, start: int, count: int, sigma0: float, setting: tuple[int, ...] = ()):
    """One-particle positions from ``|G(z, 0)|^2`` by inverting the Gaussian CDF."""
    u = stream_uniforms(seed, start, count, setting)[:, 0]
    # u = 0 would map to -inf; the open interval is what the inversion needs
    u = np.where(u == 0.0, 2.0**-54, u)
    return np.sqrt(2.0) * sigma0 * inverse_erf(2 * u - 1)
