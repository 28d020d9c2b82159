"""Guidance velocity and fixed-step RK4 integration of pair trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig, config_hash
from .spin import branch_weights
from .wavefunctions import (
    _evaluate,
    _softmax_average,
    single_log_density_and_velocity,
    stage_at,
)

__all__ = [
    "DENSITY_FLOOR",
    "DensityUnderflowError",
    "PairPosition",
    "PairTrajectory",
    "SingleTrajectory",
    "BatchResult",
    "velocity",
    "readout_sign",
    "integrate_batch",
    "integrate_pair",
    "integrate_single",
    "integrate_single_batch",
]

DENSITY_FLOOR = 1e-300
_LOG_FLOOR = math.log(DENSITY_FLOOR)


class DensityUnderflowError(RuntimeError):
    """A trajectory reached a point where the density is numerically zero."""

    def __init__(self, t, zA, zB=None):
        self.t, self.zA, self.zB = t, zA, zB
        where = f"zA={zA!r}" if zB is None else f"(zA, zB)=({zA!r}, {zB!r})"
        super().__init__(f"density below {DENSITY_FLOOR:g} at t={t!r}, {where}; trajectory left the support")

    def __reduce__(self):
        # keeps the error intact when it crosses a process boundary
        return type(self), (self.t, self.zA, self.zB)


@dataclass(frozen=True)
class PairPosition:
    zA: float
    zB: float
    t: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.zA, self.zB, self.t))):
            raise ValueError("pair position must be finite")


@dataclass(frozen=True, eq=False)
class PairTrajectory:
    t: np.ndarray
    zA: np.ndarray
    zB: np.ndarray
    config_hash: str

    @property
    def samples(self) -> list[PairPosition]:
        return [PairPosition(float(a), float(b), float(t)) for t, a, b in zip(self.t, self.zA, self.zB)]

    @property
    def final(self) -> PairPosition:
        return PairPosition(float(self.zA[-1]), float(self.zB[-1]), float(self.t[-1]))


@dataclass(frozen=True, eq=False)
class SingleTrajectory:
    t: np.ndarray
    z: np.ndarray
    sign: int


@dataclass(eq=False)
class BatchResult:
    """Positions of a batch of pairs; recorded arrays have shape ``(n_samples, n_pairs)``."""

    t: np.ndarray
    zA: np.ndarray
    zB: np.ndarray | None
    snapshots: dict = field(default_factory=dict)

    @property
    def final_zA(self) -> np.ndarray:
        return self.zA[-1]

    @property
    def final_zB(self) -> np.ndarray:
        return self.zB[-1]


def readout_sign(z):
    """``sgn(z)`` with zero read as +1."""
    return np.where(np.asarray(z) >= 0, 1, -1)


def _pair_field(config: ExperimentConfig, gamma):
    p, s = config.physical, config.schedule
    w = branch_weights(0.0, config.gamma if gamma is None else gamma)

    def field(t, zA, zB):
        logs, va, vb, lognorm = _evaluate(zA, zB, t, stage_at(t, s), w, p, s)
        logsum, (vA, vB) = _softmax_average(logs, va, vb)
        logrho = logsum + lognorm
        if np.any(logrho < _LOG_FLOOR):
            i = int(np.argmin(logrho))
            raise DensityUnderflowError(t, float(np.ravel(zA)[i]), float(np.ravel(zB)[i]))
        return vA, vB

    return field


def velocity(zA, zB, t: float, config: ExperimentConfig, gamma=None):
    """Guidance velocities ``(jA / rho, jB / rho)`` at time ``t``.

    The blended forms are used inside the magnet windows.  Raises
    :class:`DensityUnderflowError` where ``rho`` is below ``DENSITY_FLOOR``.
    """
    zA, zB = np.broadcast_arrays(np.asarray(zA, float), np.asarray(zB, float))
    return _pair_field(config, gamma)(t, zA, zB)


def _record_plan(n_steps: int, dt: float, stride: int | None, record_times) -> tuple[np.ndarray, dict]:
    if stride is None:
        steps = [n_steps]
    else:
        if stride < 1:
            raise ValueError("stride must be >= 1")
        steps = list(range(0, n_steps + 1, stride))
        if steps[-1] != n_steps:
            steps.append(n_steps)
    snaps = {}
    for t in record_times:
        k = int(round(t / dt))
        if not math.isclose(k * dt, t, rel_tol=1e-9, abs_tol=1e-12) or not 0 <= k <= n_steps:
            raise ValueError(f"record time {t} is not on the integration grid")
        snaps[k] = t
    return np.array(steps), snaps


def _rk4(field, y0: tuple, config: ExperimentConfig, stride, record_times):
    s = config.schedule
    dt, n = s.dt, s.n_steps
    steps, snap_steps = _record_plan(n, dt, stride, record_times)
    want = set(steps.tolist())
    ys = tuple(np.array(y, dtype=float) for y in y0)
    rec = [[] for _ in ys]
    snaps = {}

    def keep(k):
        if k in want:
            for r, y in zip(rec, ys):
                r.append(y.copy())
        if k in snap_steps:
            snaps[snap_steps[k]] = tuple(y.copy() for y in ys)

    h = 0.5 * dt
    keep(0)
    for k in range(n):
        t = k * dt
        k1 = field(t, *ys)
        k2 = field(t + h, *(y + h * d for y, d in zip(ys, k1)))
        k3 = field(t + h, *(y + h * d for y, d in zip(ys, k2)))
        k4 = field((k + 1) * dt, *(y + dt * d for y, d in zip(ys, k3)))
        ys = tuple(y + (dt / 6) * (a + 2 * b + 2 * c + d) for y, a, b, c, d in zip(ys, k1, k2, k3, k4))
        keep(k + 1)
    return steps * dt, [np.array(r) for r in rec], snaps


def integrate_batch(zA0, zB0, config: ExperimentConfig, gamma=None, stride: int | None = None, record_times=()):
    """Integrate many pairs at once from ``t = 0`` to ``t_end``.

    ``gamma`` may be an array with one relative angle per pair.  With
    ``stride=None`` only the final positions are kept; otherwise every
    ``stride``-th step plus the last.  ``record_times`` adds snapshots at
    grid times, returned in ``BatchResult.snapshots`` keyed by time.

    Each pair is advanced independently and elementwise, so its result does
    not depend on what else is in the batch.
    """
    zA0, zB0 = np.broadcast_arrays(np.atleast_1d(np.asarray(zA0, float)), np.atleast_1d(np.asarray(zB0, float)))
    if gamma is not None:
        gamma = np.broadcast_to(np.asarray(gamma, float), zA0.shape)
    field = _pair_field(config, gamma)
    t, (zA, zB), snaps = _rk4(field, (zA0, zB0), config, stride, record_times)
    return BatchResult(t, zA, zB, snaps)


def integrate_pair(z0: PairPosition, config: ExperimentConfig, stride: int = 1, gamma=None) -> PairTrajectory:
    if z0.t != 0.0:
        raise ValueError("trajectories start at t = 0")
    res = integrate_batch([z0.zA], [z0.zB], config, gamma=gamma, stride=stride)
    return PairTrajectory(res.t, res.zA[:, 0], res.zB[:, 0], config_hash(config))


def _single_field(config: ExperimentConfig, c_plus, c_minus):
    p, s = config.physical, config.schedule

    def field(t, z):
        logrho, v = single_log_density_and_velocity(z, t, c_plus, c_minus, p, s.t1, s.t2)
        if np.any(logrho < _LOG_FLOOR):
            i = int(np.argmin(logrho))
            raise DensityUnderflowError(t, float(np.ravel(z)[i]))
        return (v,)

    return field


def _check_coefficients(c_plus, c_minus):
    if not math.isclose(c_plus**2 + c_minus**2, 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"need c_plus^2 + c_minus^2 = 1, got {c_plus**2 + c_minus**2}")


def integrate_single_batch(z0, c_plus: float, c_minus: float, config: ExperimentConfig, stride: int | None = None):
    """Single particles through Alice's magnet window with spin amplitudes ``(c_plus, c_minus)``."""
    _check_coefficients(c_plus, c_minus)
    z0 = np.atleast_1d(np.asarray(z0, float))
    t, (z,), _ = _rk4(_single_field(config, c_plus, c_minus), (z0,), config, stride, ())
    return BatchResult(t, z, None)


def integrate_single(z0: float, c_plus: float, c_minus: float, config: ExperimentConfig, stride: int = 1) -> SingleTrajectory:
    res = integrate_single_batch([z0], c_plus, c_minus, config, stride)
    z = res.zA[:, 0]
    return SingleTrajectory(res.t, z, int(readout_sign(z[-1])))
