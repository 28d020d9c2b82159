"""Outcome statistics, closed-form predictions and the hidden-variable disk.

Every estimator draws its pairs from a random stream keyed by the setting it
measures, so a statistic at a given angle is reproducible on its own,
independent of what else was computed in the same run.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .batch import JobResult, PairJob, simulate_jobs
from .config import ExperimentConfig, default_config, readout_separation, validate
from .guidance import PairTrajectory, readout_sign
from .sampling import DiskPoint, positions_to_disk, setting_key
from .special import inverse_erf

__all__ = [
    "MIN_SEPARATION",
    "InsufficientSeparationWarning",
    "PairOutcome",
    "ChshEstimate",
    "SeparatrixCurve",
    "PALETTE",
    "readout",
    "pairs_setting",
    "simulate_setting",
    "correlation",
    "joint_frequencies",
    "joint_probabilities_theory",
    "correlation_theory",
    "chsh_settings",
    "chsh_sweep",
    "chsh_M",
    "chsh_theory",
    "inverse_erf",
    "bob_threshold",
    "separatrix_radius",
    "separatrix",
    "predicted_outcome",
    "disk_partition",
    "marginals",
]

# final branch gap, in packet widths, below which signs are not trusted
MIN_SEPARATION = 5.0

# joint outcome -> colour
PALETTE = {(1, 1): "blue", (1, -1): "orange", (-1, 1): "green", (-1, -1): "red"}


class InsufficientSeparationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PairOutcome:
    sA: int
    sB: int
    pair_index: int
    disk: DiskPoint

    def __post_init__(self):
        if self.sA not in (1, -1) or self.sB not in (1, -1):
            raise ValueError("outcomes are +1 or -1")


@dataclass(frozen=True)
class ChshEstimate:
    theta: float
    M_hat: float
    stderr: float
    n_pairs_per_setting: int
    correlators: tuple = ()

    def __post_init__(self):
        if abs(self.M_hat) > 4:
            raise ValueError("|M| cannot exceed 4")
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")


@dataclass(frozen=True, eq=False)
class SeparatrixCurve:
    """Boundary of the outcome domains on the disk as ``(theta, U)`` samples.

    ``arc`` names the piece each sample belongs to: ``"alice"`` for the
    vertical diameter, ``"bob_plus"`` / ``"bob_minus"`` for Bob's boundary in
    the half where Alice found +1 / -1.  For ``degenerate`` curves (cos gamma
    = +-1) Bob's outcome is certain on each half; the ``"degenerate"`` rows
    then mark the horizontal diameter and separate nothing.
    """

    gamma: float
    theta: np.ndarray
    U: np.ndarray
    arc: np.ndarray
    degenerate: bool

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.theta.tolist(), self.U.tolist()))


def readout(traj: PairTrajectory, pair_index: int = 0, config: ExperimentConfig | None = None) -> PairOutcome:
    """Signs of the last sample; the disk point comes from the first."""
    if config is not None and readout_separation(config) < MIN_SEPARATION:
        warnings.warn(
            f"branches are only {readout_separation(config):.2f} widths apart at t_end",
            InsufficientSeparationWarning,
            stacklevel=2,
        )
    sigma0 = (config or default_config()).physical.sigma0
    return PairOutcome(
        int(readout_sign(traj.zA[-1])),
        int(readout_sign(traj.zB[-1])),
        int(pair_index),
        positions_to_disk(traj.zA[0], traj.zB[0], sigma0),
    )


def _prepare(config, seed):
    config = validate(config or default_config())
    if seed is not None:
        config = config.replace(seed=int(seed))
    return validate(config)


def pairs_setting(gamma: float) -> tuple[int, ...]:
    """Stream key shared by every per-angle statistic at ``gamma``."""
    return setting_key("pairs", float(gamma))


def simulate_setting(gamma, n: int, seed=None, *, config=None, workers=None, record_times=()) -> JobResult:
    """``n`` equilibrium pairs at relative angle ``gamma`` from the per-angle stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    config = _prepare(config, seed)
    job = PairJob(float(gamma), int(n), pairs_setting(gamma))
    return simulate_jobs(config, [job], workers=workers, record_times=record_times)[0]


def _mean_and_stderr(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = float(x.mean())
    if n < 2:
        return mean, 0.0
    return mean, float(x.std(ddof=1) / math.sqrt(n))


def correlation(gamma, n: int, seed=None, *, config=None, workers=None) -> tuple[float, float]:
    """Empirical ``<sA sB>`` and its standard error."""
    res = simulate_setting(gamma, n, seed, config=config, workers=workers)
    return _mean_and_stderr((res.sA * res.sB).astype(float))


def joint_frequencies(sA, sB) -> np.ndarray:
    """Fractions ``(++, +-, -+, --)``."""
    sA, sB = np.asarray(sA), np.asarray(sB)
    n = sA.size
    return np.array([np.sum((sA == a) & (sB == b)) / n for a in (1, -1) for b in (1, -1)])


def joint_probabilities_theory(gamma) -> tuple[float, float, float, float]:
    same = 0.5 * math.sin(gamma / 2) ** 2
    diff = 0.5 * math.cos(gamma / 2) ** 2
    return same, diff, diff, same


def correlation_theory(gamma) -> float:
    pp, pm, mp, mm = joint_probabilities_theory(gamma)
    return pp + mm - pm - mp


def chsh_settings(theta: float) -> list[tuple[float, float, int]]:
    """``(alpha, beta, sign)`` for the four correlators of ``M(theta)``."""
    a, a2, b, b2 = 0.0, theta, theta / 2, 3 * theta / 2
    return [(a, b, 1), (a, b2, -1), (a2, b, 1), (a2, b2, 1)]


def chsh_sweep(thetas, n_per_setting: int, seed=None, *, config=None, workers=None) -> list[ChshEstimate]:
    """``M(theta)`` for every theta, all settings simulated in one batch.

    Each of the four settings at each theta has its own stream, so the four
    correlators are estimated from independent pairs.
    """
    if n_per_setting < 1:
        raise ValueError("n_per_setting must be >= 1")
    config = _prepare(config, seed)
    thetas = [float(t) for t in thetas]
    jobs = [
        PairJob(beta - alpha, n_per_setting, setting_key("chsh", theta, k))
        for theta in thetas
        for k, (alpha, beta, _) in enumerate(chsh_settings(theta))
    ]
    results = iter(simulate_jobs(config, jobs, workers=workers))
    out = []
    for theta in thetas:
        M, var, Es = 0.0, 0.0, []
        for _, _, sign in chsh_settings(theta):
            res = next(results)
            E, se = _mean_and_stderr((res.sA * res.sB).astype(float))
            Es.append(E)
            M += sign * E
            var += se**2
        out.append(ChshEstimate(theta, M, math.sqrt(var), n_per_setting, tuple(Es)))
    return out


def chsh_M(theta: float, n_per_setting: int, seed=None, *, config=None, workers=None) -> ChshEstimate:
    return chsh_sweep([theta], n_per_setting, seed, config=config, workers=workers)[0]


def chsh_theory(theta):
    return 3 * np.cos(theta / 2) - np.cos(3 * theta / 2)


def bob_threshold(gamma, sigma0: float = 1.0) -> float:
    """``sqrt(2) sigma0 erfinv(cos gamma)``: Bob's initial-position split when Alice finds +1.

    Returns +-inf when ``cos gamma`` is +-1.  When Alice finds -1 the split is
    the negative of this value.
    """
    c = math.cos(gamma)
    if c >= 1:
        return math.inf
    if c <= -1:
        return -math.inf
    return math.sqrt(2) * sigma0 * inverse_erf(c)


def separatrix_radius(theta, gamma):
    """Disk radius ``U(theta) = 1 - exp(-(erfinv(cos gamma) / sin theta)^2)``."""
    e = bob_threshold(gamma) / math.sqrt(2)
    with np.errstate(divide="ignore"):
        return -np.expm1(-((e / np.sin(theta)) ** 2))


def separatrix(gamma: float, theta_grid=None, n_radial: int = 64) -> SeparatrixCurve:
    """Analytic outcome boundary on the disk for relative angle ``gamma``.

    Bob's boundary is the line ``zB0 = sA * z*`` in position space.  On the
    half with ``sA = +1`` it is the arc where ``sin theta`` has the sign of
    ``z*``; on the other half it is the mirror image.  ``theta_grid`` selects
    the angles sampled; points within 1e-9 of the rim are dropped.
    """
    gamma = float(gamma)
    if theta_grid is None:
        theta_grid = (np.arange(4 * 256) + 0.5) * (2 * np.pi / (4 * 256))
    theta_grid = np.asarray(theta_grid, float)
    radial = np.arange(n_radial) / n_radial
    rows_t, rows_u, rows_a = [], [], []

    def add(t, u, name):
        rows_t.append(np.asarray(t, float))
        rows_u.append(np.asarray(u, float))
        rows_a.append(np.full(np.size(t), name))

    add(np.full(n_radial, np.pi / 2), radial, "alice")
    add(np.full(n_radial, 3 * np.pi / 2), radial, "alice")
    zstar = bob_threshold(gamma)
    degenerate = math.isinf(zstar)
    if degenerate:
        add(np.zeros(n_radial), radial, "degenerate")
        add(np.full(n_radial, np.pi), radial, "degenerate")
    elif abs(zstar) < 1e-12:
        # the line zB0 = 0 is the horizontal diameter itself (cos(pi/2) is not exactly 0 in floats)
        add(np.zeros(n_radial), radial, "bob_plus")
        add(np.full(n_radial, np.pi), radial, "bob_minus")
    else:
        right, s = np.cos(theta_grid) > 0, np.sin(theta_grid)
        U = separatrix_radius(theta_grid, gamma)
        # nearer the rim 1 - U carries too few digits to place the point
        ok = U < 1 - 1e-9
        plus = right & (s * zstar > 0) & ok
        minus = ~right & (np.cos(theta_grid) < 0) & (s * zstar < 0) & ok
        add(theta_grid[plus], U[plus], "bob_plus")
        add(theta_grid[minus], U[minus], "bob_minus")
    return SeparatrixCurve(gamma, np.concatenate(rows_t), np.concatenate(rows_u), np.concatenate(rows_a), degenerate)


def predicted_outcome(zA0, zB0, gamma, sigma0: float = 1.0):
    """Joint outcome implied by the analytic boundary for initial positions."""
    sA = readout_sign(zA0)
    zstar = bob_threshold(gamma, sigma0)
    sB = np.where(np.asarray(zB0) > sA * zstar, 1, -1)
    return sA, sB


def disk_partition(gamma, n: int, seed=None, *, config=None, workers=None) -> list[tuple[DiskPoint, PairOutcome]]:
    """Disk points with their simulated joint outcomes; colours are in ``PALETTE``."""
    res = simulate_setting(gamma, n, seed, config=config, workers=workers)
    out = []
    for i, r, th, a, b in zip(res.pair_index, res.r, res.theta, res.sA, res.sB):
        p = DiskPoint(float(r), float(th))
        out.append((p, PairOutcome(int(a), int(b), int(i), p)))
    return out


def marginals(gamma, n: int, seed=None, *, config=None, workers=None):
    """``(P_A(+), P_B(+), (stderr_A, stderr_B))`` from binomial counts."""
    res = simulate_setting(gamma, n, seed, config=config, workers=workers)
    pa, pb = float(np.mean(res.sA == 1)), float(np.mean(res.sB == 1))
    se = tuple(math.sqrt(p * (1 - p) / n) for p in (pa, pb))
    return pa, pb, se
