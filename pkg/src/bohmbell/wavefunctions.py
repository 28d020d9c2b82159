"""Closed-form packets, stage densities and probability currents.

Every stage of the experiment has a density of the form

    rho(zA, zB, t) = sum_k w_k |phi_A,k(zA, t)|^2 |phi_B,k(zB, t)|^2

where each ``phi`` is a free or Stern-Gerlach branch packet and the weights
come from the rotated singlet.  The four two-spin product states are
orthonormal, so cross terms vanish and each current is the same sum weighted
by the packet's local velocity ``(hbar/m) Im d ln(phi)``.  All packets share
the width ``|s_t|`` at a given time, which is what makes the log-space
evaluation in :func:`log_density_and_velocity` cheap and underflow-free.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, PhysicalParams, StageSchedule
from .spin import branch_weights

__all__ = [
    "Stage",
    "StageState",
    "StageTimeError",
    "complex_width",
    "packet_width",
    "free_packet",
    "sg_component",
    "exit_time",
    "blend_weight",
    "stage_at",
    "stage_density",
    "stage_currents",
    "blend_density",
    "blend_currents",
    "log_density_and_velocity",
    "single_log_density_and_velocity",
    "single_particle_velocity",
]


class Stage(enum.Enum):
    S1_FREE = "S1_free"
    S2_POST_COIL = "S2_post_coil"
    BLEND_A = "BLEND_A"
    S3_A_SPLIT = "S3_A_split"
    BLEND_B = "BLEND_B"
    S4_BOTH_SPLIT = "S4_both_split"


class StageTimeError(ValueError):
    """A stage state was evaluated outside the times where it is defined."""


@dataclass(frozen=True)
class StageState:
    stage_id: Stage
    gamma: float
    params: PhysicalParams
    schedule: StageSchedule

    @classmethod
    def at(cls, t: float, config: ExperimentConfig, gamma=None) -> "StageState":
        g = config.gamma if gamma is None else gamma
        return cls(stage_at(t, config.schedule), g, config.physical, config.schedule)

    def with_stage(self, stage: Stage) -> "StageState":
        return StageState(stage, self.gamma, self.params, self.schedule)


# --- single packets -------------------------------------------------------


def _tau(t, p: PhysicalParams):
    return p.hbar * t / (2 * p.mass * p.sigma0**2)


def complex_width(t, p: PhysicalParams):
    """``s_t = sigma0 (1 + i hbar t / (2 m sigma0^2))``."""
    return p.sigma0 * (1 + 1j * _tau(t, p))


def packet_width(t, p: PhysicalParams):
    """Standard deviation of ``|G(z, t)|^2``, i.e. ``|s_t|``."""
    return p.sigma0 * np.sqrt(1 + _tau(t, p) ** 2)


def _spread_rate(t, p: PhysicalParams):
    # local velocity of a free packet is spread_rate * (z - centre)
    tau = _tau(t, p)
    return (p.hbar / p.mass) * tau / (2 * p.sigma0**2 * (1 + tau**2))


def free_packet(z, t, p: PhysicalParams):
    """Normalised freely spreading Gaussian, real at ``t = 0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("free_packet needs t >= 0")
    s = complex_width(t, p)
    return (2 * np.pi) ** -0.25 / np.sqrt(s) * np.exp(-np.asarray(z) ** 2 / (4 * p.sigma0 * s))


def sg_component(z, t, sign: int, t_exit: float, p: PhysicalParams, *, strict: bool = True):
    """Branch packet for spin ``sign`` leaving a Stern-Gerlach magnet.

    The centre sits at ``sign * u * (t - t_exit)`` and the width follows the
    global ``s_t``, so ``|sg_component(z, t_exit)| == |free_packet(z, t_exit)|``.
    The formula is an exact free solution for every ``t``; ``strict=False``
    allows evaluating it before ``t_exit``, which blend windows need.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    if strict and np.any(np.asarray(t) < t_exit):
        raise ValueError(f"sg_component is defined for t >= t_exit={t_exit}")
    z = np.asarray(z)
    elapsed = t - t_exit
    shift = sign * p.u * elapsed
    phase = sign * (p.delta + (z - 0.5 * shift) * p.delta_prime)
    return free_packet(z - shift, t, p) * np.exp(1j * phase)


def _sg_log_derivative(z, t, sign, t_exit, p: PhysicalParams):
    # d/dz ln(sg_component)
    centre = sign * p.u * (t - t_exit)
    return -(np.asarray(z) - centre) / (2 * p.sigma0 * complex_width(t, p)) + 1j * sign * p.delta_prime


def single_particle_velocity(z, t, c_plus: float, c_minus: float, t_exit: float, p: PhysicalParams):
    """``j / rho`` of ``c_plus Psi_+ + c_minus Psi_-`` from complex amplitudes.

    Straight evaluation of ``(hbar/m) Im(Psi^dagger dPsi) / Psi^dagger Psi``
    with no log-space tricks; used as a reference for the two-particle field.
    """
    num = 0.0
    den = 0.0
    for sign, c in ((1, c_plus), (-1, c_minus)):
        psi = c * sg_component(z, t, sign, t_exit, p, strict=False)
        dpsi = psi * _sg_log_derivative(z, t, sign, t_exit, p)
        num = num + np.imag(np.conj(psi) * dpsi)
        den = den + np.abs(psi) ** 2
    return (p.hbar / p.mass) * num / den


# --- schedule -------------------------------------------------------------


def exit_time(t_start: float, t_stop: float) -> float:
    """Clock origin of the branch packets leaving a magnet open on ``[t_start, t_stop]``.

    Under a constant force switched on for the window, the free flight after
    the magnet extrapolates back to the centre of the window.
    """
    return 0.5 * (t_start + t_stop)


def blend_weight(t, t_start: float, t_stop: float):
    """Smooth ramp from 0 at ``t_start`` to 1 at ``t_stop``."""
    return 0.5 * (1 - np.cos(np.pi * (t - t_start) / (t_stop - t_start)))


def stage_at(t: float, schedule: StageSchedule) -> Stage:
    """Half-open dispatch: a boundary time belongs to the later stage."""
    s = schedule
    if t < 0:
        raise StageTimeError(f"t={t} precedes the source")
    if t < s.t_coil:
        return Stage.S1_FREE
    if t < s.t1:
        return Stage.S2_POST_COIL
    if t < s.t2:
        return Stage.BLEND_A
    if t < s.t3:
        return Stage.S3_A_SPLIT
    if t < s.t4:
        return Stage.BLEND_B
    return Stage.S4_BOTH_SPLIT


def _validity(stage: Stage, s: StageSchedule) -> tuple[float, float]:
    # analytic states also cover the blend windows that use them
    return {
        Stage.S1_FREE: (0.0, s.t_coil),
        Stage.S2_POST_COIL: (s.t_coil, s.t2),
        Stage.BLEND_A: (s.t1, s.t2),
        Stage.S3_A_SPLIT: (s.t1, s.t4),
        Stage.BLEND_B: (s.t3, s.t4),
        Stage.S4_BOTH_SPLIT: (s.t3, math.inf),
    }[stage]


def _check_time(stage: Stage, t: float, s: StageSchedule) -> None:
    lo, hi = _validity(stage, s)
    if not lo <= t <= hi:
        raise StageTimeError(f"{stage.value} is defined on [{lo}, {hi}], got t={t}")


# --- term engine ----------------------------------------------------------

# packet labels: 0 free, +1 / -1 Stern-Gerlach branch
_PURE_TERMS = {
    Stage.S1_FREE: lambda w: [(1.0, 0, 0)],
    Stage.S2_POST_COIL: lambda w: [(1.0, 0, 0)],
    Stage.S3_A_SPLIT: lambda w: [(w[0, 0] + w[0, 1], 1, 0), (w[1, 0] + w[1, 1], -1, 0)],
    Stage.S4_BOTH_SPLIT: lambda w: [
        (w[0, 0], 1, 1),
        (w[0, 1], 1, -1),
        (w[1, 0], -1, 1),
        (w[1, 1], -1, -1),
    ],
}
_BLENDS = {
    Stage.BLEND_A: (Stage.S2_POST_COIL, Stage.S3_A_SPLIT),
    Stage.BLEND_B: (Stage.S3_A_SPLIT, Stage.S4_BOTH_SPLIT),
}


def _window(stage: Stage, s: StageSchedule) -> tuple[float, float]:
    return (s.t1, s.t2) if stage in (Stage.BLEND_A, Stage.S3_A_SPLIT) else (s.t3, s.t4)


def _terms(stage: Stage, t: float, w, s: StageSchedule):
    if stage in _BLENDS:
        pre, post = _BLENDS[stage]
        lam = blend_weight(t, *_window(stage, s))
        return [((1 - lam) * c, a, b) for c, a, b in _PURE_TERMS[pre](w)] + [
            (lam * c, a, b) for c, a, b in _PURE_TERMS[post](w)
        ]
    return _PURE_TERMS[stage](w)


class _Packets:
    """Unnormalised log-moduli and local velocities of the packets at one time."""

    def __init__(self, z, t, t_exit, p: PhysicalParams):
        self.z = z
        self.t = t
        self.t_exit = t_exit
        self.p = p
        self.w2 = packet_width(t, p) ** 2
        self.rate = _spread_rate(t, p)
        self._cache = {}

    def __getitem__(self, label):
        if label not in self._cache:
            centre = label * self.p.u * (self.t - self.t_exit)
            d = self.z - centre
            self._cache[label] = (-(d * d) / (2 * self.w2), label * self.p.u + self.rate * d)
        return self._cache[label]


def _evaluate(zA, zB, t, stage: Stage, w, p: PhysicalParams, s: StageSchedule):
    zA, zB = np.broadcast_arrays(np.asarray(zA, float), np.asarray(zB, float))
    A = _Packets(zA, t, exit_time(s.t1, s.t2), p)
    B = _Packets(zB, t, exit_time(s.t3, s.t4), p)
    logs, vas, vbs = [], [], []
    with np.errstate(divide="ignore"):
        for c, a, b in _terms(stage, t, w, s):
            la, va = A[a]
            lb, vb = B[b]
            logs.append(np.log(c) + la + lb)
            vas.append(va)
            vbs.append(vb)
    # two normalised packets of common width contribute 1/(2 pi w2)
    lognorm = -np.log(2 * np.pi * A.w2)
    return logs, vas, vbs, lognorm


def _softmax_average(logs, *values):
    """Log of ``sum exp(logs)`` and the ``exp(logs)``-weighted means of ``values``.

    The largest term is factored out first, so tiny densities never underflow
    before the ratio is taken.
    """
    top = logs[0]
    for lg in logs[1:]:
        top = np.maximum(top, lg)
    es = [np.exp(lg - top) for lg in logs]
    norm = sum(es[1:], es[0])
    means = tuple(sum(e * v for e, v in zip(es, vals)) / norm for vals in values)
    return top + np.log(norm), means


def _state_args(t, state: StageState, check: bool = True):
    if check:
        _check_time(state.stage_id, t, state.schedule)
    return state.stage_id, branch_weights(0.0, state.gamma), state.params, state.schedule


def stage_density(zA, zB, t: float, state: StageState):
    logs, _, _, lognorm = _evaluate(zA, zB, t, *_state_args(t, state))
    return np.exp(np.array(logs) + lognorm).sum(axis=0)


def stage_currents(zA, zB, t: float, state: StageState):
    logs, va, vb, lognorm = _evaluate(zA, zB, t, *_state_args(t, state))
    dens = np.exp(np.array(logs) + lognorm)
    return (dens * np.array(va)).sum(axis=0), (dens * np.array(vb)).sum(axis=0)


def _blend_state(window: int, state: StageState) -> StageState:
    if window == 1:
        return state.with_stage(Stage.BLEND_A)
    if window == 3:
        return state.with_stage(Stage.BLEND_B)
    raise ValueError(f"window must be 1 or 3, got {window!r}")


def blend_density(zA, zB, t: float, window: int, state: StageState):
    """``(1 - lam) rho_pre + lam rho_post`` on magnet window ``window`` (1: Alice, 3: Bob)."""
    return stage_density(zA, zB, t, _blend_state(window, state))


def blend_currents(zA, zB, t: float, window: int, state: StageState):
    return stage_currents(zA, zB, t, _blend_state(window, state))


def log_density_and_velocity(zA, zB, t: float, state: StageState, check: bool = True):
    """``(log rho, vA, vB)`` with the dominant term factored out before the ratio."""
    logs, va, vb, lognorm = _evaluate(zA, zB, t, *_state_args(t, state, check))
    logsum, (vA, vB) = _softmax_average(logs, va, vb)
    return logsum + lognorm, vA, vB


def single_log_density_and_velocity(z, t: float, c_plus, c_minus, p: PhysicalParams, t_start: float, t_stop: float):
    """One particle through one magnet open on ``[t_start, t_stop]``.

    Free before the window, blended inside it, split into
    ``c_plus Psi_+ + c_minus Psi_-`` afterwards.
    """
    P = _Packets(np.asarray(z, float), t, exit_time(t_start, t_stop), p)
    if t < t_start:
        terms = [(1.0, 0)]
    else:
        lam = 1.0 if t >= t_stop else blend_weight(t, t_start, t_stop)
        terms = [(1 - lam, 0), (lam * c_plus**2, 1), (lam * c_minus**2, -1)]
    with np.errstate(divide="ignore"):
        logs = [np.log(c) + P[k][0] for c, k in terms]
    logsum, (v,) = _softmax_average(logs, [P[k][1] for _, k in terms])
    return logsum - 0.5 * np.log(2 * np.pi * P.w2), v
