"""Physical parameters, stage schedule and validation.

Everything downstream reads an :class:`ExperimentConfig`.  Configs are frozen;
:func:`validate` returns a new instance with the derived fields filled in.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

__all__ = [
    "ConfigError",
    "NonFiniteError",
    "ParameterError",
    "ScheduleOrderError",
    "StepSizeError",
    "PhysicalParams",
    "StageSchedule",
    "ExperimentConfig",
    "validate",
    "default_config",
    "config_to_mapping",
    "config_from_mapping",
    "load_config",
    "config_hash",
    "readout_separation",
]


class ConfigError(ValueError):
    """Base class for rejected configurations."""


class NonFiniteError(ConfigError):
    pass


class ParameterError(ConfigError):
    pass


class ScheduleOrderError(ConfigError):
    pass


class StepSizeError(ConfigError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    """Natural units by default.

    Exactly one of ``u`` / ``delta_prime`` may be left as ``None``; validation
    derives it from ``u = hbar * delta_prime / mass``.
    """

    hbar: float = 1.0
    mass: float = 1.0
    sigma0: float = 1.0
    u: float | None = 5.0
    delta: float = 0.0
    delta_prime: float | None = None


@dataclass(frozen=True)
class StageSchedule:
    t_coil: float = 0.5
    t1: float = 1.0
    t2: float = 1.1
    t3: float = 5.0
    t4: float = 5.1
    t_end: float = 10.0
    dt: float = 1e-3
    # Bob's magnet must open at least this many window lengths after Alice's closes.
    gap_factor: float = 5.0

    @property
    def window(self) -> float:
        return self.t2 - self.t1

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class ExperimentConfig:
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    schedule: StageSchedule = field(default_factory=StageSchedule)
    alpha: float = 0.0
    beta: float = 0.0
    seed: int = 0

    @property
    def gamma(self) -> float:
        return self.beta - self.alpha

    def replace(self, **changes: Any) -> "ExperimentConfig":
        """Return a copy with top-level or nested fields changed.

        Nested fields are addressed by their bare name (``dt``, ``sigma0``...).
        """
        phys = {k: changes.pop(k) for k in list(changes) if k in _PHYS_KEYS}
        sched = {k: changes.pop(k) for k in list(changes) if k in _SCHED_KEYS}
        unknown = set(changes) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "u" in phys and "delta_prime" not in phys:
            phys["delta_prime"] = None
        elif "delta_prime" in phys and "u" not in phys:
            phys["u"] = None
        return dataclasses.replace(
            self,
            physical=dataclasses.replace(self.physical, **phys),
            schedule=dataclasses.replace(self.schedule, **sched),
            **changes,
        )


_PHYS_KEYS = {f.name for f in dataclasses.fields(PhysicalParams)}
_SCHED_KEYS = {f.name for f in dataclasses.fields(StageSchedule)}
_TOP_KEYS = {"alpha", "beta", "seed"}


def _require_finite(name: str, value: float | None) -> None:
    if value is not None and not math.isfinite(value):
        raise NonFiniteError(f"{name} must be finite, got {value!r}")


def validate(config: ExperimentConfig) -> ExperimentConfig:
    """Check every invariant and fill derived fields.

    Idempotent: ``validate(validate(c)) == validate(c)``.
    """
    p, s = config.physical, config.schedule
    for name in _PHYS_KEYS:
        _require_finite(name, getattr(p, name))
    for name in _SCHED_KEYS:
        _require_finite(name, getattr(s, name))
    _require_finite("alpha", config.alpha)
    _require_finite("beta", config.beta)

    if p.hbar <= 0 or p.mass <= 0:
        raise ParameterError("hbar and mass must be positive")
    if p.sigma0 <= 0:
        raise ParameterError(f"sigma0 must be positive, got {p.sigma0}")

    u, dp = p.u, p.delta_prime
    if u is None and dp is None:
        raise ParameterError("one of u / delta_prime must be given")
    if dp is None:
        dp = p.mass * u / p.hbar
    elif u is None:
        u = p.hbar * dp / p.mass
    elif not math.isclose(u * p.mass, p.hbar * dp, rel_tol=1e-12, abs_tol=1e-300):
        raise ParameterError(f"u={u} inconsistent with hbar*delta_prime/mass={p.hbar * dp / p.mass}")
    if u < 0:
        raise ParameterError(f"u must be non-negative, got {u}")

    if not (s.t_coil < s.t1 < s.t2 < s.t3 < s.t4 < s.t_end):
        raise ScheduleOrderError(
            "need t_coil < t1 < t2 < t3 < t4 < t_end, got "
            f"{s.t_coil}, {s.t1}, {s.t2}, {s.t3}, {s.t4}, {s.t_end}"
        )
    if s.t_coil < 0:
        raise ScheduleOrderError("t_coil must be non-negative")
    T = s.t2 - s.t1
    if not math.isclose(s.t4 - s.t3, T, rel_tol=1e-9):
        raise ScheduleOrderError(f"magnet windows differ: t2-t1={T}, t4-t3={s.t4 - s.t3}")
    if s.t3 - s.t2 < s.gap_factor * T:
        raise ScheduleOrderError(
            f"t3-t2={s.t3 - s.t2} shorter than {s.gap_factor}*(t2-t1); Alice must finish well before Bob"
        )
    if s.dt <= 0:
        raise StepSizeError(f"dt must be positive, got {s.dt}")
    if s.dt > T / 10 * (1 + 1e-12):
        raise StepSizeError(f"dt={s.dt} too coarse for a magnet window of {T}; need dt <= {T / 10}")
    if not math.isclose(s.n_steps * s.dt, s.t_end, rel_tol=1e-9):
        raise StepSizeError(f"t_end={s.t_end} is not a whole number of steps dt={s.dt}")

    seed = int(config.seed)
    if not 0 <= seed < 2**64:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {config.seed}")

    phys = dataclasses.replace(p, u=float(u), delta_prime=float(dp))
    return dataclasses.replace(config, physical=phys, seed=seed)


def default_config() -> ExperimentConfig:
    return validate(ExperimentConfig())


def config_to_mapping(config: ExperimentConfig) -> dict[str, Any]:
    """Flat key/value view, the same layout the config file uses."""
    out: dict[str, Any] = {}
    out.update(dataclasses.asdict(config.physical))
    out.update(dataclasses.asdict(config.schedule))
    out.update(alpha=config.alpha, beta=config.beta, seed=config.seed)
    return out


def config_from_mapping(mapping: Mapping[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = ExperimentConfig() if base is None else base
    unknown = set(mapping) - _PHYS_KEYS - _SCHED_KEYS - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values = {k: (int(v) if k == "seed" else (None if v is None else float(v))) for k, v in mapping.items()}
    if "u" in values and "delta_prime" not in values:
        values["delta_prime"] = None
    return base.replace(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a flat JSON key/value file.

    A run manifest written by the CLI is accepted too: its ``config`` entry is
    used, so a manifest can be fed back to reproduce a run.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return validate(config_from_mapping(data))


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config_to_mapping(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def readout_separation(config: ExperimentConfig) -> float:
    """Gap between Bob's two branch centres at readout, in packet widths.

    Bob's branches are the last to split, so this is the binding case.
    """
    p, s = config.physical, config.schedule
    t_exit = 0.5 * (s.t3 + s.t4)
    tau = p.hbar * s.t_end / (2 * p.mass * p.sigma0**2)
    width = p.sigma0 * math.sqrt(1 + tau**2)
    return 2 * p.u * (s.t_end - t_exit) / width
