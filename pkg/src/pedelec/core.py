"""Shared domain vocabulary: powers, ratios, and the per-tick record.

All powers are double-precision watts, time is seconds from simulation
start.  Every type here is an immutable value; copies are safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MODE_COOPERATIVE = "cooperative"
MODE_COMPETITIVE = "competitive"


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A parameter set violates its construction invariants."""


class ActuationError(ValueError):
    """A motor command is outside the actuator range."""


class RefinementError(RuntimeError):
    """A certificate grid is too coarse to certify its tail bound."""


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def compute_ratio(p_human: float, p_motor: float, idle_ratio: float = 1.0) -> float:
    """Fraction of total output power supplied by the human.

    Returns ``p_human / (p_motor + p_human)``.  When both powers are zero
    (bike at rest) there is no meaningful ratio; the configured
    ``idle_ratio`` (default 1.0) is returned so a resting bike never
    demands motor action.
    """
    _require_finite("p_human", p_human)
    _require_finite("p_motor", p_motor)
    if p_human < 0.0:
        raise DomainError(f"p_human must be >= 0, got {p_human}")
    if p_motor < 0.0:
        raise DomainError(f"p_motor must be >= 0, got {p_motor}")
    total = p_human + p_motor
    if total == 0.0:
        return idle_ratio
    return p_human / total


@dataclass(frozen=True)
class PowerSample:
    """Instantaneous power measurements and the derived ratio at one tick.

    ``p_human_raw`` is the mechanical pedal power (torque times cadence),
    ``p_human_out`` and ``p_motor_out`` are the filtered output-side powers
    that the controller actually consumes, and ``ratio_m`` is the human
    share of the filtered total.
    """

    t: float
    p_human_raw: float
    p_human_out: float
    p_motor_out: float
    ratio_m: float

    def __post_init__(self) -> None:
        for name in ("t", "p_human_raw", "p_human_out", "p_motor_out", "ratio_m"):
            _require_finite(name, getattr(self, name))
        for name in ("p_human_raw", "p_human_out", "p_motor_out"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.ratio_m <= 1.0:
            raise DomainError(f"ratio_m must be in [0, 1], got {self.ratio_m}")

    @property
    def idle(self) -> bool:
        """True when both filtered powers are zero (bike at rest)."""
        return self.p_human_out == 0.0 and self.p_motor_out == 0.0


@dataclass(frozen=True)
class Reference:
    """A power-ratio setpoint constrained to the legal band [eta, 1]."""

    m_star: float
    eta: float

    def __post_init__(self) -> None:
        _require_finite("m_star", self.m_star)
        _require_finite("eta", self.eta)
        if not 0.0 < self.eta < 1.0:
            raise DomainError(f"eta must be in (0, 1), got {self.eta}")
        if not self.eta <= self.m_star <= 1.0:
            raise DomainError(
                f"m_star must be in [{self.eta}, 1], got {self.m_star}"
            )


@dataclass(frozen=True)
class TickRecord:
    """Complete state of the closed loop at one sampling instant.

    This is the row schema of the CSV log and the payload of the live
    stream message.  ``mode_flag`` is competitive exactly when the filtered
    human power exceeds the effort threshold ``p_threshold``.
    """

    sample: PowerSample
    m_star: float
    p_motor_target: float
    p_motor_actual: float
    y_control: float
    p_threshold: float
    mode_flag: str
    ventilation_rate: float = 0.0
    fault: bool = False

    def __post_init__(self) -> None:
        if self.mode_flag not in (MODE_COOPERATIVE, MODE_COMPETITIVE):
            raise DomainError(f"unknown mode_flag {self.mode_flag!r}")
        if self.ventilation_rate < 0.0:
            raise DomainError(
                f"ventilation_rate must be >= 0, got {self.ventilation_rate}"
            )
        expected = (
            MODE_COMPETITIVE
            if self.sample.p_human_out > self.p_threshold
            else MODE_COOPERATIVE
        )
        if self.mode_flag != expected:
            raise DomainError(
                f"mode_flag {self.mode_flag!r} inconsistent with "
                f"p_human_out={self.sample.p_human_out} vs "
                f"p_threshold={self.p_threshold}"
            )

    @property
    def idle(self) -> bool:
        return self.sample.idle
