"""Simulated physical system: motor electrical chain and drivetrain.

The static chain is current = mu * Y, electrical power = V * I, delivered
power = motor efficiency times electrical power.  Delivered power is
additionally scaled by a human-coupling factor g(p_human): the real
actuator delivers less power per command unit at low pedaling effort.
An optional first-order lag models actuation dynamics; it is off by
default since motor dynamics are neglected in the design model.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from pedelec.core import ActuationError, ConfigError, DomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlantParams:
    """Motor and drivetrain constants.

    mu        amps per control unit
    v_motor   battery/motor voltage [V]
    e_motor   motor efficiency (0, 1)
    e_crank   crankset efficiency (0, 1)
    y_max     actuator command ceiling
    tau_motor actuation lag time constant [s]; 0 = instantaneous
    coupling  g(p) = g0 + (1 - g0) (1 - exp(-p / p_c)); set
              coupling_enabled=False for g = 1
    """

    mu: float = 0.5
    v_motor: float = 36.0
    e_motor: float = 0.8
    e_crank: float = 0.95
    y_max: float = 20.0
    tau_motor: float = 0.0
    coupling_g0: float = 0.6
    coupling_pc: float = 50.0
    coupling_enabled: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.e_motor < 1.0:
            raise ConfigError(f"e_motor must be in (0, 1), got {self.e_motor}")
        if not 0.0 < self.e_crank < 1.0:
            raise ConfigError(f"e_crank must be in (0, 1), got {self.e_crank}")
        for name in ("mu", "v_motor", "y_max", "coupling_pc"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.tau_motor < 0.0:
            raise ConfigError(f"tau_motor must be >= 0, got {self.tau_motor}")
        if not 0.0 < self.coupling_g0 <= 1.0:
            raise ConfigError(f"coupling_g0 must be in (0, 1], got {self.coupling_g0}")

    @property
    def static_gain(self) -> float:
        """Delivered watts per command unit before coupling, E_m V_M mu."""
        return self.e_motor * self.v_motor * self.mu

    @property
    def p_motor_ceiling(self) -> float:
        """Hard upper bound on delivered power, static_gain * y_max."""
        return self.static_gain * self.y_max


@dataclass(frozen=True)
class PlantState:
    """Delivered motor power (after lag) and total wheel power."""

    p_motor_actual: float = 0.0
    wheel_power: float = 0.0


def coupling_factor(p_human_raw: float, params: PlantParams) -> float:
    """Human-coupling factor g in (0, 1]; 1 when coupling is disabled."""
    if not params.coupling_enabled:
        return 1.0
    g0 = params.coupling_g0
    return g0 + (1.0 - g0) * (1.0 - math.exp(-p_human_raw / params.coupling_pc))


def motor_power_from_command(
    y: float, p_human_raw: float, params: PlantParams, clamp: bool = False
) -> float:
    """Static delivered motor power for command y at the given human input.

    Out-of-range commands raise ActuationError unless ``clamp`` is set, in
    which case they are clipped into [0, y_max] (logged).
    """
    if p_human_raw < 0.0 or not math.isfinite(p_human_raw):
        raise DomainError(f"p_human_raw must be >= 0, got {p_human_raw}")
    if not math.isfinite(y):
        raise DomainError(f"y must be finite, got {y}")
    if y < 0.0 or y > params.y_max:
        if not clamp:
            raise ActuationError(f"command y={y} outside [0, {params.y_max}]")
        log.debug("clamping actuator command y=%g into [0, %g]", y, params.y_max)
        y = min(max(y, 0.0), params.y_max)
    return params.static_gain * y * coupling_factor(p_human_raw, params)


def plant_tick(
    state: PlantState,
    y: float,
    p_human_raw: float,
    dt: float,
    params: PlantParams,
) -> PlantState:
    """Advance the plant one period: lag toward the static map, restore
    the wheel-power identity."""
    if dt <= 0.0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    target = motor_power_from_command(y, p_human_raw, params, clamp=True)
    if params.tau_motor == 0.0:
        p_actual = target
    else:
        p_actual = target + (state.p_motor_actual - target) * math.exp(
            -dt / params.tau_motor
        )
    return PlantState(
        p_motor_actual=p_actual,
        wheel_power=p_actual + params.e_crank * p_human_raw,
    )
