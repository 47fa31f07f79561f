"""Closed-loop control engine.

Per sampling period the controller filters the raw power measurements,
advances the pitchfork target-power state under zero-order hold, and runs
the discrete integral loop that drives the motor command toward the
target.  The tick function is pure: state in, state out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from pedelec._backend import kernels
from pedelec.core import (
    MODE_COMPETITIVE,
    MODE_COOPERATIVE,
    ConfigError,
    DomainError,
    PowerSample,
    TickRecord,
    compute_ratio,
)
from pedelec.schedule import ScheduleParams, threshold


@dataclass(frozen=True)
class ControllerState:
    """Controller memory carried between ticks.

    ``fault`` marks a reset-to-safe transition (non-finite state detected);
    it is cleared once the fault tick has been emitted.
    """

    p_motor_target: float = 0.0
    y_control: float = 0.0
    filt_human: float = 0.0
    filt_motor: float = 0.0
    fault: bool = False


@dataclass(frozen=True)
class ControllerConfig:
    """Sampling, filtering, and loop-gain configuration.

    ``n_substeps`` fixed-step 4th-order substeps integrate the target-power
    state inside each sampling period.  ``stiffness_guard`` additionally
    splits a substep whenever the local rate bound would leave the explicit
    scheme's stability region (deep competitive decays); disable it to
    reproduce plain fixed stepping.
    """

    dt_sample: float = 1.0
    n_substeps: int = 10
    k_int: float = 0.1
    tau_filter: float = 4.0
    y_max: float = 20.0
    e_crank: float = 0.95
    idle_ratio: float = 1.0
    stiffness_guard: bool = True
    integral_mode: str = "power"  # power | ratio
    k_int_ratio: float = 10.0
    schedule: ScheduleParams = field(default_factory=ScheduleParams)

    def __post_init__(self) -> None:
        for name in ("dt_sample", "k_int", "tau_filter", "y_max"):
            if not getattr(self, name) > 0.0 or not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be positive and finite")
        if not isinstance(self.n_substeps, int) or self.n_substeps < 1:
            raise ConfigError(f"n_substeps must be an integer >= 1, got {self.n_substeps}")
        if not 0.0 < self.e_crank < 1.0:
            raise ConfigError(f"e_crank must be in (0, 1), got {self.e_crank}")
        if self.integral_mode not in ("power", "ratio"):
            raise ConfigError(
                f"integral_mode must be 'power' or 'ratio', got {self.integral_mode}"
            )
        if not self.k_int_ratio > 0.0:
            raise ConfigError(f"k_int_ratio must be > 0, got {self.k_int_ratio}")
        # alpha*f never exceeds kappa/2, so this bounds the linear growth
        # rate per substep for the explicit scheme.
        dt_sub = self.dt_sample / self.n_substeps
        if 0.5 * self.schedule.kappa * dt_sub >= 2.0:
            raise ConfigError(
                f"substep {dt_sub} s too large for kappa={self.schedule.kappa}: "
                "alpha*f*dt_sub must stay below 2"
            )


def filter_power(state: float, raw: float, dt: float, tau: float) -> float:
    """Single-pole exponential moving average update.

    Output lies between the previous state and the new measurement, so a
    signal confined to a band keeps its filtered version in the band.
    """
    if dt <= 0.0 or tau <= 0.0:
        raise ConfigError(f"dt and tau must be > 0, got dt={dt}, tau={tau}")
    if raw < 0.0 or not math.isfinite(raw):
        raise DomainError(f"raw power must be >= 0 and finite, got {raw}")
    return state + (dt / (tau + dt)) * (raw - state)


def step_bifurcation(
    state: ControllerState,
    p_human_filtered: float,
    m_star: float,
    cfg: ControllerConfig,
) -> ControllerState:
    """Advance the target motor power over one sampling period.

    Inputs are held constant over the tick.  The result is non-negative;
    a non-finite state resets to the safe value 0 (motor off).
    """
    if p_human_filtered < 0.0 or not math.isfinite(p_human_filtered):
        raise DomainError(f"p_human_filtered must be >= 0, got {p_human_filtered}")
    sch = cfg.schedule
    if not sch.eta <= m_star <= 1.0:
        raise DomainError(f"m_star must be in [{sch.eta}, 1], got {m_star}")
    if not math.isfinite(state.p_motor_target):
        return replace(state, p_motor_target=0.0, fault=True)
    p_new = kernels.bifurcation_step(
        state.p_motor_target, p_human_filtered, m_star,
        cfg.dt_sample, cfg.n_substeps, cfg.stiffness_guard,
        sch.kappa, sch.epsilon_t, sch.eta, sch.gamma_decay, sch.pt_min, sch.pt_max,
    )
    if not math.isfinite(p_new):
        return replace(state, p_motor_target=0.0, fault=True)
    return replace(state, p_motor_target=p_new)


def step_integral_loop(
    state: ControllerState, p_motor_actual: float, cfg: ControllerConfig
) -> ControllerState:
    """Discrete integral update of the motor command on the power error.

    The command increases when delivered power is below target and is
    clamped to [0, y_max] (clamping doubles as anti-windup).
    """
    if not math.isfinite(p_motor_actual) or p_motor_actual < 0.0:
        raise DomainError(f"p_motor_actual must be >= 0, got {p_motor_actual}")
    y = state.y_control + cfg.k_int * (state.p_motor_target - p_motor_actual)
    y = min(max(y, 0.0), cfg.y_max)
    return replace(state, y_control=y)


def step_integral_loop_ratio(
    state: ControllerState, ratio_m: float, m_star: float, cfg: ControllerConfig
) -> ControllerState:
    """Alternative integral update on the ratio error.

    Drives the command so the measured split approaches the reference
    directly: more human share than desired means more assistance.  The
    power-error loop is the default; this variant is selected with
    integral_mode = "ratio".
    """
    if not 0.0 <= ratio_m <= 1.0:
        raise DomainError(f"ratio_m must be in [0, 1], got {ratio_m}")
    y = state.y_control + cfg.k_int_ratio * (ratio_m - m_star)
    y = min(max(y, 0.0), cfg.y_max)
    return replace(state, y_control=y)


def _fault_tick(
    state: ControllerState, t: float, m_star: float, cfg: ControllerConfig
) -> tuple[ControllerState, TickRecord]:
    """Motor-safe-off record emitted when any signal turns non-finite."""
    safe = ControllerState(
        p_motor_target=0.0,
        y_control=0.0,
        filt_human=state.filt_human if math.isfinite(state.filt_human) else 0.0,
        filt_motor=state.filt_motor if math.isfinite(state.filt_motor) else 0.0,
        fault=False,
    )
    p_thr = threshold(m_star, cfg.schedule)
    sample = PowerSample(
        t=t,
        p_human_raw=0.0,
        p_human_out=safe.filt_human,
        p_motor_out=safe.filt_motor,
        ratio_m=compute_ratio(safe.filt_human, safe.filt_motor, cfg.idle_ratio),
    )
    record = TickRecord(
        sample=sample,
        m_star=m_star,
        p_motor_target=0.0,
        p_motor_actual=0.0,
        y_control=0.0,
        p_threshold=p_thr,
        mode_flag=MODE_COMPETITIVE if safe.filt_human > p_thr else MODE_COOPERATIVE,
        fault=True,
    )
    return safe, record


def controller_tick(
    state: ControllerState,
    raw_human: float,
    p_motor_actual: float,
    m_star: float,
    cfg: ControllerConfig,
    t: float = 0.0,
) -> tuple[ControllerState, TickRecord]:
    """One full controller pass: filters, pitchfork step, integral loop.

    Returns the successor state and the tick record.  Non-finite inputs
    produce a fault tick with the motor commanded off.
    """
    inputs_ok = (
        math.isfinite(raw_human)
        and raw_human >= 0.0
        and math.isfinite(p_motor_actual)
        and p_motor_actual >= 0.0
        and math.isfinite(state.p_motor_target)
        and math.isfinite(state.y_control)
        and math.isfinite(state.filt_human)
        and math.isfinite(state.filt_motor)
    )
    if not inputs_ok:
        return _fault_tick(state, t, m_star, cfg)

    filt_h = filter_power(
        state.filt_human, cfg.e_crank * raw_human, cfg.dt_sample, cfg.tau_filter
    )
    filt_m = filter_power(
        state.filt_motor, p_motor_actual, cfg.dt_sample, cfg.tau_filter
    )
    state = replace(state, filt_human=filt_h, filt_motor=filt_m)
    state = step_bifurcation(state, filt_h, m_star, cfg)
    if state.fault:
        return _fault_tick(state, t, m_star, cfg)
    ratio = compute_ratio(filt_h, filt_m, cfg.idle_ratio)
    if cfg.integral_mode == "ratio":
        state = step_integral_loop_ratio(state, ratio, m_star, cfg)
    else:
        state = step_integral_loop(state, p_motor_actual, cfg)

    p_thr = threshold(m_star, cfg.schedule)
    sample = PowerSample(
        t=t,
        p_human_raw=raw_human,
        p_human_out=filt_h,
        p_motor_out=filt_m,
        ratio_m=ratio,
    )
    record = TickRecord(
        sample=sample,
        m_star=m_star,
        p_motor_target=state.p_motor_target,
        p_motor_actual=p_motor_actual,
        y_control=state.y_control,
        p_threshold=p_thr,
        mode_flag=MODE_COMPETITIVE if filt_h > p_thr else MODE_COOPERATIVE,
    )
    return state, record
