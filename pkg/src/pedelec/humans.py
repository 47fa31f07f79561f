"""Scripted cyclist behavior and the ventilation-rate proxy.

Programs generate the raw pedal power driving a run.  The reactive kind
models the uncooperative cyclist who pushes harder when assisted; the
others are open-loop scripts.  Ventilation is a first-order linear proxy:
steady breathing rate is affine in steady effort, with a physiological
lag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from pedelec.core import ConfigError

PROGRAM_KINDS = ("constant", "step-sequence", "ramp", "band-noise", "reactive")


@dataclass(frozen=True)
class HumanProgram:
    """Cyclist effort script.

    ``segments`` is a sequence of (t_start, level) knots.  constant uses
    the first level only; step-sequence holds each level until the next
    knot; ramp interpolates linearly between knots; band-noise is a held
    base plus band-limited noise; reactive adds reactivity times the
    observed assistance to the held base, capped at p_human_max.
    """

    kind: str = "constant"
    segments: tuple[tuple[float, float], ...] = ((0.0, 100.0),)
    reactivity: float = 0.0
    noise_std: float = 0.0
    noise_tau: float = 5.0
    seed: int = 0
    p_human_max: float = 400.0

    def __post_init__(self) -> None:
        if self.kind not in PROGRAM_KINDS:
            raise ConfigError(f"unknown program kind {self.kind!r}")
        if not self.segments:
            raise ConfigError("segments must not be empty")
        times = [t for t, _ in self.segments]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("segment times must be strictly increasing")
        if any(level < 0.0 for _, level in self.segments):
            raise ConfigError("segment levels must be >= 0")
        if self.reactivity < 0.0:
            raise ConfigError(f"reactivity must be >= 0, got {self.reactivity}")
        if self.noise_std < 0.0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if not self.noise_tau > 0.0:
            raise ConfigError(f"noise_tau must be > 0, got {self.noise_tau}")
        if not self.p_human_max > 0.0:
            raise ConfigError(f"p_human_max must be > 0, got {self.p_human_max}")


@dataclass
class HumanState:
    """Per-run mutable state: RNG and the noise filter memory."""

    rng: np.random.Generator
    noise_x: float = 0.0
    last_t: float | None = None

    @classmethod
    def from_seed(cls, seed: int) -> "HumanState":
        return cls(rng=np.random.default_rng(seed))


def _scripted_level(program: HumanProgram, t: float) -> float:
    segs = program.segments
    if program.kind == "constant":
        return segs[0][1]
    if t <= segs[0][0]:
        return segs[0][1]
    if program.kind == "ramp":
        for (t0, v0), (t1, v1) in zip(segs, segs[1:]):
            if t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        return segs[-1][1]
    # hold semantics for step-sequence, band-noise, reactive bases
    level = segs[0][1]
    for t0, v0 in segs:
        if t >= t0:
            level = v0
        else:
            break
    return level


def human_tick(
    program: HumanProgram,
    t: float,
    assist_observed: float,
    rng_state: HumanState,
) -> float:
    """Raw pedal power at time t, in [0, p_human_max].

    ``assist_observed`` is the delivered motor power the cyclist feels
    (previous tick); it only matters for the reactive kind.
    """
    level = _scripted_level(program, t)
    if program.kind == "reactive":
        level = level + program.reactivity * max(assist_observed, 0.0)
    if program.noise_std > 0.0:
        dt = 0.0 if rng_state.last_t is None else max(t - rng_state.last_t, 0.0)
        a = math.exp(-dt / program.noise_tau) if dt > 0.0 else 1.0
        w = rng_state.rng.standard_normal()
        # unit stationary variance regardless of dt
        rng_state.noise_x = a * rng_state.noise_x + math.sqrt(max(1.0 - a * a, 0.0)) * w
        level = level + program.noise_std * rng_state.noise_x
    rng_state.last_t = t
    return min(max(level, 0.0), program.p_human_max)


@dataclass
class VentilationModel:
    """First-order ventilation-rate proxy, in liters/minute.

    Steady state is vr_rest + k_vr * p_human; tau_vr sets the lag of the
    breathing response.
    """

    vr_rest: float = 12.0
    k_vr: float = 0.3
    tau_vr: float = 30.0
    vr_state: float = field(default=math.nan)

    def __post_init__(self) -> None:
        for name in ("vr_rest", "k_vr", "tau_vr"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if math.isnan(self.vr_state):
            self.vr_state = self.vr_rest


def ventilation_tick(model: VentilationModel, p_human_raw: float, dt: float) -> float:
    """Advance the ventilation state one period and return it."""
    if dt <= 0.0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    target = model.vr_rest + model.k_vr * max(p_human_raw, 0.0)
    model.vr_state = model.vr_state + (dt / model.tau_vr) * (target - model.vr_state)
    return model.vr_state
