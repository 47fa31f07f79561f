"""Scenario definition, closed-loop execution, logging, and plot emission.

A scenario script bundles a reference program (time-indexed setpoint
knots), a cyclist program, controller/plant configurations, and optional
certificate checking.  Runs are deterministic given the seed; the CSV log,
summary JSON, certificate JSON, and plots are emitted per run.

The ``ClosedLoop`` engine advances one tick at a time with explicit
inputs; the scripted runner, the live service, and the command-record
replay all drive this same engine, which is what makes live sessions
reproducible offline bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from pedelec._backend import BACKEND
from pedelec.certificates import (
    BoundViolation,
    CertificateConstants,
    check_trajectory,
    compute_constants,
)
from pedelec.controller import ControllerConfig, ControllerState, controller_tick
from pedelec.core import (
    MODE_COMPETITIVE,
    MODE_COOPERATIVE,
    ConfigError,
    DomainError,
    PowerSample,
    TickRecord,
    compute_ratio,
)
from pedelec.humans import HumanProgram, HumanState, VentilationModel, human_tick, ventilation_tick
from pedelec.plant import PlantParams, PlantState, coupling_factor, motor_power_from_command, plant_tick
from pedelec.schedule import f_gain, threshold

CSV_HEADER = (
    "t,m_star,m,p_human_raw,p_human_filt,p_motor_target,"
    "p_motor_actual,y,p_threshold,mode,vr"
)

KNOT_KINDS = ("hold", "smooth")

ReferenceKnot = tuple[float, float, str]


def smooth_reference(
    knots: Sequence[ReferenceKnot], t: float, duration: float | None = None
) -> float:
    """Reference value at time t.

    Each knot is (t_start, value, kind) where kind describes the segment
    running to the next knot: ``hold`` keeps the value constant, ``smooth``
    blends to the next value with a C1 cubic smoothstep.  Before the first
    knot the first value applies; after the last, the last value holds.
    """
    if t < 0.0 or (duration is not None and t > duration):
        raise DomainError(f"t={t} outside [0, {duration}]")
    if t <= knots[0][0]:
        return knots[0][1]
    for (t0, v0, kind), (t1, v1, _) in zip(knots, knots[1:]):
        if t <= t1:
            if kind == "hold":
                return v0
            s = (t - t0) / (t1 - t0)
            return v0 + (v1 - v0) * s * s * (3.0 - 2.0 * s)
    return knots[-1][1]


def reference_rate(
    knots: Sequence[ReferenceKnot], t: float, duration: float | None = None
) -> float:
    """Analytic time derivative of ``smooth_reference`` (0 on holds)."""
    if t < 0.0 or (duration is not None and t > duration):
        raise DomainError(f"t={t} outside [0, {duration}]")
    if t <= knots[0][0]:
        return 0.0
    for (t0, v0, kind), (t1, v1, _) in zip(knots, knots[1:]):
        if t <= t1:
            if kind == "hold":
                return 0.0
            s = (t - t0) / (t1 - t0)
            return (v1 - v0) * 6.0 * s * (1.0 - s) / (t1 - t0)
    return 0.0


@dataclass(frozen=True)
class CertifyBand:
    """Operating band over which certificate constants are computed."""

    p_h_min: float
    p_h_max: float
    m_upper: float = 0.95
    grid_n: int = 256


@dataclass(frozen=True)
class ScenarioScript:
    """Everything needed to reproduce one closed-loop run."""

    name: str
    duration: float
    reference: tuple[ReferenceKnot, ...]
    human: HumanProgram = field(default_factory=HumanProgram)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    ventilation: VentilationModel | None = None
    certify: str = "off"  # off | p1 | p2
    certify_band: CertifyBand | None = None
    seed: int = 0
    p_motor_init: float | None = None
    description: str = ""

    def __post_init__(self) -> None:
        if self.duration <= 0.0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if not self.reference:
            raise ConfigError("reference program needs at least one knot")
        eta = self.controller.schedule.eta
        times = [k[0] for k in self.reference]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("reference knot times must be strictly increasing")
        for tk, val, kind in self.reference:
            if kind not in KNOT_KINDS:
                raise ConfigError(f"unknown knot kind {kind!r}")
            if not eta <= val <= 1.0:
                raise ConfigError(
                    f"reference knot value {val} outside [{eta}, 1]"
                )
        if self.certify not in ("off", "p1", "p2"):
            raise ConfigError(f"certify must be off/p1/p2, got {self.certify}")
        if self.certify != "off" and self.certify_band is None:
            raise ConfigError("certify enabled but no certify_band given")
        if abs(self.controller.e_crank - self.plant.e_crank) > 1e-12:
            raise ConfigError(
                "controller.e_crank must match plant.e_crank "
                f"({self.controller.e_crank} vs {self.plant.e_crank})"
            )
        if abs(self.controller.y_max - self.plant.y_max) > 1e-12:
            raise ConfigError(
                "controller.y_max must match plant.y_max "
                f"({self.controller.y_max} vs {self.plant.y_max})"
            )
        if round(self.duration / self.controller.dt_sample) < 1:
            raise ConfigError("duration must cover at least one sampling period")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.controller.dt_sample))


@dataclass
class RunResult:
    """Log plus derived artifacts of one scenario run."""

    script: ScenarioScript
    log: list[TickRecord]
    constants: CertificateConstants | None
    violations: list[BoundViolation]
    summary: dict


class ClosedLoop:
    """Mutable closed-loop state stepped one sampling period at a time.

    The constructor settles the loop at the initial inputs: filters start
    at their first observations and the target power starts at the
    schedule equilibrium unless the script pins it.
    """

    def __init__(self, script: ScenarioScript, raw_human0: float, m_star0: float):
        self.script = script
        self.cfg = script.controller
        self.plant_params = script.plant
        self.t = 0.0
        sch = self.cfg.schedule

        filt_h0 = self.cfg.e_crank * raw_human0
        if script.p_motor_init is not None:
            target0 = script.p_motor_init
        else:
            target0 = math.sqrt(f_gain(filt_h0, m_star0, sch))
        gain0 = self.plant_params.static_gain * coupling_factor(
            raw_human0, self.plant_params
        )
        y0 = min(max(target0 / gain0, 0.0), self.cfg.y_max) if gain0 > 0.0 else 0.0
        actual0 = motor_power_from_command(y0, raw_human0, self.plant_params)
        self.plant_state = PlantState(
            p_motor_actual=actual0,
            wheel_power=actual0 + self.plant_params.e_crank * raw_human0,
        )
        self.ctrl = ControllerState(
            p_motor_target=target0,
            y_control=y0,
            filt_human=filt_h0,
            filt_motor=actual0,
        )
        self.vmodel = (
            replace(script.ventilation) if script.ventilation is not None else None
        )
        p_thr = threshold(m_star0, sch)
        sample = PowerSample(
            t=0.0,
            p_human_raw=raw_human0,
            p_human_out=filt_h0,
            p_motor_out=actual0,
            ratio_m=compute_ratio(filt_h0, actual0, self.cfg.idle_ratio),
        )
        self._initial = TickRecord(
            sample=sample,
            m_star=m_star0,
            p_motor_target=target0,
            p_motor_actual=actual0,
            y_control=y0,
            p_threshold=p_thr,
            mode_flag=MODE_COMPETITIVE if filt_h0 > p_thr else MODE_COOPERATIVE,
            ventilation_rate=self.vmodel.vr_state if self.vmodel else 0.0,
        )

    def initial_record(self) -> TickRecord:
        return self._initial

    @property
    def assist_observed(self) -> float:
        """Delivered motor power the cyclist currently feels."""
        return self.plant_state.p_motor_actual

    def step(self, raw_human: float, m_star: float) -> TickRecord:
        """Advance plant, controller, and ventilation by one period."""
        self.t += self.cfg.dt_sample
        self.plant_state = plant_tick(
            self.plant_state, self.ctrl.y_control, raw_human,
            self.cfg.dt_sample, self.plant_params,
        )
        self.ctrl, rec = controller_tick(
            self.ctrl, raw_human, self.plant_state.p_motor_actual,
            m_star, self.cfg, t=self.t,
        )
        if self.vmodel is not None:
            vr = ventilation_tick(self.vmodel, raw_human, self.cfg.dt_sample)
            rec = replace(rec, ventilation_rate=vr)
        return rec


def run_scenario(script: ScenarioScript) -> RunResult:
    """Deterministic closed-loop run of one scenario."""
    hstate = HumanState.from_seed(script.seed)
    duration = script.duration
    m0 = smooth_reference(script.reference, 0.0, duration)
    raw0 = human_tick(script.human, 0.0, 0.0, hstate)
    loop = ClosedLoop(script, raw0, m0)

    log = [loop.initial_record()]
    cap_hits = 1 if raw0 >= script.human.p_human_max else 0
    for k in range(1, script.n_ticks + 1):
        t = k * script.controller.dt_sample
        m_star = smooth_reference(script.reference, t, duration)
        raw = human_tick(script.human, t, loop.assist_observed, hstate)
        if raw >= script.human.p_human_max:
            cap_hits += 1
        rec = loop.step(raw, m_star)
        log.append(rec)
        if rec.fault:
            break

    constants: CertificateConstants | None = None
    violations: list[BoundViolation] = []
    counters: dict = {}
    if script.certify != "off":
        band = script.certify_band
        constants = compute_constants(
            script.controller.schedule,
            band.p_h_min,
            band.p_h_max,
            p_order=1 if script.certify == "p1" else 2,
            grid_n=band.grid_n,
            m_upper=band.m_upper,
        )
        m_dot = [
            reference_rate(script.reference, r.sample.t, duration) for r in log
        ]
        violations = check_trajectory(
            log, constants, m_star_dot=m_dot, counters=counters
        )

    summary = _summarize(script, log, violations, cap_hits, counters)
    return RunResult(script, log, constants, violations, summary)


def _summarize(
    script: ScenarioScript,
    log: list[TickRecord],
    violations: list[BoundViolation],
    cap_hits: int,
    counters: dict,
) -> dict:
    phases = []
    start = 0
    for i in range(1, len(log) + 1):
        if i == len(log) or log[i].mode_flag != log[start].mode_flag:
            chunk = log[start:i]
            errs = [abs(r.sample.ratio_m - r.m_star) for r in chunk]
            phases.append(
                {
                    "mode": log[start].mode_flag,
                    "t_start": chunk[0].sample.t,
                    "t_end": chunk[-1].sample.t,
                    "max_abs_err": max(errs),
                    "mean_abs_err": sum(errs) / len(errs),
                }
            )
            start = i
    coop_errs = [
        abs(r.sample.ratio_m - r.m_star)
        for r in log
        if r.mode_flag == MODE_COOPERATIVE
    ]
    faulted = any(r.fault for r in log)
    return {
        "scenario": script.name,
        "backend": BACKEND,
        "seed": script.seed,
        "dt_sample": script.controller.dt_sample,
        "ticks": len(log),
        "faulted": faulted,
        "fault_t": next((r.sample.t for r in log if r.fault), None),
        "phases": phases,
        "max_abs_err_cooperative": max(coop_errs) if coop_errs else None,
        "mean_abs_err_cooperative": (
            sum(coop_errs) / len(coop_errs) if coop_errs else None
        ),
        "competitive_ticks": sum(
            1 for r in log if r.mode_flag == MODE_COMPETITIVE
        ),
        "idle_ticks": sum(1 for r in log if r.idle),
        "human_cap_hits": cap_hits,
        "certify_skipped": counters or None,
        "violation_count": len(violations),
    }


def _fmt(x: float) -> str:
    # shortest representation that round-trips exactly
    return repr(float(x))


def log_to_csv(log: Sequence[TickRecord]) -> str:
    """Render a tick log as the canonical CSV document."""
    lines = [CSV_HEADER]
    for r in log:
        s = r.sample
        lines.append(
            ",".join(
                (
                    _fmt(s.t),
                    _fmt(r.m_star),
                    _fmt(s.ratio_m),
                    _fmt(s.p_human_raw),
                    _fmt(s.p_human_out),
                    _fmt(r.p_motor_target),
                    _fmt(r.p_motor_actual),
                    _fmt(r.y_control),
                    _fmt(r.p_threshold),
                    r.mode_flag,
                    _fmt(r.ventilation_rate),
                )
            )
        )
    return "\n".join(lines) + "\n"


def log_from_csv(text: str) -> list[TickRecord]:
    """Parse a canonical CSV document back into tick records."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise DomainError("CSV header does not match the canonical log schema")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 11:
            raise DomainError(f"malformed CSV row: {ln!r}")
        (t, m_star, m, raw, filt_h, target, actual, y, thr, mode, vr) = parts
        sample = PowerSample(
            t=float(t),
            p_human_raw=float(raw),
            p_human_out=float(filt_h),
            p_motor_out=0.0,
            ratio_m=float(m),
        )
        # filtered motor power is recoverable from the ratio when nonzero
        if float(m) > 0.0:
            p_motor_out = float(filt_h) * (1.0 - float(m)) / float(m)
        else:
            p_motor_out = 0.0
        sample = replace(sample, p_motor_out=max(p_motor_out, 0.0))
        out.append(
            TickRecord(
                sample=sample,
                m_star=float(m_star),
                p_motor_target=float(target),
                p_motor_actual=float(actual),
                y_control=float(y),
                p_threshold=float(thr),
                mode_flag=mode,
                ventilation_rate=float(vr),
            )
        )
    return out


def emit_outputs(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """Write CSV log, summary JSON, certificate artifacts, and plots.

    Returns the mapping of artifact name to path.  Re-running the same
    scenario with the same seed produces byte-identical CSV output.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = result.script.name
    paths: dict[str, Path] = {}

    csv_path = out / f"{name}_log.csv"
    csv_path.write_text(log_to_csv(result.log))
    paths["log"] = csv_path

    summary_path = out / f"{name}_summary.json"
    summary_path.write_text(json.dumps(result.summary, indent=2, sort_keys=True))
    paths["summary"] = summary_path

    if result.constants is not None:
        const_path = out / f"{name}_certificates.json"
        const_path.write_text(
            json.dumps(result.constants.to_dict(), indent=2, sort_keys=True)
        )
        paths["certificates"] = const_path
        viol_path = out / f"{name}_violations.csv"
        viol_lines = ["t,bound_name,lhs,rhs,margin"]
        for v in result.violations:
            viol_lines.append(
                f"{_fmt(v.t)},{v.bound_name},{_fmt(v.lhs)},{_fmt(v.rhs)},{_fmt(v.margin)}"
            )
        viol_path.write_text("\n".join(viol_lines) + "\n")
        paths["violations"] = viol_path

    paths.update(_emit_plots(result, out))
    return paths


def _emit_plots(result: RunResult, out: Path) -> dict[str, Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    name = result.script.name
    log = result.log
    t = [r.sample.t for r in log]
    m = [r.sample.ratio_m for r in log]
    m_star = [r.m_star for r in log]
    raw = [r.sample.p_human_raw for r in log]
    filt_h = [r.sample.p_human_out for r in log]
    target = [r.p_motor_target for r in log]
    actual = [r.p_motor_actual for r in log]
    thr = [r.p_threshold for r in log]
    paths: dict[str, Path] = {}

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, m_star, "k--", label="m*")
    ax.plot(t, m, "b-", label="m")
    for r0, r1 in zip(log, log[1:]):
        if r0.mode_flag != r1.mode_flag:
            ax.axvline(r1.sample.t, color="0.8", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("power ratio")
    ax.set_ylim(0.0, 1.05)
    ax.legend(loc="best")
    ax.set_title(f"{name}: ratio tracking")
    fig.tight_layout()
    p = out / f"{name}_tracking.png"
    fig.savefig(p, dpi=110)
    plt.close(fig)
    paths["plot_tracking"] = p

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, filt_h, "g-", label="human (filtered)")
    ax.plot(t, raw, "g:", alpha=0.6, label="human (raw)")
    ax.plot(t, target, "r-", label="motor target")
    ax.plot(t, actual, "r:", alpha=0.7, label="motor actual")
    ax.plot(t, thr, "k--", lw=1.0, label="effort threshold")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("power [W]")
    ax.legend(loc="best")
    ax.set_title(f"{name}: powers")
    fig.tight_layout()
    p = out / f"{name}_power.png"
    fig.savefig(p, dpi=110)
    plt.close(fig)
    paths["plot_power"] = p

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(filt_h, target, s=8, c=t, cmap="viridis")
    ax.set_xlim(0.0, max(filt_h) * 1.05 if max(filt_h) > 0 else 1.0)
    ax.set_xlabel("human power (filtered) [W]")
    ax.set_ylabel("motor target power [W]")
    ax.set_title(f"{name}: motor vs human power")
    fig.tight_layout()
    p = out / f"{name}_scatter.png"
    fig.savefig(p, dpi=110)
    plt.close(fig)
    paths["plot_scatter"] = p

    if result.script.ventilation is not None:
        vr = [r.ventilation_rate for r in log]
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
        ax1.plot(t, m_star, "k--", label="m*")
        ax1.plot(t, m, "b-", label="m")
        ax1.set_ylabel("ratio")
        ax1.legend(loc="best")
        ax2.plot(t, vr, "m-", label="ventilation rate")
        ax2.set_ylabel("VR [L/min]")
        ax2.set_xlabel("t [s]")
        ax2.legend(loc="best")
        fig.suptitle(f"{name}: ventilation response")
        fig.tight_layout()
        p = out / f"{name}_ventilation.png"
        fig.savefig(p, dpi=110)
        plt.close(fig)
        paths["plot_ventilation"] = p

    return paths


def replay_inputs(
    script: ScenarioScript,
    human_power: Sequence[float],
    m_star: Sequence[float],
) -> list[TickRecord]:
    """Replay explicit per-tick inputs through the closed loop.

    ``human_power[k]`` and ``m_star[k]`` are the inputs applied at tick k
    (k >= 1); index 0 sets the initial conditions.  Used to reproduce live
    sessions from their command records.
    """
    if len(human_power) != len(m_star) or not human_power:
        raise DomainError("input sequences must be equal-length and non-empty")
    loop = ClosedLoop(script, float(human_power[0]), float(m_star[0]))
    log = [loop.initial_record()]
    for k in range(1, len(human_power)):
        rec = loop.step(float(human_power[k]), float(m_star[k]))
        log.append(rec)
        if rec.fault:
            break
    return log
