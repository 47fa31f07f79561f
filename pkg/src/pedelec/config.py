"""Scenario config files: one TOML document per scenario.

Sections mirror the parameter types ([scenario], [reference], [human],
[controller], [schedule], [plant], [ventilation], [certify]); every field
is optional and defaults to the library defaults, so a config only needs
to state what it changes.
"""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from pedelec.controller import ControllerConfig
from pedelec.core import ConfigError
from pedelec.harness import CertifyBand, ScenarioScript
from pedelec.humans import HumanProgram, VentilationModel
from pedelec.plant import PlantParams
from pedelec.schedule import ScheduleParams


def load_scenario(path: str | Path) -> ScenarioScript:
    """Build a scenario script from a TOML config file."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return scenario_from_dict(doc, default_name=Path(path).stem)


def scenario_from_dict(doc: dict, default_name: str = "scenario") -> ScenarioScript:
    meta = doc.get("scenario", {})
    sched = ScheduleParams(**doc.get("schedule", {}))

    ctrl_kwargs = dict(doc.get("controller", {}))
    ctrl = ControllerConfig(schedule=sched, **ctrl_kwargs)

    plant = PlantParams(**doc.get("plant", {}))

    human_kwargs = dict(doc.get("human", {}))
    if "segments" in human_kwargs:
        human_kwargs["segments"] = tuple(
            (float(t), float(v)) for t, v in human_kwargs["segments"]
        )
    human = HumanProgram(**human_kwargs)

    ref_section = doc.get("reference", {})
    knots = ref_section.get("knots", [[0.0, 0.7, "hold"]])
    reference = tuple((float(t), float(v), str(kind)) for t, v, kind in knots)

    vent_kwargs = dict(doc.get("ventilation", {}))
    enabled = vent_kwargs.pop("enabled", bool(vent_kwargs))
    ventilation = VentilationModel(**vent_kwargs) if enabled else None

    certify = str(meta.get("certify", "off"))
    cert_section = doc.get("certify", None)
    band = CertifyBand(**cert_section) if cert_section else None
    if certify != "off" and band is None:
        raise ConfigError("scenario.certify is enabled but [certify] is missing")

    return ScenarioScript(
        name=str(meta.get("name", default_name)),
        description=str(meta.get("description", "")),
        duration=float(meta.get("duration", 120.0)),
        reference=reference,
        human=human,
        controller=ctrl,
        plant=plant,
        ventilation=ventilation,
        certify=certify,
        certify_band=band,
        seed=int(meta.get("seed", 0)),
        p_motor_init=(
            float(meta["p_motor_init"]) if "p_motor_init" in meta else None
        ),
    )


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot render {type(v)} as TOML")


def _toml_section(name: str, fields: dict) -> str:
    lines = [f"[{name}]"]
    for key, value in fields.items():
        if value is None:
            continue
        lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines)


def dump_scenario(script: ScenarioScript) -> str:
    """Render a scenario script as a TOML config document."""
    meta = {
        "name": script.name,
        "description": script.description,
        "duration": script.duration,
        "seed": script.seed,
        "certify": script.certify,
        "p_motor_init": script.p_motor_init,
    }
    ctrl = asdict(script.controller)
    sched = ctrl.pop("schedule")
    human = asdict(script.human)
    human["segments"] = [list(seg) for seg in script.human.segments]
    sections = [
        _toml_section("scenario", meta),
        _toml_section("reference", {"knots": [list(k) for k in script.reference]}),
        _toml_section("human", human),
        _toml_section("controller", ctrl),
        _toml_section("schedule", sched),
        _toml_section("plant", asdict(script.plant)),
    ]
    if script.ventilation is not None:
        vent = asdict(script.ventilation)
        vent.pop("vr_state", None)
        vent = {"enabled": True, **vent}
        sections.append(_toml_section("ventilation", vent))
    if script.certify_band is not None:
        sections.append(_toml_section("certify", asdict(script.certify_band)))
    return "\n\n".join(sections) + "\n"
