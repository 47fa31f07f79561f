"""Built-in scenarios: the four bench experiments plus extra stress cases.

Each factory returns a fresh script; tuning lives here so the CLI, the
tests, and the docs all run the same definitions.
"""

from __future__ import annotations

from dataclasses import replace

from pedelec.controller import ControllerConfig
from pedelec.harness import CertifyBand, ScenarioScript
from pedelec.humans import HumanProgram, VentilationModel
from pedelec.plant import PlantParams
from pedelec.schedule import ScheduleParams


def fig3_disturbance() -> ScenarioScript:
    """Constant reference 0.7 with a 100->150->100 W effort disturbance."""
    return ScenarioScript(
        name="fig3_disturbance",
        description=(
            "Disturbance rejection at a constant reference: cyclist effort "
            "steps from 100 W to 150 W at t=80 s and back at t=160 s, all "
            "below the effort threshold."
        ),
        duration=240.0,
        reference=((0.0, 0.7, "hold"),),
        human=HumanProgram(
            kind="step-sequence",
            segments=((0.0, 100.0), (80.0, 150.0), (160.0, 100.0)),
        ),
    )


def fig4_competitive_045() -> ScenarioScript:
    """Reference 0.45 with a hard competitive push and recovery."""
    return ScenarioScript(
        name="fig4_competitive_045",
        description=(
            "Cooperative regulation at m*=0.45, then the cyclist pushes to "
            "230 W (far beyond the threshold): assistance is withdrawn and "
            "regulation intentionally lost until the effort returns."
        ),
        duration=240.0,
        reference=((0.0, 0.45, "hold"),),
        human=HumanProgram(
            kind="step-sequence",
            segments=((0.0, 100.0), (80.0, 230.0), (160.0, 100.0)),
        ),
    )


def fig5_competitive_06() -> ScenarioScript:
    """Reference 0.6 with a competitive excursion to 260 W."""
    return ScenarioScript(
        name="fig5_competitive_06",
        description=(
            "Same shape as the m*=0.45 case at a higher reference: the "
            "threshold sits higher, so the push must be harder to compete."
        ),
        duration=240.0,
        reference=((0.0, 0.6, "hold"),),
        human=HumanProgram(
            kind="step-sequence",
            segments=((0.0, 100.0), (80.0, 260.0), (160.0, 100.0)),
        ),
    )


def fig6_timevarying() -> ScenarioScript:
    """Reference slides 0.75 -> 0.45; later a competitive excursion."""
    return ScenarioScript(
        name="fig6_timevarying",
        description=(
            "Time-varying reference: hold 0.75, smooth transition to 0.45 "
            "over t in [70, 100] s, cooperative effort of 100 W; the "
            "cyclist competes at 230 W from t=160 s and resumes cooperating "
            "at t=230 s. Certificates are checked with the analytic "
            "reference rate."
        ),
        duration=300.0,
        reference=((0.0, 0.75, "hold"), (70.0, 0.75, "smooth"), (100.0, 0.45, "hold")),
        human=HumanProgram(
            kind="step-sequence",
            segments=((0.0, 100.0), (160.0, 230.0), (230.0, 100.0)),
        ),
        certify="p2",
        certify_band=CertifyBand(p_h_min=85.0, p_h_max=105.0, m_upper=0.9),
    )


def fig7_ventilation() -> ScenarioScript:
    """Indirect ventilation-rate control through the reference."""
    return ScenarioScript(
        name="fig7_ventilation",
        description=(
            "Ventilation proxy: high effort at m*=0.75, then the reference "
            "drops to 0.45 and the cyclist eases off, lowering the "
            "breathing rate; a competitive push at t=525 s stalls the "
            "reduction until cooperation resumes at t=580 s."
        ),
        duration=700.0,
        reference=(
            (0.0, 0.75, "hold"),
            (220.0, 0.75, "smooth"),
            (260.0, 0.45, "hold"),
        ),
        human=HumanProgram(
            kind="ramp",
            segments=(
                (0.0, 120.0),
                (260.0, 120.0),
                (300.0, 70.0),
                (524.0, 70.0),
                (526.0, 180.0),
                (578.0, 180.0),
                (580.0, 70.0),
            ),
        ),
        ventilation=VentilationModel(),
    )


def sampling_instability() -> ScenarioScript:
    """Plain 1 s stepping at a low reference: the discretization artifact.

    An aggressive convergence-rate tuning (kappa = 3.7/s) passes the
    construction guard (alpha*f*dt_sub = 1.85 < 2) yet puts the plain
    explicit map outside its stability region at the 1 s period: the
    linearized per-tick amplification is about 3.5, so any perturbation of
    the 220 W equilibrium at m*=0.3 grows into a sustained large-amplitude
    cycle.  Ten substeps bring the rate-per-step down to 0.37 and the same
    loop converges monotonically.  The stiffness guard is off on purpose —
    this scenario demonstrates the artifact the guard exists to remove.
    """
    return ScenarioScript(
        name="sampling_instability",
        description=(
            "Aggressively tuned loop (kappa=3.7) at m*=0.3 with plain "
            "one-substep stepping (guard off): a 1 W effort step at t=20 s "
            "seeds a growing oscillation of the target power; rerun with "
            "n_substeps=10 to see it stabilize."
        ),
        duration=180.0,
        reference=((0.0, 0.3, "hold"),),
        human=HumanProgram(
            kind="step-sequence",
            segments=((0.0, 100.0), (20.0, 99.0)),
        ),
        controller=ControllerConfig(
            n_substeps=1,
            stiffness_guard=False,
            schedule=ScheduleParams(kappa=3.7),
        ),
    )


def pure_competitive() -> ScenarioScript:
    """Sustained heavy effort: assistance switches off asymptotically."""
    return ScenarioScript(
        name="pure_competitive",
        description=(
            "Cyclist holds 350 W against m*=0.45 for the whole run; the "
            "gain collapses along the competitive branch and the motor "
            "target decays to near zero."
        ),
        duration=180.0,
        reference=((0.0, 0.45, "hold"),),
        human=HumanProgram(kind="constant", segments=((0.0, 350.0),)),
    )


def reactive_cyclist() -> ScenarioScript:
    """Closed-loop human: pushes harder the more assistance they feel."""
    return ScenarioScript(
        name="reactive_cyclist",
        description=(
            "Reactive cyclist (base 90 W, reactivity 0.6) against m*=0.45: "
            "assistance feeds effort which crosses the threshold, cutting "
            "assistance back — the loop settles into a bounded tussle "
            "around the threshold."
        ),
        duration=240.0,
        reference=((0.0, 0.45, "hold"),),
        human=HumanProgram(
            kind="reactive",
            segments=((0.0, 90.0),),
            reactivity=0.6,
        ),
    )


BUILTINS = {
    fn().name: fn
    for fn in (
        fig3_disturbance,
        fig4_competitive_045,
        fig5_competitive_06,
        fig6_timevarying,
        fig7_ventilation,
        sampling_instability,
        pure_competitive,
        reactive_cyclist,
    )
}


def get_builtin(name: str) -> ScenarioScript:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(
            f"unknown builtin scenario {name!r}; choices: {', '.join(sorted(BUILTINS))}"
        ) from None


def list_builtins() -> list[tuple[str, str]]:
    return [(name, BUILTINS[name]().description) for name in sorted(BUILTINS)]
