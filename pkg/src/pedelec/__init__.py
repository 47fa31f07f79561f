"""Power-split assist controller: simulator, certificates, live service.

A desk-scale closed loop for a pedal-assist drivetrain.  The controller
regulates the fraction of total power supplied by the rider using a
gain-scheduled pitchfork-normal-form law: it cooperates (assists toward
the reference split) while effort stays below a scheduled threshold and
competes (withdraws assistance) above it.  Certificates bound the target
power from above and below and verify tracking estimates along any
recorded trajectory.
"""

from pedelec._backend import BACKEND, available_backends
from pedelec.certificates import (
    BoundViolation,
    CertificateConstants,
    check_trajectory,
    compute_constants,
)
from pedelec.controller import (
    ControllerConfig,
    ControllerState,
    controller_tick,
    filter_power,
    step_bifurcation,
    step_integral_loop,
    step_integral_loop_ratio,
)
from pedelec.core import (
    MODE_COMPETITIVE,
    MODE_COOPERATIVE,
    ActuationError,
    ConfigError,
    DomainError,
    PowerSample,
    Reference,
    RefinementError,
    TickRecord,
    compute_ratio,
)
from pedelec.harness import (
    CSV_HEADER,
    CertifyBand,
    ClosedLoop,
    RunResult,
    ScenarioScript,
    emit_outputs,
    log_from_csv,
    log_to_csv,
    reference_rate,
    replay_inputs,
    run_scenario,
    smooth_reference,
)
from pedelec.humans import (
    HumanProgram,
    HumanState,
    VentilationModel,
    human_tick,
    ventilation_tick,
)
from pedelec.plant import (
    PlantParams,
    PlantState,
    coupling_factor,
    motor_power_from_command,
    plant_tick,
)
from pedelec.schedule import (
    ScheduleEval,
    ScheduleParams,
    alpha_gain,
    evaluate,
    f_competitive,
    f_cooperative,
    f_gain,
    f_partials,
    threshold,
)
from pedelec.scenarios import BUILTINS, get_builtin, list_builtins

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "available_backends",
    "BoundViolation",
    "CertificateConstants",
    "check_trajectory",
    "compute_constants",
    "ControllerConfig",
    "ControllerState",
    "controller_tick",
    "filter_power",
    "step_bifurcation",
    "step_integral_loop",
    "step_integral_loop_ratio",
    "MODE_COMPETITIVE",
    "MODE_COOPERATIVE",
    "ActuationError",
    "ConfigError",
    "DomainError",
    "PowerSample",
    "Reference",
    "RefinementError",
    "TickRecord",
    "compute_ratio",
    "CSV_HEADER",
    "CertifyBand",
    "ClosedLoop",
    "RunResult",
    "ScenarioScript",
    "emit_outputs",
    "log_from_csv",
    "log_to_csv",
    "reference_rate",
    "replay_inputs",
    "run_scenario",
    "smooth_reference",
    "HumanProgram",
    "HumanState",
    "VentilationModel",
    "human_tick",
    "ventilation_tick",
    "PlantParams",
    "PlantState",
    "coupling_factor",
    "motor_power_from_command",
    "plant_tick",
    "ScheduleEval",
    "ScheduleParams",
    "alpha_gain",
    "evaluate",
    "f_competitive",
    "f_cooperative",
    "f_gain",
    "f_partials",
    "threshold",
    "BUILTINS",
    "get_builtin",
    "list_builtins",
    "__version__",
]
