"""Gain schedule: the assist gain f, its convergence-rate schedule alpha,
the effort threshold P_T, and analytic partial derivatives.

The controller's target motor power follows the supercritical-pitchfork
normal form ``dP/dt = alpha * (f P - P^3)`` whose stable equilibrium is
``sqrt(f)``.  Below the effort threshold the gain is chosen so that the
equilibrium power split equals the reference exactly (cooperative branch);
above it the gain decays exponentially so assistance is withdrawn
(competitive branch).  Both branches meet with matching value and slope,
so f is C1 in both arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from pedelec._backend import kernels
from pedelec.core import ConfigError, DomainError


@dataclass(frozen=True)
class ScheduleParams:
    """Controller tuning constants.

    eta          lower bound of the reference band (0, 1)
    gamma_decay  exponential decay rate of the competitive branch [1/W]
    kappa        target convergence rate near equilibrium [1/s]
    epsilon_t    floor that caps the rate schedule alpha [W^2]
    pt_min       effort threshold at m_star = eta [W]
    pt_max       effort threshold at m_star = 1 [W]
    """

    eta: float = 0.2
    gamma_decay: float = 0.02
    kappa: float = 0.5
    epsilon_t: float = 25.0
    pt_min: float = 80.0
    pt_max: float = 250.0

    def __post_init__(self) -> None:
        if not 0.0 < self.eta < 1.0:
            raise ConfigError(f"eta must be in (0, 1), got {self.eta}")
        for name in ("gamma_decay", "kappa", "epsilon_t", "pt_min"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.pt_max > self.pt_min:
            raise ConfigError(
                f"pt_max ({self.pt_max}) must exceed pt_min ({self.pt_min})"
            )
        for name in ("eta", "gamma_decay", "kappa", "epsilon_t", "pt_min", "pt_max"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def alpha_max(self) -> float:
        """Upper bound of the rate schedule, kappa / (2 epsilon_t)."""
        return self.kappa / (2.0 * self.epsilon_t)

    @property
    def threshold_slope(self) -> float:
        """dP_T/dm_star of the affine threshold schedule."""
        return (self.pt_max - self.pt_min) / (1.0 - self.eta)


@dataclass(frozen=True)
class ScheduleEval:
    """Bundle of all schedule quantities at one operating point."""

    f_value: float
    alpha_value: float
    p_threshold: float
    df_dm_star: float
    df_dp_human: float


def _check_m_star(m_star: float, params: ScheduleParams) -> None:
    if not math.isfinite(m_star) or not params.eta <= m_star <= 1.0:
        raise DomainError(
            f"m_star must be in [{params.eta}, 1], got {m_star}"
        )


def _check_p_human(p_human: float) -> None:
    if not math.isfinite(p_human) or p_human < 0.0:
        raise DomainError(f"p_human must be >= 0 and finite, got {p_human}")


def threshold(m_star: float, params: ScheduleParams) -> float:
    """Effort threshold P_T(m_star): affine, strictly increasing in m_star."""
    _check_m_star(m_star, params)
    return kernels.threshold(m_star, params.eta, params.pt_min, params.pt_max)


def f_gain(p_human: float, m_star: float, params: ScheduleParams) -> float:
    """Pitchfork gain [W^2]; sqrt(f) is the equilibrium motor power."""
    _check_p_human(p_human)
    _check_m_star(m_star, params)
    return kernels.f_gain(
        p_human, m_star, params.eta, params.gamma_decay, params.pt_min, params.pt_max
    )


def f_cooperative(p_human: float, m_star: float, params: ScheduleParams) -> float:
    """Cooperative branch evaluated regardless of the threshold test."""
    _check_p_human(p_human)
    _check_m_star(m_star, params)
    return kernels.f_coop(p_human, m_star)


def f_competitive(p_human: float, m_star: float, params: ScheduleParams) -> float:
    """Competitive branch evaluated regardless of the threshold test."""
    _check_p_human(p_human)
    _check_m_star(m_star, params)
    return kernels.f_comp(
        p_human, m_star, params.eta, params.gamma_decay, params.pt_min, params.pt_max
    )


def alpha_gain(p_human: float, m_star: float, params: ScheduleParams) -> float:
    """Rate schedule kappa / (2 max(f, epsilon_t)); bounded by alpha_max."""
    _check_p_human(p_human)
    _check_m_star(m_star, params)
    return kernels.alpha_gain(
        p_human, m_star, params.kappa, params.epsilon_t,
        params.eta, params.gamma_decay, params.pt_min, params.pt_max,
    )


def f_partials(
    p_human: float, m_star: float, params: ScheduleParams
) -> tuple[float, float]:
    """Analytic (df/dm_star, df/dp_human) of the active branch."""
    _check_p_human(p_human)
    _check_m_star(m_star, params)
    return kernels.f_partials(
        p_human, m_star, params.eta, params.gamma_decay, params.pt_min, params.pt_max
    )


def evaluate(p_human: float, m_star: float, params: ScheduleParams) -> ScheduleEval:
    """All schedule quantities at (p_human, m_star) in one call."""
    df_dm, df_dp = f_partials(p_human, m_star, params)
    return ScheduleEval(
        f_value=f_gain(p_human, m_star, params),
        alpha_value=alpha_gain(p_human, m_star, params),
        p_threshold=threshold(m_star, params),
        df_dm_star=df_dm,
        df_dp_human=df_dp,
    )


def competitive_peak_offset(m_star: float, params: ScheduleParams) -> float:
    """Offset above P_T where the competitive branch attains its maximum.

    With c = 2 (gamma + 1/P_T) the product (1 + c u) exp(-2 gamma u) peaks
    at u = 1/(2 gamma) - 1/c and decreases strictly beyond it.
    """
    pt = threshold(m_star, params)
    c = 2.0 * (params.gamma_decay + 1.0 / pt)
    return 1.0 / (2.0 * params.gamma_decay) - 1.0 / c
