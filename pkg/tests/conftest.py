"""Shared fixtures and oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pedelec import (
    MODE_COMPETITIVE,
    MODE_COOPERATIVE,
    ControllerConfig,
    ControllerState,
    PowerSample,
    ScheduleParams,
    TickRecord,
    compute_ratio,
    f_gain,
    step_bifurcation,
    threshold,
)


@pytest.fixture
def params() -> ScheduleParams:
    return ScheduleParams()


def fd_partials(
    p: float, m: float, params: ScheduleParams, hp: float = 1e-3, hm: float = 1e-6
) -> tuple[float, float]:
    """Central-difference oracle for the schedule partial derivatives.

    Callers must keep the stencil clear of the branch boundary (the gain
    is C1 but not C2 there, so a stencil straddling it degrades the
    estimate below the comparison tolerance).
    """
    df_dp = (f_gain(p + hp, m, params) - f_gain(max(p - hp, 0.0), m, params)) / (
        (p + hp) - max(p - hp, 0.0)
    )
    m_lo = max(m - hm, params.eta)
    m_hi = min(m + hm, 1.0)
    df_dm = (f_gain(p, m_hi, params) - f_gain(p, m_lo, params)) / (m_hi - m_lo)
    return df_dm, df_dp


def clear_of_kink(p: float, m: float, params: ScheduleParams, width: float) -> bool:
    """True when a +-width stencil at (p, m) stays within one branch."""
    return abs(p - threshold(m, params)) > width


def drive_bifurcation(
    p0: float,
    p_human: np.ndarray,
    m_star: np.ndarray,
    cfg: ControllerConfig,
) -> np.ndarray:
    """Run the target-power update over input sequences; returns length n+1."""
    out = np.empty(len(p_human) + 1)
    out[0] = p0
    state = ControllerState(p_motor_target=p0)
    for k in range(len(p_human)):
        state = step_bifurcation(state, float(p_human[k]), float(m_star[k]), cfg)
        out[k + 1] = state.p_motor_target
    return out


def synthetic_log(
    t: np.ndarray,
    p_human: np.ndarray,
    m_star: np.ndarray,
    p_motor: np.ndarray,
    params: ScheduleParams,
) -> list[TickRecord]:
    """Build tick records from a direct target-power run (no plant loop).

    The ratio uses the target power itself, matching the definition the
    tracking estimates are stated for.
    """
    log = []
    for k in range(len(t)):
        thr = threshold(float(m_star[k]), params)
        h = float(p_human[k])
        pm = float(p_motor[k])
        sample = PowerSample(
            t=float(t[k]),
            p_human_raw=h,
            p_human_out=h,
            p_motor_out=pm,
            ratio_m=compute_ratio(h, pm),
        )
        log.append(
            TickRecord(
                sample=sample,
                m_star=float(m_star[k]),
                p_motor_target=pm,
                p_motor_actual=pm,
                y_control=0.0,
                p_threshold=thr,
                mode_flag=MODE_COMPETITIVE if h > thr else MODE_COOPERATIVE,
            )
        )
    return log
