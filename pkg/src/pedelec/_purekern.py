"""Pure-Python hot kernels: schedule math and the bifurcation stepper.

This module is the fallback backend; `pedelec._fastkern` is the compiled
twin with identical signatures and identical operation order.  Keep the
two in lockstep — the parity test suite compares them point by point.

No validation here: callers (`schedule`, `controller`) own the contracts.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

# Largest admissible local rate * micro-step for the guarded integrator;
# well inside the real-axis stability region of the classical RK4 scheme.
GUARD_THETA = 0.5
_GUARD_MAX_ITER = 1_000_000


def threshold(m_star: float, eta: float, pt_min: float, pt_max: float) -> float:
    return pt_min + (pt_max - pt_min) * (m_star - eta) / (1.0 - eta)


def f_coop(p_human: float, m_star: float) -> float:
    x = ((1.0 - m_star) / m_star) * p_human
    return x * x


def f_comp(
    p_human: float,
    m_star: float,
    eta: float,
    gamma: float,
    pt_min: float,
    pt_max: float,
) -> float:
    pt = threshold(m_star, eta, pt_min, pt_max)
    base = f_coop(pt, m_star)
    u = p_human - pt
    c = 2.0 * (gamma + 1.0 / pt)
    return base * (1.0 + c * u) * math.exp(-2.0 * gamma * u)


def f_gain(
    p_human: float,
    m_star: float,
    eta: float,
    gamma: float,
    pt_min: float,
    pt_max: float,
) -> float:
    if p_human <= threshold(m_star, eta, pt_min, pt_max):
        return f_coop(p_human, m_star)
    return f_comp(p_human, m_star, eta, gamma, pt_min, pt_max)


def alpha_gain(
    p_human: float,
    m_star: float,
    kappa: float,
    epsilon_t: float,
    eta: float,
    gamma: float,
    pt_min: float,
    pt_max: float,
) -> float:
    f = f_gain(p_human, m_star, eta, gamma, pt_min, pt_max)
    return kappa / (2.0 * (f if f > epsilon_t else epsilon_t))


def f_partials(
    p_human: float,
    m_star: float,
    eta: float,
    gamma: float,
    pt_min: float,
    pt_max: float,
) -> tuple[float, float]:
    """Analytic (df/dm_star, df/dp_human) of the active branch.

    The competitive branch depends on m_star both through the gain prefix
    and through the threshold; the chain rule uses the constant threshold
    slope of the affine schedule.
    """
    r = (1.0 - m_star) / m_star
    dr = -1.0 / (m_star * m_star)
    pt = threshold(m_star, eta, pt_min, pt_max)
    if p_human <= pt:
        df_dp = 2.0 * r * r * p_human
        df_dm = 2.0 * r * dr * p_human * p_human
        return df_dm, df_dp
    s = (pt_max - pt_min) / (1.0 - eta)
    a = r * pt
    da = dr * pt + r * s
    u = p_human - pt
    c = 2.0 * (gamma + 1.0 / pt)
    dc = -2.0 * s / (pt * pt)
    e = math.exp(-2.0 * gamma * u)
    b = 1.0 + c * u
    df_dp = a * a * e * (c - 2.0 * gamma * b)
    df_dm = e * (2.0 * a * da * b + a * a * (dc * u - c * s) + a * a * b * 2.0 * gamma * s)
    return df_dm, df_dp


def _rk4(p: float, alpha: float, f: float, h: float) -> float:
    k1 = alpha * (f * p - p * p * p)
    q = p + 0.5 * h * k1
    k2 = alpha * (f * q - q * q * q)
    q = p + 0.5 * h * k2
    k3 = alpha * (f * q - q * q * q)
    q = p + h * k3
    k4 = alpha * (f * q - q * q * q)
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def bifurcation_step(
    p_motor: float,
    p_human: float,
    m_star: float,
    dt: float,
    n_substeps: int,
    guard: bool,
    kappa: float,
    epsilon_t: float,
    eta: float,
    gamma: float,
    pt_min: float,
    pt_max: float,
) -> float:
    """Advance the pitchfork-normal-form state over one sampling period.

    Inputs are held constant over the tick (zero-order hold).  With
    ``guard`` enabled each substep is internally split so the local rate
    bound alpha*max(f, 3 p^2) times the micro-step stays below GUARD_THETA,
    which keeps the explicit scheme stable through stiff decays; with the
    guard off this is plain fixed-substep stepping.  The state is projected
    onto [0, inf) after every substep.
    """
    f = f_gain(p_human, m_star, eta, gamma, pt_min, pt_max)
    alpha = kappa / (2.0 * (f if f > epsilon_t else epsilon_t))
    h = dt / n_substeps
    p = p_motor
    for _ in range(n_substeps):
        if guard:
            remaining = h
            it = 0
            while remaining > 0.0 and it < _GUARD_MAX_ITER:
                lam = alpha * (3.0 * max(f, p * p))
                hm = remaining if lam * remaining <= GUARD_THETA else GUARD_THETA / lam
                p = _rk4(p, alpha, f, hm)
                if p < 0.0:
                    p = 0.0
                remaining -= hm
                it += 1
        else:
            p = _rk4(p, alpha, f, h)
            if p < 0.0:
                p = 0.0
        if not math.isfinite(p):
            return math.nan
    return p


def bifurcation_series(
    p0: float,
    p_human: np.ndarray,
    m_star: np.ndarray,
    dt: float,
    n_substeps: int,
    guard: bool,
    kappa: float,
    epsilon_t: float,
    eta: float,
    gamma: float,
    pt_min: float,
    pt_max: float,
) -> np.ndarray:
    """Run the stepper over input sequences; out[0] = p0, out[k] after tick k."""
    n = len(p_human)
    out = np.empty(n + 1, dtype=np.float64)
    out[0] = p0
    p = p0
    for k in range(n):
        p = bifurcation_step(
            p, float(p_human[k]), float(m_star[k]), dt, n_substeps, guard,
            kappa, epsilon_t, eta, gamma, pt_min, pt_max,
        )
        out[k + 1] = p
    return out


def schedule_grid(
    m_grid: np.ndarray,
    p_grid: np.ndarray,
    eta: float,
    gamma: float,
    pt_min: float,
    pt_max: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate f and its partials on the m_star x p_human grid.

    Returns (f, df_dm, df_dp) with shape (len(m_grid), len(p_grid)).
    Vectorized with numpy; the compiled twin loops in C.
    """
    m = np.asarray(m_grid, dtype=np.float64)[:, None]
    p = np.asarray(p_grid, dtype=np.float64)[None, :]
    r = (1.0 - m) / m
    dr = -1.0 / (m * m)
    pt = pt_min + (pt_max - pt_min) * (m - eta) / (1.0 - eta)
    s = (pt_max - pt_min) / (1.0 - eta)

    coop = p <= pt
    f_co = (r * p) ** 2
    dfdp_co = 2.0 * r * r * p
    dfdm_co = 2.0 * r * dr * p * p

    a = r * pt
    da = dr * pt + r * s
    u = p - pt
    c = 2.0 * (gamma + 1.0 / pt)
    dc = -2.0 * s / (pt * pt)
    with np.errstate(under="ignore"):
        e = np.exp(-2.0 * gamma * np.where(u > 0.0, u, 0.0))
    b = 1.0 + c * u
    f_cm = a * a * b * e
    dfdp_cm = a * a * e * (c - 2.0 * gamma * b)
    dfdm_cm = e * (2.0 * a * da * b + a * a * (dc * u - c * s) + a * a * b * 2.0 * gamma * s)

    f = np.where(coop, f_co, f_cm)
    dfdm = np.where(coop, dfdm_co, dfdm_cm)
    dfdp = np.where(coop, dfdp_co, dfdp_cm)
    return f, dfdm, dfdp
