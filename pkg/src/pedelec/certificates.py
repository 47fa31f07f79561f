"""Stability certificates: computed constants and trajectory bound checks.

``compute_constants`` evaluates, for a given schedule and human-power band,
the extrema that govern the closed-loop guarantees:

* C_f       global sup of the gain f — sqrt(C_f) is the target-power ceiling
* c_f       inf of f over the band — sqrt(c_f) is the floor under banded effort
* F1, F2    sups of |df/dm_star| and |df/dp_human| over the band
* zeta      inf of the rate schedule alpha over the band
* beta      2 zeta c_f, the guaranteed contraction rate
* C1..C5    gains of the tracking estimates assembled from the above

Extrema are taken on dense grids augmented with the exact per-m_star
candidate points (threshold corner, competitive peak, steepest competitive
slope) and polished with a golden-section pass, so grid resolution is not
the accuracy limit.  A closed-form tail bound certifies that nothing
larger lies beyond the gridded power range.

``check_trajectory`` replays a tick log against the ceiling/floor bounds
and both tracking estimates, reporting every violation with its margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

import numpy as np

from pedelec._backend import kernels
from pedelec.core import ConfigError, DomainError, RefinementError, TickRecord
from pedelec.schedule import ScheduleParams

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_extremum(fn, a: float, b: float, maximize: bool, iters: int = 90):
    """Golden-section search; returns (x, fn(x)) at the extremum."""
    sign = 1.0 if maximize else -1.0
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1 = sign * fn(x1)
    f2 = sign * fn(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = sign * fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = sign * fn(x1)
    x = 0.5 * (a + b)
    return x, fn(x)


@dataclass(frozen=True)
class CertificateConstants:
    """Constants of the ceiling/floor lemmas and the tracking estimates."""

    c_f_sup: float            # C_f
    c_f_inf: float            # c_f over the band
    f1_sup: float             # F1
    f2_sup: float             # F2
    zeta_inf: float           # zeta
    beta: float               # 2 zeta c_f
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    p_h_min: float
    p_h_max: float
    p_order: int
    m_upper: float
    eta: float
    grid_n: int
    p_upper: float            # power range certified by the grid
    tail_bound: float         # analytic bound on f beyond p_upper
    c_f_inf_arg: tuple[float, float]   # (m_star, p_human) attaining c_f
    params: ScheduleParams

    @property
    def decay_rate(self) -> float:
        """Exponential rate of the tracking estimate for this p_order.

        The p=2 derivation contracts the squared error at 4 zeta c_f, so
        the error itself decays at beta; the p=1 branch gives up half the
        rate to the product-splitting inequality.
        """
        return self.beta if self.p_order == 2 else 0.5 * self.beta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c_f_inf_arg"] = list(self.c_f_inf_arg)
        d["params"] = asdict(self.params)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CertificateConstants":
        d = dict(d)
        d["params"] = ScheduleParams(**d["params"])
        d["c_f_inf_arg"] = tuple(d["c_f_inf_arg"])
        return cls(**d)


@dataclass(frozen=True)
class BoundViolation:
    """One tick where a certified bound failed: lhs > rhs + tolerance."""

    t: float
    bound_name: str           # lemma1 | lemma2 | iss_pm | iss_m
    lhs: float
    rhs: float
    margin: float             # lhs - rhs


def _per_m_candidates(m: float, params: ScheduleParams, p_lo: float, p_hi: float):
    """Exact stationary/corner power values of f and its slope for fixed m."""
    pt = kernels.threshold(m, params.eta, params.pt_min, params.pt_max)
    c = 2.0 * (params.gamma_decay + 1.0 / pt)
    peak = pt + 1.0 / (2.0 * params.gamma_decay) - 1.0 / c
    steepest = pt + 1.0 / params.gamma_decay - 1.0 / c
    out = [p_lo, p_hi]
    for p in (pt, peak, steepest):
        if p_lo <= p <= p_hi:
            out.append(p)
    return out


def _f(m: float, p: float, params: ScheduleParams) -> float:
    return kernels.f_gain(
        p, m, params.eta, params.gamma_decay, params.pt_min, params.pt_max
    )


def _sup_f_global(m: float, params: ScheduleParams) -> float:
    """sup over all p >= 0 of f(m, p): the competitive interior peak or the
    threshold corner, whichever is larger."""
    pt = kernels.threshold(m, params.eta, params.pt_min, params.pt_max)
    corner = kernels.f_coop(pt, m)
    c = 2.0 * (params.gamma_decay + 1.0 / pt)
    u_peak = 1.0 / (2.0 * params.gamma_decay) - 1.0 / c
    peak = kernels.f_comp(
        pt + u_peak, m, params.eta, params.gamma_decay, params.pt_min, params.pt_max
    )
    return max(corner, peak)


def _band_extremum_over_m(
    fn, m_lo: float, m_hi: float, n: int, maximize: bool
) -> tuple[float, float]:
    """Grid scan + golden polish of a scalar function of m_star."""
    grid = np.linspace(m_lo, m_hi, n)
    vals = np.array([fn(m) for m in grid])
    i = int(np.argmax(vals) if maximize else np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n - 1)]
    if a == b:
        return float(grid[i]), float(vals[i])
    x, v = _golden_extremum(fn, a, b, maximize)
    best = max(v, float(vals[i])) if maximize else min(v, float(vals[i]))
    return (x if (v >= vals[i]) == maximize else float(grid[i])), best


def compute_constants(
    params: ScheduleParams,
    p_h_min: float,
    p_h_max: float,
    p_order: int = 2,
    grid_n: int = 512,
    m_upper: float = 0.95,
) -> CertificateConstants:
    """Compute all certificate constants for the given band.

    The band floor c_f is taken over m_star in [eta, m_upper] with
    m_upper < 1: at m_star = 1 the cooperative gain vanishes identically,
    so the floor over the full band would degenerate to zero.  The sups
    (C_f, F1, F2) and the rate infimum zeta are taken over the full
    [eta, 1] range, which only makes the resulting bounds more
    conservative.
    """
    if not 0.0 < p_h_min < p_h_max:
        raise DomainError(
            f"need 0 < p_h_min < p_h_max, got {p_h_min}, {p_h_max}"
        )
    if p_order not in (1, 2):
        raise DomainError(f"p_order must be 1 or 2, got {p_order}")
    if grid_n < 64:
        raise DomainError(f"grid_n must be >= 64, got {grid_n}")
    if not params.eta < m_upper < 1.0:
        raise ConfigError(
            f"m_upper must be in (eta, 1) = ({params.eta}, 1), got {m_upper}"
        )
    eta, gamma = params.eta, params.gamma_decay

    # --- C_f: sup of f over [eta, 1] x [0, p_upper], grid + analytic peak.
    p_upper = params.pt_max + 12.0 / gamma
    m_grid = np.linspace(eta, 1.0, grid_n)
    p_grid = np.linspace(0.0, p_upper, grid_n)
    f_grid, _, _ = kernels.schedule_grid(
        m_grid, p_grid, eta, gamma, params.pt_min, params.pt_max
    )
    c_f_sup = float(np.max(f_grid))
    _, analytic_sup = _band_extremum_over_m(
        lambda m: _sup_f_global(m, params), eta, 1.0, grid_n, maximize=True
    )
    c_f_sup = max(c_f_sup, analytic_sup)

    # Tail certificate beyond p_upper: every m_star is competitive there,
    # and (1 + c u) exp(-2 gamma u) <= (1 + c/(gamma e)) exp(-gamma u)
    # via x exp(-a x) <= exp(-1)/a.
    _, a_max = _band_extremum_over_m(
        lambda m: ((1.0 - m) / m)
        * kernels.threshold(m, eta, params.pt_min, params.pt_max),
        eta, 1.0, grid_n, maximize=True,
    )
    c_max = 2.0 * (gamma + 1.0 / params.pt_min)
    u0 = p_upper - params.pt_max
    tail_bound = a_max * a_max * (1.0 + c_max / (gamma * math.e)) * math.exp(-gamma * u0)
    if tail_bound > 1.01 * c_f_sup:
        raise RefinementError(
            f"tail bound {tail_bound:.6g} exceeds grid sup {c_f_sup:.6g} "
            "by more than 1%; increase grid_n / p_upper"
        )

    # --- c_f: inf of f over [eta, m_upper] x [p_h_min, p_h_max].
    # For fixed m_star, f is unimodal in p, so the band minimum sits at an
    # endpoint of the power interval.
    def band_min(m: float) -> float:
        return min(_f(m, p_h_min, params), _f(m, p_h_max, params))

    m_arg, c_f_inf = _band_extremum_over_m(
        band_min, eta, m_upper, grid_n, maximize=False
    )
    p_arg = p_h_min if _f(m_arg, p_h_min, params) <= _f(m_arg, p_h_max, params) else p_h_max
    if c_f_inf <= 0.0:
        raise RefinementError(
            f"band infimum c_f = {c_f_inf} is not positive at "
            f"(m_star={m_arg:.6g}, p={p_arg:.6g}); shrink m_upper or the band"
        )

    # --- F1, F2, and the band sup of f (for zeta) over [eta, 1] x band.
    p_band = np.linspace(p_h_min, p_h_max, grid_n)
    fb, dfdm_b, dfdp_b = kernels.schedule_grid(
        m_grid, p_band, eta, gamma, params.pt_min, params.pt_max
    )

    def per_m_pmax(values_fn, m: float) -> float:
        return max(
            values_fn(m, p) for p in _per_m_candidates(m, params, p_h_min, p_h_max)
        )

    def abs_dfdm(m: float, p: float) -> float:
        return abs(
            kernels.f_partials(p, m, eta, gamma, params.pt_min, params.pt_max)[0]
        )

    def abs_dfdp(m: float, p: float) -> float:
        return abs(
            kernels.f_partials(p, m, eta, gamma, params.pt_min, params.pt_max)[1]
        )

    _, f1_sup = _band_extremum_over_m(
        lambda m: per_m_pmax(abs_dfdm, m), eta, 1.0, grid_n, maximize=True
    )
    _, f2_sup = _band_extremum_over_m(
        lambda m: per_m_pmax(abs_dfdp, m), eta, 1.0, grid_n, maximize=True
    )
    f1_sup = max(f1_sup, float(np.max(np.abs(dfdm_b))))
    f2_sup = max(f2_sup, float(np.max(np.abs(dfdp_b))))

    def band_f_max(m: float) -> float:
        return max(_f(m, p, params) for p in _per_m_candidates(m, params, p_h_min, p_h_max))

    _, f_band_sup = _band_extremum_over_m(band_f_max, eta, 1.0, grid_n, maximize=True)
    f_band_sup = max(f_band_sup, float(np.max(fb)))
    zeta_inf = params.kappa / (2.0 * max(f_band_sup, params.epsilon_t))

    # --- Assembled constants of the tracking estimates.
    beta = 2.0 * zeta_inf * c_f_inf
    if p_order == 2:
        c1 = math.sqrt(f1_sup / beta * math.sqrt(c_f_sup / c_f_inf))
        c2 = math.sqrt(f2_sup / beta * math.sqrt(c_f_sup / c_f_inf))
    else:
        denom = 2.0 * math.sqrt(2.0) * zeta_inf * c_f_inf ** 1.5
        c1 = f1_sup / denom
        c2 = f2_sup / denom
    ratio_prefix = p_h_max / (math.sqrt(c_f_inf) + p_h_min) ** 2
    amp0 = (math.sqrt(c_f_sup) + p_h_max) ** 2 / p_h_min
    c3 = ratio_prefix * amp0
    c4 = ratio_prefix * c1
    c5 = ratio_prefix * c2

    return CertificateConstants(
        c_f_sup=c_f_sup,
        c_f_inf=c_f_inf,
        f1_sup=f1_sup,
        f2_sup=f2_sup,
        zeta_inf=zeta_inf,
        beta=beta,
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        c5=c5,
        p_h_min=p_h_min,
        p_h_max=p_h_max,
        p_order=p_order,
        m_upper=m_upper,
        eta=eta,
        grid_n=grid_n,
        p_upper=p_upper,
        tail_bound=tail_bound,
        c_f_inf_arg=(float(m_arg), float(p_arg)),
        params=params,
    )


def _central_differences(x: np.ndarray, dt: float) -> np.ndarray:
    d = np.empty_like(x)
    if len(x) == 1:
        d[:] = 0.0
        return d
    d[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    d[0] = (x[1] - x[0]) / dt
    d[-1] = (x[-1] - x[-2]) / dt
    return d


def check_trajectory(
    log: Sequence[TickRecord],
    constants: CertificateConstants,
    m_star_dot: Iterable[float] | None = None,
    p_human_dot: Iterable[float] | None = None,
    rel_tol: float = 1e-6,
    abs_tol: float | None = None,
    counters: dict | None = None,
) -> list[BoundViolation]:
    """Evaluate every applicable bound at every tick of an equally spaced log.

    Reference and human-power derivatives are taken from the analytic
    arrays when provided, otherwise estimated with central differences on
    the logged signals.  Ticks where a bound's hypotheses do not hold
    (initial condition out of range, human power outside the band,
    reference above m_upper) are skipped and counted, never reported as
    violations.
    """
    if len(log) < 2:
        raise DomainError("log must contain at least two ticks")
    t = np.array([r.sample.t for r in log])
    dt = t[1] - t[0]
    if dt <= 0.0 or not np.allclose(np.diff(t), dt, rtol=0.0, atol=1e-9 * max(dt, 1.0)):
        raise DomainError("log ticks must be equally spaced")

    params = constants.params
    p_m = np.array([r.p_motor_target for r in log])
    p_h = np.array([r.sample.p_human_out for r in log])
    m_star = np.array([r.m_star for r in log])
    m = np.array([r.sample.ratio_m for r in log])
    p_thr = np.array([r.p_threshold for r in log])

    f_vals = np.array(
        [
            kernels.f_gain(
                float(p_h[k]), float(m_star[k]),
                params.eta, params.gamma_decay, params.pt_min, params.pt_max,
            )
            for k in range(len(log))
        ]
    )
    sq_f = np.sqrt(f_vals)

    md = (
        np.asarray(list(m_star_dot), dtype=float)
        if m_star_dot is not None
        else _central_differences(m_star, dt)
    )
    hd = (
        np.asarray(list(p_human_dot), dtype=float)
        if p_human_dot is not None
        else _central_differences(p_h, dt)
    )
    if len(md) != len(log) or len(hd) != len(log):
        raise DomainError("derivative arrays must match the log length")
    sup_md = np.maximum.accumulate(np.abs(md))
    sup_hd = np.maximum.accumulate(np.abs(hd))

    sq_cf_sup = math.sqrt(constants.c_f_sup)
    sq_cf_inf = math.sqrt(constants.c_f_inf)
    if abs_tol is None:
        abs_tol = 1e-6 * sq_cf_sup + 1e-12

    def tol(lhs: float, rhs: float) -> float:
        return rel_tol * max(abs(lhs), abs(rhs)) + abs_tol

    in_band = (
        (p_h >= constants.p_h_min - abs_tol)
        & (p_h <= constants.p_h_max + abs_tol)
        & (m_star >= constants.eta)
        & (m_star <= constants.m_upper + 1e-12)
    )
    band_prefix = np.logical_and.accumulate(in_band)
    coop_prefix = np.logical_and.accumulate(p_h <= p_thr)

    lemma1_applies = p_m[0] <= sq_cf_sup + tol(p_m[0], sq_cf_sup)
    floor_ic = p_m[0] >= sq_cf_inf - tol(p_m[0], sq_cf_inf)
    ceil_ic = lemma1_applies
    exp_pow = 1.0 / constants.p_order
    rate = constants.decay_rate
    err0_pm = abs(p_m[0] - sq_f[0])
    err0_m = abs(m[0] - m_star[0])

    skipped = {"lemma1": 0, "lemma2": 0, "iss_pm": 0, "iss_m": 0}
    violations: list[BoundViolation] = []

    for k in range(len(log)):
        tk = float(t[k] - t[0])
        if lemma1_applies:
            lhs = float(p_m[k])
            rhs = sq_cf_sup
            if lhs > rhs + tol(lhs, rhs):
                violations.append(
                    BoundViolation(float(t[k]), "lemma1", lhs, rhs, lhs - rhs)
                )
        else:
            skipped["lemma1"] += 1

        if floor_ic and band_prefix[k]:
            lhs = sq_cf_inf
            rhs = float(p_m[k])
            if lhs > rhs + tol(lhs, rhs):
                violations.append(
                    BoundViolation(float(t[k]), "lemma2", lhs, rhs, lhs - rhs)
                )
        else:
            skipped["lemma2"] += 1

        iss_hyp = floor_ic and ceil_ic and band_prefix[k]
        if iss_hyp:
            lhs = float(abs(p_m[k] - sq_f[k]))
            rhs = float(
                err0_pm * math.exp(-rate * tk)
                + constants.c1 * sup_md[k] ** exp_pow
                + constants.c2 * sup_hd[k] ** exp_pow
            )
            if lhs > rhs + tol(lhs, rhs):
                violations.append(
                    BoundViolation(float(t[k]), "iss_pm", lhs, rhs, lhs - rhs)
                )
        else:
            skipped["iss_pm"] += 1

        if iss_hyp and coop_prefix[k]:
            lhs = float(abs(m[k] - m_star[k]))
            rhs = float(
                constants.c3 * err0_m * math.exp(-rate * tk)
                + constants.c4 * sup_md[k] ** exp_pow
                + constants.c5 * sup_hd[k] ** exp_pow
            )
            if lhs > rhs + tol(lhs, rhs):
                violations.append(
                    BoundViolation(float(t[k]), "iss_m", lhs, rhs, lhs - rhs)
                )
        else:
            skipped["iss_m"] += 1

    if counters is not None:
        counters.update(skipped)
    return violations
