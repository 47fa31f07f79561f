# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Signatures and operation order mirror ``pedelec._purekern`` exactly; the
parity tests compare the two backends point by point.
"""

from libc.math cimport exp, isfinite, NAN

import numpy as np

BACKEND_NAME = "cython"
GUARD_THETA = 0.5

cdef double _THETA = 0.5
cdef long _GUARD_MAX_ITER = 1000000


cpdef double threshold(double m_star, double eta, double pt_min, double pt_max):
    return pt_min + (pt_max - pt_min) * (m_star - eta) / (1.0 - eta)


cpdef double f_coop(double p_human, double m_star):
    cdef double x = ((1.0 - m_star) / m_star) * p_human
    return x * x


cpdef double f_comp(double p_human, double m_star, double eta, double gamma,
                    double pt_min, double pt_max):
    cdef double pt = threshold(m_star, eta, pt_min, pt_max)
    cdef double base = f_coop(pt, m_star)
    cdef double u = p_human - pt
    cdef double c = 2.0 * (gamma + 1.0 / pt)
    return base * (1.0 + c * u) * exp(-2.0 * gamma * u)


cpdef double f_gain(double p_human, double m_star, double eta, double gamma,
                    double pt_min, double pt_max):
    if p_human <= threshold(m_star, eta, pt_min, pt_max):
        return f_coop(p_human, m_star)
    return f_comp(p_human, m_star, eta, gamma, pt_min, pt_max)


cpdef double alpha_gain(double p_human, double m_star, double kappa,
                        double epsilon_t, double eta, double gamma,
                        double pt_min, double pt_max):
    cdef double f = f_gain(p_human, m_star, eta, gamma, pt_min, pt_max)
    return kappa / (2.0 * (f if f > epsilon_t else epsilon_t))


cpdef tuple f_partials(double p_human, double m_star, double eta, double gamma,
                       double pt_min, double pt_max):
    cdef double r = (1.0 - m_star) / m_star
    cdef double dr = -1.0 / (m_star * m_star)
    cdef double pt = threshold(m_star, eta, pt_min, pt_max)
    cdef double s, a, da, u, c, dc, e, b, df_dp, df_dm
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
    e = exp(-2.0 * gamma * u)
    b = 1.0 + c * u
    df_dp = a * a * e * (c - 2.0 * gamma * b)
    df_dm = e * (2.0 * a * da * b + a * a * (dc * u - c * s) + a * a * b * 2.0 * gamma * s)
    return df_dm, df_dp


cdef inline double _rk4(double p, double alpha, double f, double h):
    cdef double k1, k2, k3, k4, q
    k1 = alpha * (f * p - p * p * p)
    q = p + 0.5 * h * k1
    k2 = alpha * (f * q - q * q * q)
    q = p + 0.5 * h * k2
    k3 = alpha * (f * q - q * q * q)
    q = p + h * k3
    k4 = alpha * (f * q - q * q * q)
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


cpdef double bifurcation_step(double p_motor, double p_human, double m_star,
                              double dt, int n_substeps, bint guard,
                              double kappa, double epsilon_t, double eta,
                              double gamma, double pt_min, double pt_max):
    cdef double f = f_gain(p_human, m_star, eta, gamma, pt_min, pt_max)
    cdef double alpha = kappa / (2.0 * (f if f > epsilon_t else epsilon_t))
    cdef double h = dt / n_substeps
    cdef double p = p_motor
    cdef double remaining, lam, hm, pp
    cdef long it
    cdef int i
    for i in range(n_substeps):
        if guard:
            remaining = h
            it = 0
            while remaining > 0.0 and it < _GUARD_MAX_ITER:
                pp = p * p
                lam = alpha * (3.0 * (f if f > pp else pp))
                hm = remaining if lam * remaining <= _THETA else _THETA / lam
                p = _rk4(p, alpha, f, hm)
                if p < 0.0:
                    p = 0.0
                remaining -= hm
                it += 1
        else:
            p = _rk4(p, alpha, f, h)
            if p < 0.0:
                p = 0.0
        if not isfinite(p):
            return NAN
    return p


def bifurcation_series(double p0, double[:] p_human, double[:] m_star,
                       double dt, int n_substeps, bint guard,
                       double kappa, double epsilon_t, double eta,
                       double gamma, double pt_min, double pt_max):
    cdef Py_ssize_t n = p_human.shape[0]
    out_arr = np.empty(n + 1, dtype=np.float64)
    cdef double[:] out = out_arr
    cdef double p = p0
    cdef Py_ssize_t k
    out[0] = p0
    for k in range(n):
        p = bifurcation_step(p, p_human[k], m_star[k], dt, n_substeps, guard,
                             kappa, epsilon_t, eta, gamma, pt_min, pt_max)
        out[k + 1] = p
    return out_arr


def schedule_grid(m_grid, p_grid, double eta, double gamma,
                  double pt_min, double pt_max):
    m_arr = np.ascontiguousarray(m_grid, dtype=np.float64)
    p_arr = np.ascontiguousarray(p_grid, dtype=np.float64)
    cdef double[:] m = m_arr
    cdef double[:] p = p_arr
    cdef Py_ssize_t nm = m.shape[0]
    cdef Py_ssize_t npow = p.shape[0]
    f_arr = np.empty((nm, npow), dtype=np.float64)
    dfdm_arr = np.empty((nm, npow), dtype=np.float64)
    dfdp_arr = np.empty((nm, npow), dtype=np.float64)
    cdef double[:, :] f = f_arr
    cdef double[:, :] dfdm = dfdm_arr
    cdef double[:, :] dfdp = dfdp_arr
    cdef Py_ssize_t i, j
    cdef double mi, r, dr, pt, s, a, da, u, c, dc, e, b, pj, x
    s = (pt_max - pt_min) / (1.0 - eta)
    for i in range(nm):
        mi = m[i]
        r = (1.0 - mi) / mi
        dr = -1.0 / (mi * mi)
        pt = pt_min + (pt_max - pt_min) * (mi - eta) / (1.0 - eta)
        a = r * pt
        da = dr * pt + r * s
        c = 2.0 * (gamma + 1.0 / pt)
        dc = -2.0 * s / (pt * pt)
        for j in range(npow):
            pj = p[j]
            if pj <= pt:
                x = r * pj
                f[i, j] = x * x
                dfdp[i, j] = 2.0 * r * r * pj
                dfdm[i, j] = 2.0 * r * dr * pj * pj
            else:
                u = pj - pt
                e = exp(-2.0 * gamma * u)
                b = 1.0 + c * u
                f[i, j] = a * a * b * e
                dfdp[i, j] = a * a * e * (c - 2.0 * gamma * b)
                dfdm[i, j] = e * (2.0 * a * da * b + a * a * (dc * u - c * s)
                                  + a * a * b * 2.0 * gamma * s)
    return f_arr, dfdm_arr, dfdp_arr
