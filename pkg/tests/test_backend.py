"""Kernel backend parity: compiled extension versus pure Python."""

import os
import subprocess
import sys

import numpy as np
import pytest

from pedelec import _purekern
from pedelec._backend import BACKEND, available_backends

fast = pytest.importorskip("pedelec._fastkern")

PARAMS = dict(eta=0.2, gamma=0.02, pt_min=80.0, pt_max=250.0)
KAPPA, EPS = 0.5, 25.0


def _draws(n=4000, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.uniform(0.2, 1.0, n)
    p = rng.uniform(0.0, 900.0, n)
    return m, p


class TestScalarParity:
    def test_threshold(self):
        m, _ = _draws()
        for mi in m[:500]:
            a = _purekern.threshold(mi, 0.2, 80.0, 250.0)
            b = fast.threshold(mi, 0.2, 80.0, 250.0)
            assert a == b

    def test_f_gain_and_alpha(self):
        m, p = _draws()
        for mi, pi in zip(m, p):
            a = _purekern.f_gain(pi, mi, **PARAMS)
            b = fast.f_gain(pi, mi, **PARAMS)
            assert a == pytest.approx(b, rel=1e-15, abs=1e-300)
            aa = _purekern.alpha_gain(pi, mi, KAPPA, EPS, **PARAMS)
            bb = fast.alpha_gain(pi, mi, KAPPA, EPS, **PARAMS)
            assert aa == pytest.approx(bb, rel=1e-15)

    def test_partials(self):
        m, p = _draws(seed=1)
        for mi, pi in zip(m[:1500], p[:1500]):
            a = _purekern.f_partials(pi, mi, **PARAMS)
            b = fast.f_partials(pi, mi, **PARAMS)
            assert a[0] == pytest.approx(b[0], rel=1e-13, abs=1e-9)
            assert a[1] == pytest.approx(b[1], rel=1e-13, abs=1e-9)


class TestSteppingParity:
    @pytest.mark.parametrize("guard", [True, False])
    def test_step_sequences(self, guard):
        rng = np.random.default_rng(5)
        p_h = rng.uniform(0.0, 350.0, 200)
        m_s = rng.uniform(0.2, 1.0, 200)
        a = _purekern.bifurcation_series(
            40.0, p_h, m_s, 1.0, 10, guard, KAPPA, EPS, **PARAMS
        )
        b = fast.bifurcation_series(
            40.0, p_h, m_s, 1.0, 10, guard, KAPPA, EPS, **PARAMS
        )
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_grid_parity(self):
        m_grid = np.linspace(0.2, 1.0, 173)
        p_grid = np.linspace(0.0, 800.0, 211)
        fa = _purekern.schedule_grid(m_grid, p_grid, **PARAMS)
        fb = fast.schedule_grid(m_grid, p_grid, **PARAMS)
        for a, b in zip(fa, fb):
            np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-200)


class TestSelection:
    @pytest.mark.skipif(
        os.environ.get("PEDELEC_BACKEND", "").lower() == "python",
        reason="fallback forced via environment",
    )
    def test_compiled_preferred_here(self):
        assert BACKEND == "cython"
        assert available_backends() == ["python", "cython"]

    def test_env_forces_python(self):
        out = subprocess.run(
            [sys.executable, "-c",
             "from pedelec._backend import BACKEND; print(BACKEND)"],
            capture_output=True, text=True,
            env={"PEDELEC_BACKEND": "python", "PATH": "/usr/bin:/bin"},
        )
        assert out.stdout.strip() == "python"
