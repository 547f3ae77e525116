import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import params
from wqed import _backend, timedomain as td

compiled = pytest.mark.skipif(_backend.BACKEND != "cython", reason="extension not built")


def test_default_backend_reported():
    assert _backend.BACKEND in ("cython", "python")


def test_env_forces_python():
    env = dict(os.environ, WQED_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import wqed; print(wqed.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_propagate("fortran")


@compiled
@pytest.mark.parametrize("kw", [dict(), dict(gamma_c=0.05, gamma_a=0.02, omega_c=1.03)])
def test_backends_agree(kw):
    p = params(**kw)
    grid, x0, t_final = td.plan_packet_run(p, td.PacketConfig(sigma_x=40.0, dx=0.1))
    s = td.init_gaussian_packet(grid, x0, 40.0, 1.45, p)
    a, sa = td.evolve(s, p, t_final, backend="python")
    b, sb = td.evolve(s, p, t_final, backend="cython")
    assert np.max(np.abs(a.phiR - b.phiR)) < 1e-14 and np.max(np.abs(a.phiL - b.phiL)) < 1e-14
    assert np.max(np.abs(sa.N - sb.N)) < 1e-14


@compiled
def test_kernel_outputs_identical():
    rng = np.random.default_rng(3)
    n = 500
    in_r = rng.normal(size=n) + 1j * rng.normal(size=n)
    in_l = rng.normal(size=n) + 1j * rng.normal(size=n)
    eh, ka, kb, jump = td._step_operators(params(gamma_a=0.01), 0.1)
    py = _backend.get_propagate("python")(in_r, in_l, eh, ka, kb, jump, 0.1j, 0.2)
    cy = _backend.get_propagate("cython")(in_r, in_l, eh, ka, kb, jump, 0.1j, 0.2)
    for x, y in zip(py, cy):
        assert np.max(np.abs(x - y)) < 1e-13
