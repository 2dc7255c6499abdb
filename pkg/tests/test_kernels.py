from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from dimerdefect import kernels
from dimerdefect.greens import _lerch_coeffs

py = kernels.python_backend()
compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


@compiled
@pytest.mark.parametrize("a", [0.05, 0.25, 0.5, 0.95])
def test_lerch_parity(a):
    coeffs = _lerch_coeffs(a, 40)
    theta = np.linspace(-3.0, 3.0, 41)
    theta = theta[theta != 0]
    x = np.asarray(kernels.lerch_phi1(theta, a, coeffs))
    y = py.lerch_phi1(theta, a, coeffs)
    assert np.max(np.abs(x - y)) < 1e-13 * max(1.0, np.max(np.abs(y)))


@compiled
@pytest.mark.parametrize("t,rho,theta", [(0.25, 0.3, 0.7), (0.0, 1e-3, -2.1), (0.5, 2.0, 3.0)])
def test_kummer_parity(t, rho, theta):
    x = kernels.kummer_remainder(t, rho, theta, -500, 500)
    y = py.kummer_remainder(t, rho, theta, -500, 500)
    assert abs(x - y) < 1e-13 * max(1.0, abs(y))


@compiled
def test_bz_average_parity():
    rng = np.random.default_rng(3)
    n = 64
    c = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(4)]
    det = c[0] * c[3] - c[1] * c[2]
    tr = c[0] + c[3]
    s = np.sqrt(tr**2 - 4 * det)
    lam1, lam2 = (tr - s) / 2, (tr + s) / 2
    w = np.full(n, 1.0 / n)
    phase = np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    w2 = rng.normal(size=9) * 5 + 1j * rng.normal(size=9)
    args = [np.ascontiguousarray(v) for v in (*c, lam1, lam2, w, phase, w2)]
    ox, dx = kernels.bz_average(*args)
    oy, dy = py.bz_average(*args)
    assert np.allclose(ox, oy, rtol=1e-13, atol=1e-13) and np.allclose(dx, dy)


def test_bz_average_matches_dense_solve():
    rng = np.random.default_rng(5)
    n = 16
    C = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    lam = np.linalg.eigvals(C)
    w = rng.uniform(size=n)
    phase = np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    z = np.array([3.0 + 1j, -0.5 - 2j])
    out, dist = kernels.bz_average(*(np.ascontiguousarray(v) for v in (
        C[:, 0, 0], C[:, 0, 1], C[:, 1, 0], C[:, 1, 1], lam[:, 0], lam[:, 1], w, phase, z)))
    for p, zp in enumerate(z):
        ref = np.einsum("k,kij->ij", w * phase, C @ np.linalg.inv(C - zp * np.eye(2)))
        assert np.allclose(out[p].reshape(2, 2), ref, rtol=1e-12)
        assert dist[p] == pytest.approx(np.min(np.abs(lam - zp)))


def test_pure_python_switch():
    code = "import dimerdefect; print(dimerdefect.BACKEND)"
    env = dict(os.environ, DIMERDEFECT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env["DIMERDEFECT_PURE_PYTHON"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() in ("python", "cython")


def test_pure_python_results_agree():
    code = (
        "from dimerdefect.greens import greens_alpha; "
        "print(repr(greens_alpha((0.3, 0.2, 0.1), 0.7).value))"
    )
    vals = []
    for flag in ("1", "0"):
        env = dict(os.environ, DIMERDEFECT_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(complex(out.stdout.strip()))
    assert abs(vals[0] - vals[1]) < 1e-13
