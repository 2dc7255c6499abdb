from __future__ import annotations

import numpy as np
import pytest

from dimerdefect.core import ConfigError
from dimerdefect.defect import I_matrix, OnBand, characteristic_double, characteristic_single
from dimerdefect.design import (
    DegenerateQuadratic,
    ZeroIntegral,
    design_double,
    design_n,
    design_single,
    double_quadratic,
    quadratic_roots,
    second_perturbation,
    toeplitz_submatrix,
)

from conftest import loop6, loop7


@pytest.mark.parametrize("omega", list(loop6(8)) + [2.0 + 1.0j, 20.0 - 5.0j])
def test_single_back_substitution(ctx, omega):
    d = design_single(omega, ctx)
    V1 = ctx.material.V[0]
    assert abs(characteristic_single(omega, d.V1_def, ctx).value) < 1e-10 * abs(V1)
    assert d.residual < 1e-10


def test_single_large_frequency_asymptotics(ctx):
    # J ~ -avg(Ccal_11) / w^2, so the required defect grows like w^2
    c11 = np.sum(ctx.weights * ctx.Ccal[:, 0, 0])
    for mod in (1e3, 1e4):
        w = 1j * mod
        d = design_single(w, ctx)
        # corrections are O(|w|^-2)
        assert abs(d.J * w**2 / -c11 - 1) < 1e3 / mod**2
        assert abs(d.V1_def * c11 / (ctx.material.V[0] * w**2) - 1) < 1e3 / mod**2


def test_single_refusals(ctx):
    with pytest.raises(OnBand):
        design_single(np.sqrt(ctx.eigenvalues[5, 1]), ctx)
    with pytest.raises(ZeroIntegral):
        design_single(3.0 + 1.0j, ctx, w_tol=1e6)


def test_quadratic_roots_stable():
    for A, B, C in [(1, -3, 2), (1e-8, 1, 1), (2 + 1j, 1e6, 1e-3)]:
        r = quadratic_roots(A, B, C)
        scale = max(abs(A), abs(B), abs(C))
        for x in r:
            assert abs(A * x * x + B * x + C) < 1e-12 * scale * max(1, abs(x)) ** 2


@pytest.mark.parametrize("i", range(4))
def test_double_back_substitution(ctx, i):
    w1, w2 = (v[i] for v in loop7(4))
    d = design_double(w1, w2, ctx)
    V1, V2 = ctx.material.V
    A, B, C = d.coefficients
    scale = max(abs(A), abs(B), abs(C))
    for root in d.roots:
        assert abs(A * root.X1**2 + B * root.X1 + C) < 1e-12 * scale * max(1, abs(root.X1)) ** 2
        for w in (w1, w2):
            assert abs(characteristic_double(w, root.V_def, ctx).value) < 1e-8 * abs(V1 * V2)
    # primary root is the smaller perturbation
    dist = [np.linalg.norm(np.array(r.V_def) - np.array([V1, V2])) for r in d.roots]
    assert dist[d.primary] == min(dist)


def test_double_second_perturbation_consistent(ctx):
    w1, w2 = 1.3 - 0.9j, 1.0 - 1.1j
    d = design_double(w1, w2, ctx)
    V1, V2 = ctx.material.V
    X1 = d.roots[d.primary].X1
    a, _ = second_perturbation(X1, I_matrix(w1, ctx), V1, V2)
    b, _ = second_perturbation(X1, I_matrix(w2, ctx), V1, V2)
    assert abs(a - b) < 1e-8 * max(1.0, abs(a))


def test_double_coincident_targets(ctx):
    with pytest.raises(DegenerateQuadratic):
        design_double(1.2 - 1j, 1.2 - 1j, ctx)
    with pytest.raises(DegenerateQuadratic):
        design_double(1.2 - 1j, 1.2 - 1j + 1e-9, ctx)


def test_double_quadratic_expansion():
    rng = np.random.default_rng(2)
    I1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    I2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    V1 = 0.7 + 0.2j
    A, B, C = double_quadratic(I1, I2, V1)
    for x in (0.3, -1.1 + 0.5j):
        lhs = (V1 + I1[0, 0] * x) * (x * np.linalg.det(I2) + V1 * I2[1, 1])
        rhs = (V1 + I2[0, 0] * x) * (x * np.linalg.det(I1) + V1 * I1[1, 1])
        assert lhs - rhs == pytest.approx(A * x * x + B * x + C, abs=1e-12)


def test_design_n_reduces_to_single(ctx):
    w = 1.1 - 0.3j
    a = design_n([w], [(0, 0)], ctx)
    assert abs(a.V_def[0] - design_single(w, ctx).V1_def) < 1e-10
    # Newton from a perturbed seed lands on the same closed form
    b = design_n([w], [(0, 0)], ctx, seed=[a.V_def[0] * (1 + 1e-3)])
    assert abs(b.V_def[0] - a.V_def[0]) < 1e-10 * max(1, abs(a.V_def[0]))


def test_design_n_reduces_to_double(ctx):
    w1, w2 = 1.3 - 0.9j, 1.0 - 1.1j
    d = design_double(w1, w2, ctx)
    n = design_n([w1, w2], [(0, 0), (0, 1)], ctx)
    assert any(np.allclose(n.V_def, r.V_def, atol=1e-8) for r in d.roots)


def test_design_n_three_sites(ctx):
    targets = [1.0 - 0.4j, 1.1 - 0.3j, 0.9 - 0.5j]
    sites = [(-1, 0), (0, 0), (1, 0)]
    r = design_n(targets, sites, ctx)
    V = ctx.material.array
    for w in targets:
        T = toeplitz_submatrix(w, sites, ctx)
        x = np.array(r.V_def) / V[[0, 0, 0]] - 1
        assert abs(np.linalg.det(np.eye(3) - x[:, None] * T)) < 1e-8


def test_toeplitz_submatrix_structure(ctx):
    w = 2.0 + 1.0j
    T = toeplitz_submatrix(w, [(0, 0), (0, 1)], ctx)
    assert np.allclose(T, -I_matrix(w, ctx))


def test_design_n_input_validation(ctx):
    with pytest.raises(ConfigError):
        design_n([1.0 - 0.4j, 1.1 - 0.4j], [(0, 0), (0, 0)], ctx)
    with pytest.raises(ConfigError):
        design_n([1.0 - 0.4j, 1.0 - 0.4j], [(0, 0), (1, 0)], ctx)
    with pytest.raises(ConfigError):
        design_n([1.0 - 0.4j], [(0, 2)], ctx)
