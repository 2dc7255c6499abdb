from __future__ import annotations

import numpy as np
import pytest

from dimerdefect.capacitance import (
    DefectOutOfRange,
    assemble_capacitance,
    assemble_capacitance_grid,
    band_structure,
    bz_grid,
    chain_cells,
    finite_capacitance,
    finite_chain_matrix,
    generalized,
    graded_grid,
    site_index,
    uniform_grid,
)
from dimerdefect.core import DefectSpec, Geometry, Lattice, MaterialSpec, validate_config
from dimerdefect.oracle import band_set

R = 0.15
VOL = 4.0 / 3.0 * np.pi * R**3


def test_isolated_sphere_limit(problem):
    C = assemble_capacitance(0.7, problem.geometry, problem.lattice, couplings=False).C
    assert np.allclose(C, np.diag([4 * np.pi * R] * 2))


def test_symmetric_dimer_structure(problem):
    alphas, _ = uniform_grid(199)
    C = assemble_capacitance_grid(alphas, problem.geometry, problem.lattice)
    assert np.allclose(C[:, 0, 0], C[:, 1, 1], atol=1e-12)
    assert np.max(np.abs(C[:, 0, 0].imag)) < 1e-12
    assert np.allclose(C[:, 1, 0], np.conj(C[:, 0, 1]), atol=1e-12)


def test_conjugation_on_grid(problem):
    alphas, _ = uniform_grid(199)
    C = assemble_capacitance_grid(alphas, problem.geometry, problem.lattice)
    Cm = assemble_capacitance_grid(-alphas, problem.geometry, problem.lattice)
    assert np.max(np.abs(Cm - np.conj(C))) < 1e-8


def test_non_collinear_matches_collinear(problem):
    # same dimer expressed with the general off-axis code path (tiny transverse offset)
    g = Geometry(centers=((0.25, 0, 0), (0.75, 1e-9, 0)), radii=(R, R))
    a = assemble_capacitance(1.1, g, problem.lattice).C
    b = assemble_capacitance(1.1, problem.geometry, problem.lattice).C
    assert np.max(np.abs(a - b)) < 1e-7


def test_capacitance_is_quasiperiodic_in_alpha(problem):
    a = assemble_capacitance(0.4, problem.geometry, problem.lattice)
    b = assemble_capacitance(0.4 + 2 * np.pi, problem.geometry, problem.lattice)
    assert np.allclose(a.C, b.C) and b.alpha == pytest.approx(0.4)


def test_generalized_scaling(problem):
    C = assemble_capacitance(0.9, problem.geometry, problem.lattice)
    G = generalized(C, MaterialSpec((1, 1)), problem.geometry)
    assert np.allclose(G.Ccal, C.C / VOL)
    # PT material: diag(a + ib, a - ib) C / |D|
    G2 = generalized(C, MaterialSpec((1 + 0.6j, 1 - 0.6j)), problem.geometry)
    assert np.allclose(G2.Ccal, np.diag([1 + 0.6j, 1 - 0.6j]) @ C.C / VOL)
    b = 0.7 - 1.3j
    G3 = generalized(C, MaterialSpec((b**2 * (1 + 0.6j), b**2 * (1 - 0.6j))), problem.geometry)
    assert np.allclose(G3.Ccal, b**2 * G2.Ccal, rtol=1e-14, atol=0)


def test_hermitian_limit_bands(problem):
    bs = band_structure(199, problem.geometry, problem.lattice, MaterialSpec((1.0, 2.0)))
    lam = bs.eigenvalues
    assert bs.alphas.size == 199 and not np.any(bs.alphas == 0)
    assert np.max(np.abs(lam.imag)) < 1e-9 * np.max(np.abs(lam))
    assert np.min(lam.real) > 0
    # explicit 2x2 formula for eig(diag(V) C / |D|)
    C = assemble_capacitance_grid(bs.alphas, problem.geometry, problem.lattice) / VOL
    V = np.array([1.0, 2.0])
    A = V[:, None] * C
    tr = A[:, 0, 0] + A[:, 1, 1]
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    disc = np.sqrt(tr**2 - 4 * det)
    ref = np.sort(np.stack([(tr - disc) / 2, (tr + disc) / 2], axis=1).real, axis=1)
    assert np.allclose(np.sort(lam.real, axis=1), ref, rtol=1e-10)


def test_band_structure_two_bands_with_gap(problem):
    lam = band_structure(199, problem.geometry, problem.lattice, MaterialSpec((1.0, 1.0))).eigenvalues
    low, high = np.sort(lam.real, axis=1).T
    assert low.max() < high.min()  # hermitian dimer chain: gap between the two bands


def test_band_scaling(problem):
    b = 1.3 + 0.4j
    m = problem.material
    lam = band_structure(50, problem.geometry, problem.lattice, m).eigenvalues
    lam_b = band_structure(50, problem.geometry, problem.lattice, m.scaled(b**2)).eigenvalues
    for x, y in zip(lam, lam_b):
        assert np.max(np.min(np.abs(b**2 * x[:, None] - y[None, :]), axis=1)) < 1e-11 * np.abs(y).max()


def test_band_export(problem):
    bs = band_structure(3, problem.geometry, problem.lattice, problem.material)
    assert bs.header()[:3] == ["alpha", "re(lambda1)", "im(lambda1)"]
    assert len(bs.to_rows()) == 3 and len(bs.to_rows()[0]) == len(bs.header())
    assert np.all(bs.omegas.real >= 0)


@pytest.mark.parametrize("n", [2, 3, 198, 199])
def test_uniform_grid(n):
    a, w = uniform_grid(n)
    assert a.size == n and not np.any(a == 0)
    assert np.all((a > -np.pi) & (a <= np.pi)) and w.sum() == pytest.approx(1)


def test_graded_grid_is_symmetric_and_exact_on_smooth():
    a, w = graded_grid(199)
    assert not np.any(a == 0)
    # node set is symmetric under alpha -> -alpha modulo 2 pi
    gap = np.abs(np.exp(-1j * a)[:, None] - np.exp(1j * a)[None, :]).min(axis=1)
    assert gap.max() < 1e-12
    assert np.sum(w * np.cos(a) ** 2) == pytest.approx(0.5, abs=1e-9)
    # log singularity at alpha = 0: avg log|2 sin(alpha/2)| = 0, high-order convergence
    errs = []
    for n in (199, 399, 799):
        a, w = graded_grid(n)
        errs.append(abs(np.sum(w * np.log(np.abs(2 * np.sin(a / 2))))))
    assert errs[0] < 2e-8 and errs[1] < errs[0] / 8 and errs[2] < errs[1] / 8
    with pytest.raises(ValueError):
        bz_grid(10, rule="simpson")


def test_finite_single_cell_isolated(problem):
    M = finite_chain_matrix(1, problem.geometry, problem.lattice, problem.material, couplings=False)
    assert np.allclose(M, np.diag(4 * np.pi * R / VOL * problem.material.array))


def test_finite_defect_placement(problem):
    d = DefectSpec({(0, 0): 0.5 + 0j, (-2, 1): 2 + 0j})
    C = finite_capacitance(10, problem.geometry, problem.lattice)
    M = finite_chain_matrix(10, problem.geometry, problem.lattice, problem.material, d, capacitance=C)
    i0 = site_index(10, 2, 0, 0)
    assert i0 == 10
    assert np.allclose(M[i0], 0.5 / VOL * C[i0])
    assert np.allclose(M[site_index(10, 2, -2, 1)], 2 / VOL * C[site_index(10, 2, -2, 1)])
    assert list(chain_cells(5)) == [-2, -1, 0, 1, 2]
    with pytest.raises(DefectOutOfRange):
        finite_chain_matrix(4, problem.geometry, problem.lattice, problem.material, DefectSpec({(2, 0): 1}))


def _hausdorff(a, b):
    d = np.abs(a[:, None] - b[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_finite_spectrum_fills_bands(problem):
    # fixed reference set, dense near alpha = 0 where the lower band edge is log-steep
    a, _ = graded_grid(2001)
    C = assemble_capacitance_grid(a, problem.geometry, problem.lattice) / VOL
    bands = np.linalg.eigvals(problem.material.array[None, :, None] * C).ravel()
    dists = []
    for n in (50, 100, 200):
        lam = np.linalg.eigvals(finite_chain_matrix(n, problem.geometry, problem.lattice, problem.material))
        dists.append(_hausdorff(lam, bands))
    assert dists[0] > dists[1] > dists[2]


def test_hermitian_finite_spectrum_real(problem):
    m = MaterialSpec((1.0, 2.0))
    lam = np.linalg.eigvals(finite_chain_matrix(60, problem.geometry, problem.lattice, m))
    assert np.max(np.abs(lam.imag)) < 1e-10 * np.max(np.abs(lam))


def test_single_defect_adds_at_most_two_outliers(problem):
    bands = band_set(problem, 100, 199)
    d = DefectSpec({(0, 0): 0.5 + 0.6j})
    lam = np.linalg.eigvals(finite_chain_matrix(100, problem.geometry, problem.lattice, problem.material, d))
    lam0 = np.linalg.eigvals(finite_chain_matrix(100, problem.geometry, problem.lattice, problem.material))
    margin = 1.5 * np.min(np.abs(lam0[:, None] - bands[None, :]), axis=1).max()
    outside = np.sum(np.min(np.abs(lam[:, None] - bands[None, :]), axis=1) > margin)
    assert 1 <= outside <= 2


def test_validate_rejects_overlap_in_finite():
    g = Geometry(centers=((0.1, 0, 0), (0.6, 0, 0)), radii=(0.2, 0.2))
    validate_config(g, Lattice(1.0), MaterialSpec((1, 1)))
