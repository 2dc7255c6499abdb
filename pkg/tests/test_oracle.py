from __future__ import annotations

import numpy as np
import pytest

from dimerdefect.core import DefectSpec
from dimerdefect.design import design_double, design_single
from dimerdefect.oracle import NoDefectMode, finite_spectrum, localization_report


@pytest.fixture(scope="module")
def single_design(ctx):
    w = 1.2 - 0.4j
    return w, design_single(w, ctx).V1_def


def test_undefected_chain_has_no_defects(problem, cap100):
    s = finite_spectrum(100, problem, DefectSpec(), capacitance=cap100)
    assert s.eigenvalues.size == 200
    assert s.defect_indices.size == 0
    with pytest.raises(NoDefectMode):
        localization_report(s)


def test_bulk_modes_are_delocalized(problem, cap100):
    s = finite_spectrum(100, problem, DefectSpec(), capacitance=cap100)
    p = np.abs(s.eigenvectors) ** 2
    pr = p.sum(axis=0) ** 2 / np.sum(p**2, axis=0)
    bulk = s.classification == "bulk"
    assert np.median(pr[bulk]) > 0.2 * 2 * s.num_cells


def test_single_design_recovered(problem, cap100, single_design):
    w, v = single_design
    s = finite_spectrum(100, problem, DefectSpec({(0, 0): v}), targets=[w], capacitance=cap100)
    assert s.defect_indices.size == 1
    assert abs(s.defect_frequencies[0] - w) < 0.05 * abs(w)
    assert s.classification.size == 200 and set(s.classification) <= {"bulk", "defect", "edge"}


def test_double_design_recovered(ctx, problem, cap100):
    w1, w2 = 1.4 - 1.0j, 1.05 - 1.07j
    d = design_double(w1, w2, ctx)
    defects = DefectSpec({(0, 0): d.V_def[0], (0, 1): d.V_def[1]})
    s = finite_spectrum(100, problem, defects, targets=[w1, w2], capacitance=cap100)
    assert s.defect_indices.size == 2
    for w in (w1, w2):
        assert np.min(np.abs(s.defect_frequencies - w)) < 0.05 * abs(w)


def test_localization_of_designed_mode(problem, cap100, single_design):
    w, v = single_design
    s = finite_spectrum(100, problem, DefectSpec({(0, 0): v}), targets=[w], capacitance=cap100)
    r = localization_report(s, omega=w)
    assert r.fraction_within(10) >= 0.9
    assert all(0 <= m <= 1 for m in r.mass_within.values())
    assert list(r.mass_within.values()) == sorted(r.mass_within.values())
    assert r.participation_ratio < 5
    assert r.decay_rate > 0 and np.isfinite(r.fit_residual)
    # the 1/|x| coupling gives algebraic tails: a power law fits better than an exponential
    assert r.power_law_exponent > 0 and r.power_law_residual < 0.1
    assert r.power_law_residual < r.fit_residual


def test_truncation_stability(problem, cap100, cap200, single_design):
    w, v = single_design
    d = DefectSpec({(0, 0): v})
    a = finite_spectrum(100, problem, d, targets=[w], capacitance=cap100).defect_eigenvalues[0]
    b = finite_spectrum(200, problem, d, targets=[w], capacitance=cap200).defect_eigenvalues[0]
    assert abs(a - b) < 1e-3 * abs(b)


def test_scalar_multiple_spectrum(problem, cap100, single_design):
    _, v = single_design
    b = 0.9 + 0.4j
    d = DefectSpec({(0, 0): v})
    pre = finite_spectrum(100, problem, d, capacitance=cap100)
    post_problem = problem.__class__(problem.lattice, problem.geometry, problem.material.scaled(b**2))
    post = finite_spectrum(100, post_problem, d.scaled(b**2), capacitance=cap100)
    for lam, vec in zip(pre.eigenvalues, pre.eigenvectors.T):
        j = np.argmin(np.abs(post.eigenvalues - b**2 * lam))
        assert abs(post.eigenvalues[j] - b**2 * lam) < 1e-10 * abs(b**2 * lam)
        assert abs(abs(np.vdot(post.eigenvectors[:, j], vec)) - 1) < 1e-8


def test_nearest_defect_and_margin(problem, cap100, single_design):
    w, v = single_design
    s = finite_spectrum(100, problem, DefectSpec({(0, 0): v}), targets=[w], capacitance=cap100)
    assert s.nearest_defect(w) == s.defect_indices[0]
    s2 = finite_spectrum(100, problem, DefectSpec({(0, 0): v}), gap_margin=1e9, capacitance=cap100)
    assert s2.defect_indices.size == 0
    with pytest.raises(ValueError):
        finite_spectrum(0, problem)
