"""Truncated-chain oracle: dense spectra, defect classification, localization.

Eigenvalues of the finite generalized capacitance matrix are compared with a
sampled band set of the infinite structure. Those far from every band sample
and not concentrated at the open ends are reported as defect eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capacitance import band_structure, finite_capacitance, finite_chain_matrix, chain_cells
from .core import DefectSpec, DimerDefectError, NumericalFailure, Problem

EDGE_CELLS = 5
EDGE_FRACTION = 0.5
MARGIN_FLOOR = 1e-3


class EigenFailure(NumericalFailure):
    pass


class NoDefectMode(DimerDefectError):
    pass


@dataclass(frozen=True)
class FiniteSpectrum:
    num_cells: int
    resonators_per_cell: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, unit 2-norm
    classification: np.ndarray  # "bulk" | "defect" | "edge"
    band_distance: np.ndarray
    gap_margin: float

    @property
    def defect_indices(self) -> np.ndarray:
        idx = np.flatnonzero(self.classification == "defect")
        return idx[np.argsort(-self.band_distance[idx])]

    @property
    def defect_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.defect_indices]

    @property
    def defect_frequencies(self) -> np.ndarray:
        return np.sqrt(self.defect_eigenvalues)

    def cell_mass(self, index: int) -> np.ndarray:
        v = self.eigenvectors[:, index]
        return np.sum(np.abs(v.reshape(self.num_cells, self.resonators_per_cell)) ** 2, axis=1)

    def nearest_defect(self, omega: complex) -> int:
        """Index of the defect eigenvalue whose square root is nearest ``omega``."""
        idx = self.defect_indices
        if idx.size == 0:
            raise NoDefectMode("no defect-classified eigenvalue")
        return int(idx[np.argmin(np.abs(np.sqrt(self.eigenvalues[idx]) - omega))])


def band_set(problem: Problem, num_cells: int, grid_size: int = 199) -> np.ndarray:
    """Sampled eigenvalues of ``Ccal^alpha``; at least ``4 num_cells`` alphas."""
    n = max(grid_size, 4 * num_cells)
    return band_structure(n, problem.geometry, problem.lattice, problem.material).eigenvalues.ravel()


def _distance_to_set(z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return np.min(np.abs(z[:, None] - pts[None, :]), axis=1)


def finite_spectrum(num_cells: int, problem: Problem, defects: DefectSpec | None = None,
                    targets=None, gap_margin: float | None = None, grid_size: int = 199,
                    capacitance: np.ndarray | None = None) -> FiniteSpectrum:
    """Dense eigen-decomposition of the centred ``num_cells`` chain.

    ``gap_margin`` defaults to half the smallest distance from the squared
    ``targets`` to the band set (floor 1e-3); without targets it is a fixed
    fraction of the band-set diameter.
    """
    if num_cells < 1:
        raise ValueError("num_cells must be at least 1")
    defects = problem.defects if defects is None else defects
    M = finite_chain_matrix(num_cells, problem.geometry, problem.lattice, problem.material,
                            defects, capacitance=capacitance)
    try:
        lam, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigenFailure("non-finite eigenvalues")
    bands = band_set(problem, num_cells, grid_size)
    dist = _distance_to_set(lam, bands)
    if gap_margin is None:
        if targets is not None and np.size(targets):
            t2 = np.asarray(targets, dtype=complex).ravel() ** 2
            gap_margin = max(0.5 * float(np.min(_distance_to_set(t2, bands))), MARGIN_FLOOR)
        else:
            diameter = float(np.max(np.abs(bands - bands.mean())))
            gap_margin = max(0.05 * diameter, MARGIN_FLOOR)
    n = problem.geometry.resonators_per_cell
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    mass = np.abs(vecs.reshape(num_cells, n, -1)) ** 2
    cell_mass = mass.sum(axis=1)
    e = min(EDGE_CELLS, num_cells // 2)
    edge_mass = cell_mass[:e].sum(axis=0) + cell_mass[num_cells - e:].sum(axis=0)
    cls = np.full(lam.size, "bulk", dtype=object)
    far = dist > gap_margin
    cls[far] = "defect"
    cls[far & (edge_mass > EDGE_FRACTION)] = "edge"
    return FiniteSpectrum(num_cells, n, lam, vecs, cls.astype(str), dist, float(gap_margin))


@dataclass(frozen=True)
class LocalizationReport:
    eigenvalue: complex
    participation_ratio: float
    mass_within: dict
    decay_rate: float
    fit_residual: float
    power_law_exponent: float
    power_law_residual: float

    def fraction_within(self, radius: int) -> float:
        return self.mass_within[radius]


def localization_report(spectrum: FiniteSpectrum, which: int | None = None, omega: complex | None = None,
                        defect_cell: int = 0, radii=(1, 2, 5, 10), fit_cells: int = 12) -> LocalizationReport:
    """Participation ratio, mass near ``defect_cell`` and decay fits of a mode.

    The mode is the ``which``-th defect eigenvalue (most isolated first) or
    the defect eigenvalue closest to ``omega``.
    """
    idx = spectrum.defect_indices
    if idx.size == 0:
        raise NoDefectMode("no defect-classified eigenvalue in this spectrum")
    if omega is not None:
        k = spectrum.nearest_defect(omega)
    else:
        k = int(idx[which or 0])
    v = spectrum.eigenvectors[:, k]
    p = np.abs(v) ** 2
    pr = float(p.sum() ** 2 / np.sum(p**2))
    cells = chain_cells(spectrum.num_cells)
    cm = spectrum.cell_mass(k)
    dcell = np.abs(cells - defect_cell)
    within = {int(r): float(min(1.0, cm[dcell <= r].sum())) for r in radii}
    # per-distance amplitude, averaged over both sides, fitted away from the defect cell
    dmax = min(fit_cells, int(dcell.max()) - EDGE_CELLS)
    ds, logs = [], []
    for d in range(1, max(dmax, 1) + 1):
        sel = dcell == d
        m = cm[sel].mean() if sel.any() else 0.0
        if m > 1e-28:
            ds.append(d)
            logs.append(0.5 * np.log(m))
    rate, fit_res = _linear_fit(np.array(ds, dtype=float), np.array(logs))
    # the 1/|x| coupling gives algebraic tails, so a power law is fitted as well
    expo, pow_res = _linear_fit(np.log(np.array(ds, dtype=float)), np.array(logs))
    return LocalizationReport(complex(spectrum.eigenvalues[k]), pr, within, rate, fit_res, expo, pow_res)


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Negated slope and RMS residual of a least-squares line."""
    if x.size < 2:
        return float("nan"), float("nan")
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    rms = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    return float(-coef[0]), rms


def shared_capacitance(num_cells: int, problem: Problem) -> np.ndarray:
    """Bare finite capacitance matrix, reusable across materials and defects."""
    return finite_capacitance(num_cells, problem.geometry, problem.lattice)
