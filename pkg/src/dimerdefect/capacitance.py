"""Capacitance matrices of the periodic chain and of truncated finite chains.

All assembly uses the monopole (constant surface density) approximation: a
sphere carrying total charge q produces the potential q G(x - c) outside
itself and the constant -q / (4 pi R) on its own surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    TOL,
    DefectSpec,
    DimerDefectError,
    Geometry,
    Lattice,
    MaterialSpec,
    NumericalFailure,
    Problem,
)
from .greens import greens_alpha, greens_on_axis, reduce_alpha, self_sum

_FOUR_PI = 4.0 * math.pi
GRADING_ORDER = 4


class SingularSystem(NumericalFailure):
    pass


class DefectOutOfRange(DimerDefectError):
    pass


@dataclass(frozen=True)
class CapacitanceMatrix:
    C: np.ndarray
    alpha: float


@dataclass(frozen=True)
class GeneralizedCapacitanceMatrix:
    Ccal: np.ndarray
    alpha: float
    material: MaterialSpec


# --- single-alpha assembly ---------------------------------------------------

def _potential_matrices(alphas: np.ndarray, geometry: Geometry, lattice: Lattice,
                        couplings: bool, tol: float) -> np.ndarray:
    L = lattice.period
    n = geometry.resonators_per_cell
    radii = np.asarray(geometry.radii, dtype=float)
    S = np.zeros((alphas.size, n, n), dtype=complex)
    for i in range(n):
        S[:, i, i] = -1.0 / (_FOUR_PI * radii[i])
    if not couplings:
        return S
    lattice_self = -self_sum(alphas, L) / _FOUR_PI
    centers = np.asarray(geometry.centers, dtype=float)
    collinear = geometry.is_collinear()
    for i in range(n):
        S[:, i, i] += lattice_self
        for j in range(n):
            if i == j:
                continue
            diff = centers[i] - centers[j]
            if collinear:
                S[:, i, j] = greens_on_axis(float(diff[0]), alphas, L, tol)
            else:
                S[:, i, j] = [greens_alpha(diff, a, L, max(tol, 1e-12)).value for a in alphas]
    return S


def assemble_capacitance_grid(alphas, geometry: Geometry, lattice: Lattice,
                              couplings: bool = True, tol: float = TOL.lattice_sum) -> np.ndarray:
    """Stack of C^alpha for every alpha in ``alphas`` (each already reduced)."""
    alphas = np.asarray(alphas, dtype=float)
    S = _potential_matrices(alphas, geometry, lattice, couplings, tol)
    try:
        cond = np.linalg.cond(S)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if np.any(~np.isfinite(cond)) or np.any(cond > 1.0 / TOL.singular):
        raise SingularSystem("potential matrix is singular at some alpha")
    return -np.linalg.inv(S)


def assemble_capacitance(alpha: float, geometry: Geometry, lattice: Lattice,
                         tol: float = TOL.lattice_sum, couplings: bool = True) -> CapacitanceMatrix:
    """Quasiperiodic capacitance matrix ``C^alpha`` (monopole order)."""
    a = reduce_alpha(alpha, lattice.period)
    C = assemble_capacitance_grid(np.array([a]), geometry, lattice, couplings, tol)[0]
    return CapacitanceMatrix(C=C, alpha=a)


def generalized(C: CapacitanceMatrix, material: MaterialSpec,
                geometry: Geometry) -> GeneralizedCapacitanceMatrix:
    """Scale row i of ``C`` by ``V_i / |D_i|``."""
    scale = material.array / geometry.volumes
    if scale.size != C.C.shape[0]:
        raise ValueError("material and capacitance sizes differ")
    return GeneralizedCapacitanceMatrix(Ccal=scale[:, None] * C.C, alpha=C.alpha, material=material)


# --- Brillouin-zone grids ----------------------------------------------------

def uniform_grid(n: int, period: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint rule with constant step on (-pi/L, pi/L], avoiding alpha = 0.

    Odd ``n`` uses the right endpoints; even ``n`` shifts by half a step.
    Weights are normalised to sum to one (they include the 1/|Y*| factor).
    """
    if n < 2:
        raise ValueError("grid size must be at least 2")
    h = 2.0 * math.pi / n
    shift = 1.0 if n % 2 else 0.5
    alphas = (-math.pi + h * (np.arange(n) + shift)) / period
    return alphas, np.full(n, 1.0 / n)


def graded_grid(n: int, period: float = 1.0, order: int = GRADING_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint rule with constant step in a sigmoidal variable (Kress).

    ``C^alpha`` has a logarithmic singularity at alpha = 0, which limits the
    plain endpoint rule to first order. The substitution clusters nodes at
    alpha = 0 with ``order`` vanishing derivatives and leaves the rule
    periodic, so the integrals converge at high order.
    """
    if n < 2:
        raise ValueError("grid size must be at least 2")
    p = float(order)
    h = 2.0 * math.pi / (n + 1)
    s = h * np.arange(1, n + 1)

    def v(x):
        return (1 / p - 0.5) * ((math.pi - x) / math.pi) ** 3 + (1 / p) * (x - math.pi) / math.pi + 0.5

    def dv(x):
        return -3 * (1 / p - 0.5) * ((math.pi - x) / math.pi) ** 2 / math.pi + (1 / p) / math.pi

    va, vb = v(s) ** p, v(2 * math.pi - s) ** p
    w = 2 * math.pi * va / (va + vb)
    dw = 2 * math.pi * p * (
        v(s) ** (p - 1) * dv(s) * vb + v(2 * math.pi - s) ** (p - 1) * dv(2 * math.pi - s) * va
    ) / (va + vb) ** 2
    alphas = np.where(w > math.pi, w - 2 * math.pi, w)
    weights = dw * h / (2 * math.pi)
    keep = alphas != 0.0
    weights = weights[keep]
    # integrate constants exactly; the correction is far below the rule's error
    return alphas[keep] / period, weights / weights.sum()


def bz_grid(n: int, period: float = 1.0, rule: str = "graded") -> tuple[np.ndarray, np.ndarray]:
    if rule == "graded":
        return graded_grid(n, period)
    if rule == "uniform":
        return uniform_grid(n, period)
    raise ValueError(f"unknown quadrature rule {rule!r}")


# --- band context ------------------------------------------------------------

@dataclass(frozen=True)
class BandContext:
    """Precomputed ``C^alpha`` and ``Ccal^alpha`` on a quadrature grid."""

    geometry: Geometry
    lattice: Lattice
    material: MaterialSpec
    alphas: np.ndarray
    weights: np.ndarray
    C: np.ndarray
    Ccal: np.ndarray
    eigenvalues: np.ndarray
    rule: str = "graded"
    band_tol: float = TOL.band
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def grid_size(self) -> int:
        return int(self.alphas.size)

    @property
    def brillouin_measure(self) -> float:
        return self.lattice.brillouin_measure

    def with_material(self, material: MaterialSpec) -> "BandContext":
        """Same geometry and grid, different periodic material."""
        Ccal = (material.array / self.geometry.volumes)[None, :, None] * self.C
        return BandContext(
            geometry=self.geometry, lattice=self.lattice, material=material,
            alphas=self.alphas, weights=self.weights, C=self.C, Ccal=Ccal,
            eigenvalues=np.linalg.eigvals(Ccal), rule=self.rule, band_tol=self.band_tol,
        )

    def refined(self, grid_size: int) -> "BandContext":
        return make_context(
            Problem(self.lattice, self.geometry, self.material), grid_size, self.rule, self.band_tol
        )


def make_context(problem: Problem, grid_size: int = 199, rule: str = "graded",
                 band_tol: float = TOL.band) -> BandContext:
    alphas, weights = bz_grid(grid_size, problem.lattice.period, rule)
    C = assemble_capacitance_grid(alphas, problem.geometry, problem.lattice)
    Ccal = (problem.material.array / problem.geometry.volumes)[None, :, None] * C
    return BandContext(
        geometry=problem.geometry, lattice=problem.lattice, material=problem.material,
        alphas=alphas, weights=weights, C=C, Ccal=Ccal, eigenvalues=np.linalg.eigvals(Ccal),
        rule=rule, band_tol=band_tol,
    )


# --- band structure ----------------------------------------------------------

@dataclass(frozen=True)
class BandSample:
    alphas: np.ndarray
    eigenvalues: np.ndarray  # (n_alpha, n_bands), sorted by real part per alpha

    @property
    def omegas(self) -> np.ndarray:
        """Principal square roots (Re >= 0, cut on the negative reals)."""
        return np.sqrt(self.eigenvalues)

    def to_rows(self) -> list[list[float]]:
        rows = []
        for a, lam, om in zip(self.alphas, self.eigenvalues, self.omegas):
            row = [float(a)]
            for z in lam:
                row += [z.real, z.imag]
            for z in om:
                row += [z.real, z.imag]
            rows.append(row)
        return rows

    def header(self) -> list[str]:
        n = self.eigenvalues.shape[1]
        cols = ["alpha"]
        cols += [f"{p}(lambda{j + 1})" for j in range(n) for p in ("re", "im")]
        cols += [f"{p}(omega{j + 1})" for j in range(n) for p in ("re", "im")]
        return cols


def _sort_bands(lam: np.ndarray) -> np.ndarray:
    order = np.lexsort((lam.imag, lam.real), axis=-1) if lam.ndim == 1 else None
    if order is not None:
        return lam[order]
    idx = np.argsort(lam.real + 1e-12 * lam.imag, axis=1)
    return np.take_along_axis(lam, idx, axis=1)


def band_structure(grid_size: int, geometry: Geometry, lattice: Lattice,
                   material: MaterialSpec) -> BandSample:
    """Spectra of ``Ccal^alpha`` on the uniform endpoint grid."""
    alphas, _ = uniform_grid(grid_size, lattice.period)
    C = assemble_capacitance_grid(alphas, geometry, lattice)
    Ccal = (material.array / geometry.volumes)[None, :, None] * C
    return BandSample(alphas=alphas, eigenvalues=_sort_bands(np.linalg.eigvals(Ccal)))


# --- finite chains -------------------------------------------------------------

def chain_cells(num_cells: int) -> np.ndarray:
    """Cell indices of a centred truncation: -floor(N/2) .. ceil(N/2) - 1."""
    if num_cells < 1:
        raise ValueError("num_cells must be at least 1")
    return np.arange(-(num_cells // 2), num_cells - num_cells // 2)


def site_index(num_cells: int, n_res: int, cell: int, resonator: int) -> int:
    first = -(num_cells // 2)
    k = cell - first
    if not (0 <= k < num_cells and 0 <= resonator < n_res):
        raise DefectOutOfRange(
            f"site (cell {cell}, resonator {resonator}) outside the {num_cells}-cell chain"
        )
    return k * n_res + resonator


def finite_capacitance(num_cells: int, geometry: Geometry, lattice: Lattice,
                       couplings: bool = True) -> np.ndarray:
    """Free-space monopole capacitance matrix of the truncated chain."""
    cells = chain_cells(num_cells)
    n = geometry.resonators_per_cell
    centers = np.asarray(geometry.centers, dtype=float)
    shifts = np.zeros((cells.size, 1, 3))
    shifts[:, 0, 0] = cells * lattice.period
    pos = (centers[None, :, :] + shifts).reshape(-1, 3)
    radii = np.tile(np.asarray(geometry.radii, dtype=float), cells.size)
    if couplings:
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        np.fill_diagonal(dist, 1.0)
        S = -1.0 / (_FOUR_PI * dist)
    else:
        S = np.zeros((pos.shape[0], pos.shape[0]))
    np.fill_diagonal(S, -1.0 / (_FOUR_PI * radii))
    if np.linalg.cond(S) > 1.0 / TOL.singular:
        raise SingularSystem("finite potential matrix is singular")
    _ = n
    return -np.linalg.inv(S)


def chain_parameters(num_cells: int, material: MaterialSpec,
                     defects: DefectSpec | None = None) -> np.ndarray:
    n = len(material.V)
    V = np.tile(material.array, num_cells)
    for (cell, res), v in (defects.entries.items() if defects else ()):
        V[site_index(num_cells, n, cell, res)] = v
    return V


def finite_chain_matrix(num_cells: int, geometry: Geometry, lattice: Lattice,
                        material: MaterialSpec, defects: DefectSpec | None = None,
                        couplings: bool = True, capacitance: np.ndarray | None = None) -> np.ndarray:
    """Generalized capacitance matrix of the centred ``num_cells`` truncation.

    Row ``k * n + i`` belongs to resonator ``i`` of the k-th cell from the left;
    defected sites use their ``V_def``. A precomputed ``capacitance`` from
    :func:`finite_capacitance` may be passed to skip the inversion.
    """
    C = capacitance if capacitance is not None else finite_capacitance(
        num_cells, geometry, lattice, couplings)
    V = chain_parameters(num_cells, material, defects)
    vol = np.tile(geometry.volumes, num_cells)
    return (V / vol)[:, None] * C
