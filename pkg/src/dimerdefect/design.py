"""Inverse design: defect material parameters from target eigenfrequencies.

One target has a closed form, two targets reduce to a quadratic in the first
perturbation, and n targets on n sites are solved by damped Newton on the
determinant conditions.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .capacitance import BandContext
from .core import TOL, ConfigError, MathematicalRefusal, NumericalFailure, check_frequency
from .defect import I_matrix, characteristic_double, characteristic_single, toeplitz_block


class ZeroIntegral(MathematicalRefusal):
    """The single-defect integral vanishes: no finite defect realizes omega."""


class DegenerateQuadratic(MathematicalRefusal):
    pass


class ZeroDenominator(MathematicalRefusal):
    pass


class VerificationFailed(NumericalFailure):
    pass


class SingularJacobian(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


# --- one target ----------------------------------------------------------------

@dataclass(frozen=True)
class DesignResultSingle:
    omega: complex
    V1_def: complex
    J: complex
    residual: float


def design_single(omega: complex, ctx: BandContext, w_tol: float = TOL.w_set,
                  design_tol: float = TOL.design) -> DesignResultSingle:
    """Defect on resonator 1 of cell 0 with a mode at ``omega``: ``V1 (1 - 1/J)``."""
    omega = check_frequency(omega)
    J = complex(I_matrix(omega, ctx)[0, 0])
    if abs(J) < w_tol:
        raise ZeroIntegral(f"single-defect integral vanishes at omega = {omega} (|J| = {abs(J):.3g})")
    V1 = ctx.material.V[0]
    V1_def = V1 * (1.0 - 1.0 / J)
    residual = abs(characteristic_single(omega, V1_def, ctx).value) / abs(V1)
    if not residual < design_tol:
        raise VerificationFailed(f"back-substitution residual {residual:.3g} at omega = {omega}")
    return DesignResultSingle(omega, V1_def, J, residual)


# --- two targets ---------------------------------------------------------------

@dataclass(frozen=True)
class DoubleRoot:
    X1: complex
    V_def: tuple[complex, complex]
    residuals: tuple[float, float]
    verified: bool


@dataclass(frozen=True)
class DesignResultDouble:
    omegas: tuple[complex, complex]
    I1: np.ndarray
    I2: np.ndarray
    coefficients: tuple[complex, complex, complex]
    roots: tuple[DoubleRoot, ...]
    primary: int

    @property
    def V_def(self) -> tuple[complex, complex]:
        return self.roots[self.primary].V_def

    @property
    def residuals(self) -> tuple[float, float]:
        return self.roots[self.primary].residuals


def double_quadratic(I1: np.ndarray, I2: np.ndarray, V1: complex) -> tuple[complex, complex, complex]:
    """Coefficients ``(A, B, C)`` of ``A X1^2 + B X1 + C = 0``.

    Expansion of ``(V1 + I1_11 X1)(X1 det I2 + V1 I2_22) =
    (V1 + I2_11 X1)(X1 det I1 + V1 I1_22)``, which equates the second
    perturbation demanded by each target.
    """
    d1 = np.linalg.det(I1)
    d2 = np.linalg.det(I2)
    A = I1[0, 0] * d2 - I2[0, 0] * d1
    B = V1 * (d2 + I1[0, 0] * I2[1, 1] - d1 - I2[0, 0] * I1[1, 1])
    C = V1**2 * (I2[1, 1] - I1[1, 1])
    return complex(A), complex(B), complex(C)


def quadratic_roots(A: complex, B: complex, C: complex) -> tuple[complex, complex]:
    """Both roots, computed without cancellation."""
    disc = cmath.sqrt(B * B - 4 * A * C)
    q = -0.5 * (B + disc if abs(B + disc) >= abs(B - disc) else B - disc)
    if q == 0:
        return 0j, 0j
    return q / A, C / q


def second_perturbation(X1: complex, I: np.ndarray, V1: complex, V2: complex) -> tuple[complex, complex]:
    """``X2`` making ``det(V + X I) = 0`` for given ``X1``; returns ``(X2, denominator)``."""
    den = X1 * np.linalg.det(I) + V1 * I[1, 1]
    if den == 0:
        return complex("nan"), 0j
    return complex(-V2 * (V1 + I[0, 0] * X1) / den), complex(den)


def design_double(omega1: complex, omega2: complex, ctx: BandContext, w_tol: float = TOL.w_set,
                  design_tol: float = TOL.design) -> DesignResultDouble:
    """Both resonators of cell 0 defected so that ``omega1`` and ``omega2`` are modes."""
    omega1, omega2 = check_frequency(omega1), check_frequency(omega2)
    if omega1 == omega2:
        raise DegenerateQuadratic("targets coincide")
    V1, V2 = ctx.material.V
    I1 = I_matrix(omega1, ctx)
    I2 = I_matrix(omega2, ctx)
    A, B, C = double_quadratic(I1, I2, V1)
    # A is a difference of two products; compare it with their size, since near
    # coincident targets shrink all coefficients together
    scale = abs(I1[0, 0] * np.linalg.det(I2)) + abs(I2[0, 0] * np.linalg.det(I1))
    if scale == 0 or abs(A) < w_tol * scale:
        raise DegenerateQuadratic(
            f"leading coefficient vanishes (|A| = {abs(A):.3g}, scale {scale:.3g})"
        )
    roots = []
    zero_den = 0
    for X1 in quadratic_roots(A, B, C):
        X2a, den_a = second_perturbation(X1, I1, V1, V2)
        X2b, den_b = second_perturbation(X1, I2, V1, V2)
        if min(abs(den_a), abs(den_b)) < w_tol * abs(V1):
            zero_den += 1
            continue
        X2 = 0.5 * (X2a + X2b)
        V_def = (V1 + X1, V2 + X2)
        norm = abs(V1 * V2)
        res = tuple(abs(characteristic_double(w, V_def, ctx).value) / norm for w in (omega1, omega2))
        roots.append(DoubleRoot(X1, V_def, res, max(res) < design_tol))
    if not roots:
        raise ZeroDenominator("second perturbation is singular for both quadratic roots")
    verified = [r for r in roots if r.verified]
    if not verified:
        best = min(max(r.residuals) for r in roots)
        raise VerificationFailed(f"no quadratic root back-substitutes (best residual {best:.3g})")
    V = np.array([V1, V2])
    primary = min(range(len(verified)), key=lambda i: np.linalg.norm(np.array(verified[i].V_def) - V))
    return DesignResultDouble((omega1, omega2), I1, I2, (A, B, C), tuple(verified), primary)


# --- n targets -----------------------------------------------------------------

@dataclass(frozen=True)
class DesignResultN:
    omegas: tuple[complex, ...]
    sites: tuple[tuple[int, int], ...]
    V_def: tuple[complex, ...]
    x: tuple[complex, ...]
    residuals: tuple[float, ...]
    iterations: int
    history: list = field(default_factory=list, compare=False, repr=False)


def toeplitz_submatrix(omega: complex, sites, ctx: BandContext) -> np.ndarray:
    """Restriction of the block Toeplitz operator to the defect sites.

    Entry ``(a, b)`` is ``(T^{m_b - m_a}(omega))_{i_a i_b}`` for sites
    ``a = (m_a, i_a)`` and ``b = (m_b, i_b)``.
    """
    blocks = {}
    n = len(sites)
    T = np.empty((n, n), dtype=complex)
    for a, (ma, ia) in enumerate(sites):
        for b, (mb, ib) in enumerate(sites):
            k = mb - ma
            if k not in blocks:
                blocks[k] = toeplitz_block(k, omega, ctx).T
            T[a, b] = blocks[k][ia, ib]
    return T


def _residuals_and_jacobian(x: np.ndarray, Ts: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    n = x.size
    F = np.empty(n, dtype=complex)
    Jac = np.empty((n, n), dtype=complex)
    eye = np.eye(n)
    for k, T in enumerate(Ts):
        Amat = eye - x[:, None] * T
        F[k] = np.linalg.det(Amat)
        for j in range(n):
            Aj = Amat.copy()
            Aj[j] = T[j]
            Jac[k, j] = -np.linalg.det(Aj)
    return F, Jac


def design_n(omegas, sites, ctx: BandContext, seed=None, max_iter: int = 100,
             tol: float = 1e-13, design_tol: float = TOL.design) -> DesignResultN:
    """Solve ``det(Id - diag(x) T_sub(omega_k)) = 0`` for ``k = 1..n``.

    Unknowns are the relative perturbations ``x_j = V_def_j / V_{i_j} - 1`` on
    ``sites = [(cell, resonator), ...]``. Without a ``seed`` the iteration
    starts from closed-form designs (n <= 2 in cell 0) or from the
    single-site solutions ``x_j = 1 / T_sub(omega_j)_jj``.
    """
    omegas = tuple(check_frequency(w) for w in omegas)
    sites = tuple((int(m), int(i)) for m, i in sites)
    n = len(omegas)
    if n < 1 or len(sites) != n:
        raise ConfigError("design_n needs as many distinct sites as targets (n >= 1)")
    if len(set(sites)) != n:
        raise ConfigError("defect sites must be distinct")
    if len(set(omegas)) != n:
        raise ConfigError("targets must be pairwise distinct")
    nres = ctx.Ccal.shape[1]
    if any(not 0 <= i < nres for _, i in sites):
        raise ConfigError("resonator index out of range")
    V = ctx.material.array
    Vs = np.array([V[i] for _, i in sites])
    Ts = [toeplitz_submatrix(w, sites, ctx) for w in omegas]

    if seed is not None:
        x = np.asarray(seed, dtype=complex) / Vs - 1.0
        if x.shape != (n,):
            raise ConfigError("seed must hold one V_def per site")
    elif n == 1 and sites[0] == (0, 0):
        x = np.array([design_single(omegas[0], ctx).V1_def / Vs[0] - 1.0])
    elif n == 2 and sorted(sites) == [(0, 0), (0, 1)]:
        d = design_double(omegas[0], omegas[1], ctx)
        vd = dict(zip([(0, 0), (0, 1)], d.V_def))
        x = np.array([vd[s] for s in sites]) / Vs - 1.0
    else:
        x = np.array([1.0 / T[j, j] for j, T in enumerate(Ts)], dtype=complex)

    F, Jac = _residuals_and_jacobian(x, Ts)
    fnorm = np.max(np.abs(F))
    history = [fnorm]
    it = 0
    while fnorm > tol and it < max_iter:
        it += 1
        if not np.all(np.isfinite(Jac)) or np.linalg.cond(Jac) > 1.0 / TOL.singular:
            raise SingularJacobian(f"Jacobian singular at iteration {it}")
        step = np.linalg.solve(Jac, -F)
        lam = 1.0
        while True:
            x_new = x + lam * step
            F_new, Jac_new = _residuals_and_jacobian(x_new, Ts)
            f_new = np.max(np.abs(F_new))
            if f_new < fnorm or lam < 1e-6:
                break
            lam *= 0.5
        if not f_new < fnorm:
            break
        x, F, Jac, fnorm = x_new, F_new, Jac_new, f_new
        history.append(fnorm)
    residuals = tuple(float(abs(f)) for f in F)
    if not max(residuals) < design_tol:
        raise NoConvergence(f"Newton stalled at max residual {max(residuals):.3g} after {it} steps")
    V_def = tuple(complex(v) for v in Vs * (1.0 + x))
    return DesignResultN(omegas, sites, V_def, tuple(complex(v) for v in x), residuals, it, history)
