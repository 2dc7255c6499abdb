"""Instantly switched materials and quasi-harmonic defect modes.

Scaling every material parameter (defects included) by ``b^2`` at ``t = 0``
scales the generalized capacitance matrix by ``b^2`` and hence every
frequency by ``b``; a mode at ``omega^-`` before the switch continues at
``omega^+ = b omega^-`` with the same spatial profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .capacitance import BandContext
from .core import (
    TOL,
    DefectSpec,
    MaterialSpec,
    MathematicalRefusal,
    Problem,
    TemporalProfile,
    ZeroFrequency,
    check_frequency,
)
from .defect import characteristic_single
from .design import DesignResultSingle, VerificationFailed, design_single
from .oracle import finite_spectrum, localization_report


class ZeroB(MathematicalRefusal):
    pass


class WrongHalfPlane(MathematicalRefusal):
    pass


@dataclass(frozen=True)
class SnellResult:
    ok: bool
    residual_kappa: float
    residual_rho: float


def snell_check(omega_minus: complex, omega_plus: complex, kappa_ratio: complex,
                rho_ratio: complex, tol: float = 1e-12) -> SnellResult:
    """``omega+/omega- == kappa+/kappa- == rho-/rho+`` within ``tol``."""
    omega_minus, omega_plus = complex(omega_minus), complex(omega_plus)
    if omega_minus == 0:
        raise ZeroFrequency("omega_minus must be nonzero")
    if not (np.isfinite(kappa_ratio) and np.isfinite(rho_ratio)):
        raise ValueError("material ratios must be finite")
    b = omega_plus / omega_minus
    rk = abs(b - complex(kappa_ratio))
    rr = abs(b - complex(rho_ratio))
    return SnellResult(rk < tol and rr < tol, rk, rr)


@dataclass(frozen=True)
class InstantSwitchMaterial:
    """Material for ``t < 0`` and ``t >= 0``; the latter is ``b^2`` times the former."""

    pre: MaterialSpec
    pre_defects: DefectSpec
    b: complex

    @property
    def post(self) -> MaterialSpec:
        return self.pre.scaled(self.b**2)

    @property
    def post_defects(self) -> DefectSpec:
        return self.pre_defects.scaled(self.b**2)

    @property
    def kappa_ratio(self) -> complex:
        # bulk modulus scales by b, density by 1/b
        return self.b

    @property
    def rho_ratio(self) -> complex:
        return self.b


def make_switch(material: MaterialSpec, defects: DefectSpec | None, b: complex) -> InstantSwitchMaterial:
    b = complex(b)
    if b == 0 or not np.isfinite(b):
        raise ZeroB("switch ratio b must be finite and nonzero")
    return InstantSwitchMaterial(material, defects if defects is not None else DefectSpec(), b)


@dataclass(frozen=True)
class TemporalDesign:
    profile: TemporalProfile
    switch: InstantSwitchMaterial
    design: DesignResultSingle
    residual_pre: float
    residual_post: float


def design_temporal(omega_minus: complex, omega_plus: complex, ctx: BandContext,
                    design_tol: float = TOL.design) -> TemporalDesign:
    """Defect on resonator 1 of cell 0 with a mode jumping from ``omega-`` to ``omega+``."""
    omega_minus, omega_plus = check_frequency(omega_minus), check_frequency(omega_plus)
    if omega_minus == 0 or omega_plus == 0:
        raise ZeroFrequency("temporal design needs nonzero frequencies")
    profile = TemporalProfile(omega_minus, omega_plus)
    d = design_single(omega_minus, ctx, design_tol=design_tol)
    switch = make_switch(ctx.material, DefectSpec({(0, 0): d.V1_def}), profile.b)
    V1 = ctx.material.V[0]
    res_pre = abs(characteristic_single(omega_minus, d.V1_def, ctx).value) / abs(V1)
    post_ctx = ctx.with_material(switch.post)
    post_def = switch.post_defects.entries[(0, 0)]
    res_post = abs(characteristic_single(omega_plus, post_def, post_ctx).value) / abs(switch.post.V[0])
    if not max(res_pre, res_post) < design_tol:
        raise VerificationFailed(f"temporal design residuals {res_pre:.3g}, {res_post:.3g}")
    return TemporalDesign(profile, switch, d, res_pre, res_post)


@dataclass(frozen=True)
class QuasiHarmonicSpec:
    profile: TemporalProfile
    temporal_localized: bool
    spatial_localized: bool | None = None
    mass_within: float | None = None


def temporal_localized(omega_minus: complex, omega_plus: complex) -> bool:
    return omega_minus.imag > 0 and omega_plus.imag < 0


def design_spatiotemporal(omega_minus: complex, omega_plus: complex, ctx: BandContext,
                          design_tol: float = TOL.design, validate_cells: int | None = 100,
                          radius: int = 10, min_mass: float = 0.9) -> tuple[QuasiHarmonicSpec, TemporalDesign]:
    """Temporal design with ``Im omega- > 0 > Im omega+`` enforced strictly.

    With ``validate_cells`` set, the pre-switch mode of a truncated chain is
    checked for at least ``min_mass`` of its squared magnitude within
    ``radius`` cells of the defect (the post-switch mode has the same profile).
    """
    omega_minus, omega_plus = check_frequency(omega_minus), check_frequency(omega_plus)
    if not omega_minus.imag > 0:
        raise WrongHalfPlane(f"omega- = {omega_minus} must lie in the open upper half-plane")
    if not omega_plus.imag < 0:
        raise WrongHalfPlane(f"omega+ = {omega_plus} must lie in the open lower half-plane")
    td = design_temporal(omega_minus, omega_plus, ctx, design_tol)
    spatial = mass = None
    if validate_cells:
        problem = Problem(ctx.lattice, ctx.geometry, ctx.material)
        spec = finite_spectrum(validate_cells, problem, td.switch.pre_defects, targets=[omega_minus])
        mass = localization_report(spec, omega=omega_minus).fraction_within(radius)
        spatial = mass >= min_mass
    return QuasiHarmonicSpec(td.profile, temporal_localized(omega_minus, omega_plus), spatial, mass), td


# --- time envelope -----------------------------------------------------------------

def envelope(t, omega_minus: complex, omega_plus: complex) -> np.ndarray:
    """``|exp(-i omega(t) t)|`` with ``omega(t) = omega-`` for t < 0, ``omega+`` after."""
    t = np.asarray(t, dtype=float)
    w = np.where(t < 0, complex(omega_minus), complex(omega_plus))
    return np.abs(np.exp(-1j * w * t))


def envelope_energy(T: float, omega_minus: complex, omega_plus: complex) -> float:
    """``int_{-T}^{T} |exp(-i omega(t) t)|^2 dt`` in closed form."""
    total = 0.0
    for w, sign in ((complex(omega_minus), -1.0), (complex(omega_plus), 1.0)):
        g = 2.0 * w.imag * sign  # |e^{-iwt}|^2 = e^{2 Im(w) t}; integrate over t in [0, T] * sign
        total += T if g == 0 else (np.expm1(g * T) / g)
    return float(total)


def envelope_energy_quadrature(T: float, omega_minus: complex, omega_plus: complex,
                               n: int = 20001) -> float:
    """Trapezoidal value of :func:`envelope_energy`, as an independent check."""
    t = np.linspace(-T, T, n)
    return float(trapezoid(envelope(t, omega_minus, omega_plus) ** 2, t))


def doubling_ratio(omega_minus: complex, omega_plus: complex, T: float | None = None,
                   quadrature: bool = True) -> float:
    """``E(2T) / E(T)`` for the squared envelope; close to 1 when integrable."""
    if T is None:
        T = 200.0 / min(abs(omega_minus.imag), abs(omega_plus.imag))
    f = envelope_energy_quadrature if quadrature else envelope_energy
    return f(2 * T, omega_minus, omega_plus) / f(T, omega_minus, omega_plus)
