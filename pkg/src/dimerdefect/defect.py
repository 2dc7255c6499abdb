"""Forward characterization of defect modes.

Everything here is a Brillouin-zone average of the resolvent-type matrix
``Ccal (Ccal - w^2)^{-1}`` on the quadrature grid of a :class:`BandContext`.
For dimers the average is done by the compiled kernel; other cell sizes use a
vectorised numpy solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .capacitance import BandContext, band_structure
from .core import (
    TOL,
    DimensionMismatch,
    DimerDefectError,
    MathematicalRefusal,
    NumericalFailure,
    check_frequency,
    is_pt_symmetric,
)

CHARACTERISTICS = ("pt-loss", "pt-gain", "single", "double")


class OnBand(MathematicalRefusal):
    """``omega^2`` lies within ``band_tol`` of a sampled band eigenvalue."""


class NotPTSymmetric(DimerDefectError):
    pass


class NoConvergence(NumericalFailure):
    pass


class RootOnBand(MathematicalRefusal):
    pass


@dataclass(frozen=True)
class ToeplitzBlock:
    k: int
    T: np.ndarray
    omega: complex
    grid_size: int
    band_distance: float


@dataclass(frozen=True)
class CharacteristicValue:
    omega: complex
    value: complex
    which: str


# --- Brillouin-zone averages ---------------------------------------------------

def resolvent_average(ctx: BandContext, w2, k: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``avg_alpha exp(i alpha k L) Ccal (Ccal - w2)^{-1}`` for each ``w2``.

    Returns ``(M, dist)`` with ``M`` of shape ``(P, N, N)`` and ``dist[p]`` the
    distance from ``w2[p]`` to the nearest grid eigenvalue.
    """
    w2 = np.atleast_1d(np.asarray(w2, dtype=complex))
    phase = np.exp(1j * ctx.alphas * k * ctx.lattice.period)
    n = ctx.Ccal.shape[1]
    if n == 2:
        c = ctx.Ccal
        lam = ctx.eigenvalues
        out, dist = kernels.bz_average(
            np.ascontiguousarray(c[:, 0, 0]), np.ascontiguousarray(c[:, 0, 1]),
            np.ascontiguousarray(c[:, 1, 0]), np.ascontiguousarray(c[:, 1, 1]),
            np.ascontiguousarray(lam[:, 0]), np.ascontiguousarray(lam[:, 1]),
            np.ascontiguousarray(ctx.weights), np.ascontiguousarray(phase), w2,
        )
        return out.reshape(-1, 2, 2), dist
    eye = np.eye(n)
    M = np.empty((w2.size, n, n), dtype=complex)
    dist = np.empty(w2.size)
    wp = ctx.weights * phase
    for p, z in enumerate(w2):
        # Ccal (Ccal - z)^{-1} = Id + z (Ccal - z)^{-1}
        R = np.linalg.inv(ctx.Ccal - z * eye)
        M[p] = eye * np.sum(wp) + z * np.einsum("k,kij->ij", wp, R)
        dist[p] = np.min(np.abs(ctx.eigenvalues - z))
    return M, dist


def _check_band(dist, omega, ctx: BandContext) -> None:
    d = float(np.min(dist))
    if d < ctx.band_tol:
        raise OnBand(f"omega = {omega} is on a band (|omega^2 - lambda| = {d:.3g})")


def toeplitz_block(k: int, omega: complex, ctx: BandContext) -> ToeplitzBlock:
    """``T^k(omega) = -avg exp(i alpha k L) Ccal (Ccal - omega^2)^{-1}``."""
    omega = check_frequency(omega)
    M, dist = resolvent_average(ctx, omega**2, k)
    _check_band(dist, omega, ctx)
    return ToeplitzBlock(int(k), -M[0], omega, ctx.grid_size, float(dist[0]))


def I_matrix(omega: complex, ctx: BandContext) -> np.ndarray:
    """``avg (det Ccal Id - omega^2 Ccal) / det(Ccal - omega^2)``, i.e. ``-T^0``."""
    omega = check_frequency(omega)
    M, dist = resolvent_average(ctx, omega**2, 0)
    _check_band(dist, omega, ctx)
    return M[0]


# --- characteristic functions (vectorised cores) ---------------------------------

def _require_dimer(ctx: BandContext) -> None:
    if ctx.Ccal.shape[1] != 2:
        raise DimensionMismatch("this characteristic is defined for dimers (two resonators per cell)")


def _pt_values(omegas: np.ndarray, ctx: BandContext, gain: bool) -> tuple[np.ndarray, np.ndarray]:
    _require_dimer(ctx)
    if not is_pt_symmetric(ctx.geometry, ctx.material):
        raise NotPTSymmetric("material is not of the form (a + ib, a - ib) on equal spheres")
    V1 = ctx.material.V[0]
    a = V1.real
    s = V1 if gain else V1.conjugate()
    Chat = ctx.C / ctx.geometry.volumes[0]
    c11 = Chat[:, 0, 0][None, :]
    det = (Chat[:, 0, 0] * Chat[:, 1, 1] - Chat[:, 0, 1] * Chat[:, 1, 0])[None, :]
    w2 = (omegas**2)[:, None]
    num = w2**2 - 2 * s * c11 * w2 + s**2 * det
    den = w2**2 - 2 * a * c11 * w2 + abs(V1) ** 2 * det
    vals = ctx.brillouin_measure * np.sum(ctx.weights * num / den, axis=1)
    dist = np.min(np.abs(ctx.eigenvalues.reshape(1, -1) - w2), axis=1)
    return vals, dist


def _single_values(omegas, V1_def, ctx: BandContext):
    _require_dimer(ctx)
    M, dist = resolvent_average(ctx, omegas**2)
    V1 = ctx.material.V[0]
    return V1 + (complex(V1_def) - V1) * M[:, 0, 0], dist


def _double_values(omegas, V_def, ctx: BandContext):
    _require_dimer(ctx)
    M, dist = resolvent_average(ctx, omegas**2)
    V = ctx.material.array
    X = np.asarray(V_def, dtype=complex) - V
    A = np.diag(V)[None, :, :] + X[None, :, None] * M
    return np.linalg.det(A), dist


def characteristic_values(which: str, omegas, ctx: BandContext, V_def=None):
    """Vectorised characteristic values and band distances for an array of omegas."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=complex))
    if which == "pt-loss":
        return _pt_values(omegas, ctx, gain=False)
    if which == "pt-gain":
        return _pt_values(omegas, ctx, gain=True)
    if which == "single":
        if V_def is None:
            raise ValueError("single characteristic needs V_def")
        v = V_def[0] if np.ndim(V_def) else V_def
        return _single_values(omegas, v, ctx)
    if which == "double":
        if V_def is None or np.size(V_def) != 2:
            raise ValueError("double characteristic needs a pair V_def")
        return _double_values(omegas, V_def, ctx)
    raise ValueError(f"unknown characteristic {which!r}; choose from {CHARACTERISTICS}")


def _scalar(which, omega, ctx, V_def=None) -> CharacteristicValue:
    omega = check_frequency(omega)
    vals, dist = characteristic_values(which, omega, ctx, V_def)
    _check_band(dist, omega, ctx)
    return CharacteristicValue(omega, complex(vals[0]), which)


def characteristic_pt_loss(omega: complex, ctx: BandContext) -> CharacteristicValue:
    """Unnormalised integral whose zeros are modes of the loss defect ``V1 -> conj(V1)``."""
    return _scalar("pt-loss", omega, ctx)


def characteristic_pt_gain(omega: complex, ctx: BandContext) -> CharacteristicValue:
    """Mirror of :func:`characteristic_pt_loss` with ``a + ib`` in the numerator."""
    return _scalar("pt-gain", omega, ctx)


def characteristic_single(omega: complex, V1_def: complex, ctx: BandContext) -> CharacteristicValue:
    """``V1 + (V1_def - V1) J(omega)`` for a defect on resonator 1 of cell 0."""
    return _scalar("single", omega, ctx, complex(V1_def))


def characteristic_double(omega: complex, V_def, ctx: BandContext) -> CharacteristicValue:
    """``det(V + (V_def - V) I(omega))`` for both resonators of cell 0 defected."""
    return _scalar("double", omega, ctx, tuple(complex(v) for v in V_def))


def characteristic(which: str, ctx: BandContext, V_def=None) -> Callable[[complex], complex]:
    """Closure ``omega -> value`` suitable for :func:`find_root`."""
    def f(omega: complex) -> complex:
        return _scalar(which, omega, ctx, V_def).value

    f.which = which  # type: ignore[attr-defined]
    return f


# --- heatmaps --------------------------------------------------------------------

@dataclass(frozen=True)
class Heatmap:
    re: np.ndarray
    im: np.ndarray
    values: np.ndarray  # clipped |value|, shape (len(im), len(re)), row-major in Im
    on_band: np.ndarray
    clip: float
    which: str
    band_overlay: np.ndarray  # principal square roots of sampled band eigenvalues


def heatmap(which: str, ctx: BandContext, window: tuple[float, float, float, float],
            resolution: tuple[int, int], clip: float, V_def=None) -> Heatmap:
    """Clipped ``|characteristic|`` on the rectangle ``(re_min, re_max, im_min, im_max)``.

    Pixels within ``band_tol`` of a grid eigenvalue are flagged, not fatal.
    """
    re_min, re_max, im_min, im_max = map(float, window)
    nx, ny = map(int, resolution)
    if not (re_max > re_min and im_max > im_min):
        raise ValueError("heatmap window must have positive area")
    if nx < 1 or ny < 1:
        raise ValueError("heatmap resolution must be positive")
    if not clip > 0:
        raise ValueError("clip must be positive")
    re = np.linspace(re_min, re_max, nx)
    im = np.linspace(im_min, im_max, ny)
    W = (re[None, :] + 1j * im[:, None]).ravel()
    vals, dist = characteristic_values(which, W, ctx, V_def)
    mag = np.abs(vals)
    on_band = (dist < ctx.band_tol) | ~np.isfinite(mag)
    mag = np.where(on_band, clip, np.minimum(mag, clip))
    bands = band_structure(max(ctx.grid_size, 2), ctx.geometry, ctx.lattice, ctx.material)
    return Heatmap(re, im, mag.reshape(ny, nx), on_band.reshape(ny, nx), float(clip), which,
                   bands.omegas)


# --- root finding ------------------------------------------------------------------

@dataclass(frozen=True)
class RootResult:
    omega: complex
    value: complex
    iterations: int


def find_root(func: Callable[[complex], complex], seed: complex, tol: float = TOL.root,
              max_iter: int = 100, step: float = 1e-4, max_modulus: float = 1e6) -> RootResult:
    """Complex secant iteration for ``func(omega) = 0`` started at ``seed``.

    ``func`` may raise :class:`OnBand`; that is reported as :class:`RootOnBand`.
    """
    def f(w):
        try:
            v = func(w)
        except OnBand as exc:
            raise RootOnBand(f"iterate {w} reached a band") from exc
        return complex(getattr(v, "value", v))

    x0 = check_frequency(seed)
    f0 = f(x0)
    if abs(f0) < tol:
        return RootResult(x0, f0, 0)
    x1 = x0 + step * max(1.0, abs(x0))
    f1 = f(x1)
    for it in range(1, max_iter + 1):
        if abs(f1) < tol:
            return RootResult(x1, f1, it)
        denom = f1 - f0
        if denom == 0 or not np.isfinite(denom):
            raise NoConvergence(f"secant step degenerate at omega = {x1}")
        x2 = x1 - f1 * (x1 - x0) / denom
        if not np.isfinite(x2) or abs(x2) > max_modulus:
            raise NoConvergence(f"secant iteration diverged from seed {seed}")
        x0, f0 = x1, f1
        x1, f1 = x2, f(x2)
    if abs(f1) < tol:
        return RootResult(x1, f1, max_iter)
    raise NoConvergence(f"no root within {max_iter} iterations from seed {seed} (|f| = {abs(f1):.3g})")
