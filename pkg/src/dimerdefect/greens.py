"""Quasiperiodic Green's function of the 3D Laplacian for a 1D lattice.

Convention: ``G^alpha(x) = sum_m exp(i alpha m L) G(x + m L e1)`` with
``G(x) = -1 / (4 pi |x|)``, so that ``G^alpha(x + L e1) = exp(-i alpha L)
G^alpha(x)``.

On-axis sums reduce to two Lerch series ``sum_k z^k / (k + a)`` on the unit
circle. These converge too slowly (and too irregularly near z = 1) for
sequence transformations, so they are evaluated from the expansion of
``Phi(z, 1, a)`` about ``z = 1`` in Bernoulli polynomials, which converges
geometrically with ratio ``|alpha L| / 2 pi``. Off-axis points are summed
directly after subtracting the on-axis series (Kummer's transformation),
which leaves an absolutely convergent remainder decaying like ``|m|^-3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, digamma

from . import kernels
from .core import TOL, DimerDefectError, NumericalFailure

_MAX_TERMS = 160
_FOUR_PI = 4.0 * math.pi


class OnSingularPoint(DimerDefectError):
    pass


class NoConvergence(NumericalFailure):
    pass


class ZeroQuasiMomentum(DimerDefectError):
    pass


@dataclass(frozen=True)
class LatticeSumResult:
    value: complex
    est_error: float
    terms_used: int


def reduce_alpha(alpha: float, period: float = 1.0) -> float:
    """Map alpha to the reduced zone (-pi/L, pi/L]; reject alpha = 0."""
    half = math.pi / period
    a = math.remainder(alpha, 2 * half)
    if a == -half:
        a = half
    if a == 0.0:
        raise ZeroQuasiMomentum("alpha = 0 is excluded from the Brillouin zone")
    return a


@lru_cache(maxsize=1)
def _bernoulli_over_factorial() -> np.ndarray:
    b = bernoulli(_MAX_TERMS)
    return np.array([b[k] / math.factorial(k) for k in range(_MAX_TERMS + 1)])


@lru_cache(maxsize=256)
def _lerch_coeffs(a: float, nterms: int) -> np.ndarray:
    # B_n(x)/n! = sum_k (B_k/k!) x^(n-k)/(n-k)!, all terms bounded: no cancellation
    bk = _bernoulli_over_factorial()
    x = 1.0 - a
    xp = np.array([x**j / math.factorial(j) for j in range(nterms + 1)])
    c = np.empty(nterms + 2)
    c[0] = 0.0
    for n in range(1, nterms + 1):
        c[n] = np.dot(bk[: n + 1], xp[n::-1]) / n
    c[-1] = -digamma(a) - np.euler_gamma
    c.setflags(write=False)
    return c


def _terms_needed(theta_max: float, tol: float) -> tuple[int, float]:
    # |B_n(x)| <= 2 zeta(n) n! / (2 pi)^n on [0, 1]; zeta(n) <= 2 for n >= 2
    r = theta_max / (2 * math.pi)
    if r >= 1.0:
        raise NoConvergence("Lerch expansion needs |alpha L| < 2 pi")
    if r == 0.0:
        return 1, 0.0
    for n in range(2, _MAX_TERMS + 1):
        bound = 4.0 * r ** (n + 1) / ((n + 1) * (1.0 - r))
        if bound < tol:
            return n, bound
    raise NoConvergence(f"Lerch expansion did not reach tol {tol:g} within {_MAX_TERMS} terms")


def lerch_phi1(theta, a: float, tol: float = TOL.lattice_sum) -> tuple[np.ndarray, int, float]:
    """``Phi(exp(i theta), 1, a) = sum_{k>=0} exp(i theta k) / (k + a)``.

    Returns ``(values, terms_used, est_error)``. Requires ``0 < |theta| < 2 pi``
    and ``a > 0``. The error estimate is relative to the O(1) scale of the
    series (the prefactor ``exp(a u)`` has unit modulus).
    """
    th = np.asarray(theta, dtype=float)
    if not a > 0:
        raise ValueError("Lerch parameter a must be positive")
    if np.any(th == 0):
        raise ZeroQuasiMomentum("Lerch series diverges at theta = 0")
    nterms, err = _terms_needed(float(np.max(np.abs(th))), tol)
    coeffs = _lerch_coeffs(float(a), nterms)
    return kernels.lerch_phi1(th, float(a), coeffs), nterms, err


def self_sum(alpha, period: float = 1.0):
    """``sum_{m != 0} exp(i alpha m L) / |m L|`` in closed form."""
    theta = np.asarray(alpha, dtype=float) * period
    return -2.0 * np.log(np.abs(2.0 * np.sin(theta / 2.0))) / period


def axis_lattice_sum(
    d: float, alpha: float, period: float = 1.0, tol: float = TOL.lattice_sum
) -> LatticeSumResult:
    """``sum_{m in Z} exp(i alpha m L) / |d - m L|`` for ``0 < d < L``.

    Split into m <= 0 and m >= 1 and written as
    ``Phi(e^{-i theta}, 1, d/L) + e^{i theta} Phi(e^{i theta}, 1, 1 - d/L)``
    with ``theta = alpha L``.
    """
    if not 0.0 < d < period:
        raise ValueError(f"axis_lattice_sum needs 0 < d < L, got d = {d}")
    alpha = reduce_alpha(alpha, period)
    theta = alpha * period
    a = d / period
    left, n1, e1 = lerch_phi1(np.array([-theta]), a, 0.5 * tol * period)
    right, n2, e2 = lerch_phi1(np.array([theta]), 1.0 - a, 0.5 * tol * period)
    value = (left[0] + np.exp(1j * theta) * right[0]) / period
    return LatticeSumResult(complex(value), (e1 + e2) / period, n1 + n2)


def axis_lattice_sums(d: float, alphas: np.ndarray, period: float = 1.0,
                      tol: float = TOL.lattice_sum) -> np.ndarray:
    """Vectorised :func:`axis_lattice_sum` over many alpha (already reduced)."""
    if not 0.0 < d < period:
        raise ValueError(f"axis_lattice_sums needs 0 < d < L, got d = {d}")
    theta = np.asarray(alphas, dtype=float) * period
    a = d / period
    left, _, _ = lerch_phi1(-theta, a, 0.5 * tol * period)
    right, _, _ = lerch_phi1(theta, 1.0 - a, 0.5 * tol * period)
    return (left + np.exp(1j * theta) * right) / period


def greens_on_axis(x1, alphas, period: float = 1.0, tol: float = TOL.lattice_sum) -> np.ndarray:
    """``G^alpha(x1 e1)`` for many reduced alpha; ``x1`` must not be a lattice point."""
    alphas = np.asarray(alphas, dtype=float)
    n0, d = _split(x1 / period)
    d *= period
    if d == 0.0:
        raise OnSingularPoint(f"x1 = {x1} coincides with a lattice source")
    # sum_m e^{i a m L}/|x1 + mL| = e^{-i a n0 L} * axis(d, -a)
    s = axis_lattice_sums(d, -alphas, period, tol)
    return -np.exp(-1j * alphas * n0 * period) * s / _FOUR_PI


def greens_alpha(x, alpha: float, period: float = 1.0, tol: float = 1e-10,
                 term_budget: int = TOL.term_budget) -> LatticeSumResult:
    """Quasiperiodic Green's function ``G^alpha(x)`` at a 3-vector ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError("x must be a 3-vector")
    if not tol > 0:
        raise ValueError("tol must be positive")
    alpha = reduce_alpha(alpha, period)
    x1 = float(x[0])
    rho = float(math.hypot(x[1], x[2]))
    if rho == 0.0:
        n0, d = _split(x1 / period)
        if d == 0.0:
            raise OnSingularPoint(f"x = {x.tolist()} coincides with a lattice source")
        res = axis_lattice_sum(d * period, -alpha, period, tol * _FOUR_PI)
        value = -np.exp(-1j * alpha * n0 * period) * res.value / _FOUR_PI
        return LatticeSumResult(complex(value), res.est_error / _FOUR_PI, res.terms_used)

    # work in units of L
    t = x1 / period
    r = rho / period
    theta = alpha * period
    n0, d = _split(t)
    # the lattice term nearest to x is summed exactly rather than Kummer-subtracted,
    # which avoids cancelling two copies of 1/d when d << rho
    j_near = 0 if d <= 0.5 else 1
    m_near = -j_near - n0
    if d == 0.0:
        axis, base_err, base_terms = complex(self_sum(theta, 1.0)), 0.0, 0
    else:
        axis, base_err, base_terms = _axis_sum_without(d, -theta, j_near, tol)
    base = np.exp(-1j * theta * n0) * axis
    # remainder terms f(m) = 1/sqrt(y^2 + r^2) - 1/|y|, y = t + m, decay like r^2 / (2 |y|^3);
    # the two tails beyond |m + n0| > M are summed by parts (Euler) on the exact terms
    scale = _FOUR_PI * period
    target = tol * scale
    z = complex(np.exp(1j * theta))
    M = max(16, int(math.ceil(8.0 / max(abs(1.0 - z), 1e-300))) if abs(1.0 - z) > 0 else 16)
    M = min(M, max(16, term_budget // 4))
    while True:
        plain = r * r / (2.0 * (M - 1) ** 2)
        tail, tail_err = _remainder_tails(t, r, theta, n0, M)
        if plain < target:
            tail, tail_err = 0j, plain
        if tail_err < target:
            break
        if 4 * M > term_budget:
            raise NoConvergence(
                f"off-axis lattice sum needs more than {term_budget} terms at rho = {rho}"
            )
        M *= 2
    m_lo = -n0 - M
    m_hi = -n0 + M
    remainder = (
        kernels.kummer_remainder(t, r, theta, m_lo, m_near - 1)
        + kernels.kummer_remainder(t, r, theta, m_near + 1, m_hi)
        + np.exp(1j * theta * m_near) / math.hypot(t + m_near, r)
        + tail
    )
    value = -(base + remainder) / scale
    est = (base_err + tail_err) / scale
    return LatticeSumResult(complex(value), float(est), base_terms + (m_hi - m_lo + 1))


_EULER_TERMS = 8


def _split(t: float) -> tuple[int, float]:
    """``t = n0 + d`` with integer ``n0`` and ``0 <= d < 1`` (robust to rounding)."""
    n0 = math.floor(t)
    d = t - n0
    if d >= 1.0:
        n0, d = n0 + 1, 0.0
    return n0, d


def _axis_sum_without(d: float, theta: float, j: int, tol: float) -> tuple[complex, float, int]:
    """``sum_{m != j} exp(i theta m) / |d - m|`` for unit period, ``j`` in {0, 1}.

    Uses ``Phi(w, 1, a) - 1/a = w Phi(w, 1, 1 + a)`` on the series holding the
    excluded term, so no large term is ever subtracted.
    """
    w = complex(np.exp(-1j * theta))
    if j == 0:
        (left,), n1, e1 = lerch_phi1(np.array([-theta]), 1.0 + d, 0.5 * tol)
        (right,), n2, e2 = lerch_phi1(np.array([theta]), 1.0 - d, 0.5 * tol)
        value = w * left + np.exp(1j * theta) * right
    else:
        (left,), n1, e1 = lerch_phi1(np.array([-theta]), d, 0.5 * tol)
        (right,), n2, e2 = lerch_phi1(np.array([theta]), 2.0 - d, 0.5 * tol)
        value = left + np.exp(2j * theta) * right
    return complex(value), e1 + e2, n1 + n2


def _euler_tail(z: complex, c: np.ndarray) -> tuple[complex, float]:
    """sum_{k>=0} z^k c_k from the first values of a smooth sequence (summation by parts).

    Returns the estimate and the size of its last retained term.
    """
    r = z / (1.0 - z)
    acc = 0j
    term = 0j
    for j in range(_EULER_TERMS):
        term = r**j * c[0]
        acc += term
        c = np.diff(c)
    return acc / (1.0 - z), float(abs(term / (1.0 - z)))


def _remainder_tails(t: float, r: float, theta: float, n0: int, M: int) -> tuple[complex, float]:
    z = complex(np.exp(1j * theta))
    if abs(1.0 - z) < 1e-12:
        return 0j, math.inf
    k = np.arange(_EULER_TERMS + 1, dtype=float)
    # right: m = -n0 + M + 1 + k, y = d + M + 1 + k > 0
    y = (t - n0) + M + 1 + k
    fr = 1.0 / np.sqrt(y * y + r * r) - 1.0 / y
    right, er = _euler_tail(z, fr)
    right *= z ** (-n0 + M + 1)
    # left: m = -n0 - M - 1 - k, y = d - M - 1 - k < 0
    y = (t - n0) - M - 1 - k
    fl = 1.0 / np.sqrt(y * y + r * r) - 1.0 / np.abs(y)
    left, el = _euler_tail(z.conjugate(), fl)
    left *= z ** (-n0 - M - 1)
    return right + left, 2.0 * (er + el)
