"""Pure numpy implementations of the hot kernels.

Signatures mirror ``_kernels.pyx`` exactly; :mod:`dimerdefect.kernels`
picks one of the two at import time.
"""

from __future__ import annotations

import numpy as np


def lerch_phi1(theta, a, coeffs):
    """Phi(e^{i theta}, 1, a) from the expansion about z = 1.

    ``coeffs[n] = B_n(1 - a) / (n * n!)`` for n >= 1 (``coeffs[0]`` unused),
    ``coeffs[-1]`` holds ``-digamma(a) - euler_gamma``. Valid for
    0 < |theta| < 2 pi.
    """
    theta = np.asarray(theta, dtype=float)
    u = -1j * theta
    poly = np.zeros_like(u)
    for c in coeffs[-2:0:-1]:
        poly = (poly + c) * u
    log_u = np.log(np.abs(theta)) - 0.5j * np.pi * np.sign(theta)
    return np.exp(a * u) * (-log_u + coeffs[-1] - poly)


def kummer_remainder(t, rho, theta, m_lo, m_hi):
    """sum_{m=m_lo}^{m_hi} e^{i theta m} (1/sqrt((t+m)^2 + rho^2) - 1/|t+m|).

    The subtracted on-axis term is skipped where t + m == 0.
    """
    m = np.arange(m_lo, m_hi + 1, dtype=float)
    y = t + m
    r = np.sqrt(y * y + rho * rho)
    ay = np.abs(y)
    with np.errstate(divide="ignore"):
        diff = np.where(ay > 0, 1.0 / r - 1.0 / np.where(ay > 0, ay, 1.0), 1.0 / r)
    return complex(np.sum(np.exp(1j * theta * m) * diff))


def bz_average(c11, c12, c21, c22, lam1, lam2, weights, phase, w2):
    """Weighted Brillouin-zone averages of C (C - w2 Id)^{-1} for many w2.

    Returns ``(out, mindist)`` where ``out[p]`` holds the four entries
    (11, 12, 21, 22) of ``sum_k weights[k] phase[k] (det C_k Id - w2 C_k) /
    det(C_k - w2 Id)`` and ``mindist[p]`` the distance from ``w2[p]`` to the
    nearest node eigenvalue.
    """
    w2 = np.asarray(w2, dtype=complex)
    P = w2.shape[0]
    out = np.empty((P, 4), dtype=complex)
    mindist = np.empty(P, dtype=float)
    det = c11 * c22 - c12 * c21
    wp = weights * phase
    chunk = max(1, 2_000_000 // max(1, len(weights)))
    for s in range(0, P, chunk):
        z = w2[s:s + chunk, None]
        den = (c11 - z) * (c22 - z) - c12 * c21
        f = wp / den
        out[s:s + chunk, 0] = np.sum(f * (det - z * c11), axis=1)
        out[s:s + chunk, 1] = np.sum(f * (-z * c12), axis=1)
        out[s:s + chunk, 2] = np.sum(f * (-z * c21), axis=1)
        out[s:s + chunk, 3] = np.sum(f * (det - z * c22), axis=1)
        mindist[s:s + chunk] = np.minimum(
            np.min(np.abs(lam1 - z), axis=1), np.min(np.abs(lam2 - z), axis=1)
        )
    return out, mindist
