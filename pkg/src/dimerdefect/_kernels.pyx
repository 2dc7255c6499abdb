# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py.py`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, log, cos, sin, M_PI

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)


def lerch_phi1(theta, double a, const double[::1] coeffs):
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64).ravel()
    cdef Py_ssize_t n = th.shape[0]
    cdef Py_ssize_t nc = coeffs.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] res = out
    cdef Py_ssize_t i, j
    cdef double t, pr, pi, tmp, lr, li, er, ei, qr, qi
    with nogil:
        for i in range(n):
            t = th[i]
            # Horner in u = -i t, kept in real arithmetic: (p + c) * u
            pr = 0.0
            pi = 0.0
            for j in range(nc - 2, 0, -1):
                tmp = pr + coeffs[j]
                pr = pi * t
                pi = -tmp * t
            lr = log(fabs(t))
            li = -0.5 * M_PI if t > 0 else 0.5 * M_PI
            qr = -lr + coeffs[nc - 1] - pr
            qi = -li - pi
            er = cos(a * t)
            ei = -sin(a * t)
            res[i] = (er * qr - ei * qi) + 1j * (er * qi + ei * qr)
    return out.reshape(np.shape(theta))


def kummer_remainder(double t, double rho, double theta, long m_lo, long m_hi):
    cdef long m
    cdef double y, ay, r, diff
    cdef double complex acc = 0
    with nogil:
        for m in range(m_lo, m_hi + 1):
            y = t + m
            ay = fabs(y)
            r = sqrt(y * y + rho * rho)
            if ay > 0:
                diff = 1.0 / r - 1.0 / ay
            else:
                diff = 1.0 / r
            acc = acc + cexp(1j * theta * m) * diff
    return complex(acc)


def bz_average(const double complex[::1] c11, const double complex[::1] c12,
               const double complex[::1] c21, const double complex[::1] c22,
               const double complex[::1] lam1, const double complex[::1] lam2,
               const double[::1] weights, const double complex[::1] phase, w2_in):
    cdef double complex[::1] w2 = np.ascontiguousarray(w2_in, dtype=np.complex128)
    cdef Py_ssize_t P = w2.shape[0]
    cdef Py_ssize_t N = weights.shape[0]
    out_arr = np.zeros((P, 4), dtype=np.complex128)
    dist_arr = np.empty(P, dtype=np.float64)
    cdef double complex[:, ::1] out = out_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t p, k
    cdef double complex z, det, den, f, s11, s12, s21, s22
    cdef double d, best
    with nogil:
        for p in range(P):
            z = w2[p]
            s11 = 0
            s12 = 0
            s21 = 0
            s22 = 0
            best = 1e300
            for k in range(N):
                det = c11[k] * c22[k] - c12[k] * c21[k]
                den = (c11[k] - z) * (c22[k] - z) - c12[k] * c21[k]
                f = weights[k] * phase[k] / den
                s11 = s11 + f * (det - z * c11[k])
                s12 = s12 + f * (-z * c12[k])
                s21 = s21 + f * (-z * c21[k])
                s22 = s22 + f * (det - z * c22[k])
                d = _cabs(lam1[k] - z)
                if d < best:
                    best = d
                d = _cabs(lam2[k] - z)
                if d < best:
                    best = d
            out[p, 0] = s11
            out[p, 1] = s12
            out[p, 2] = s21
            out[p, 3] = s22
            dist[p] = best
    return out_arr, dist_arr


cdef inline double _cabs(double complex z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)
