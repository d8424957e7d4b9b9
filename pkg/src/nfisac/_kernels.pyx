"""Compiled spherical-wave response kernels.

Fused distance / complex-exponential loops for the innermost primitive of
the simulator. Callers validate inputs; points coinciding with an element
produce non-finite entries which the wrappers detect.
"""

from libc.math cimport cos, sin, sqrt

import numpy as np

cdef double TWO_PI = 6.283185307179586


def steering_matrix(const double[:, ::1] elements, const double[:, ::1] points,
                    double wavelength):
    """Response of every array element to every point, shape (N, P)."""
    cdef Py_ssize_t n = elements.shape[0]
    cdef Py_ssize_t p = points.shape[0]
    out = np.empty((n, p), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double k = TWO_PI / wavelength
    cdef double amp = wavelength / (2.0 * TWO_PI)
    cdef double dx, dy, d, a, ph
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(p):
            dx = elements[i, 0] - points[j, 0]
            dy = elements[i, 1] - points[j, 1]
            d = sqrt(dx * dx + dy * dy)
            a = amp / d
            ph = -k * d
            o[i, j] = a * cos(ph) + 1j * (a * sin(ph))
    return out


def steering_norm_sq(const double[:, ::1] elements, const double[:, ::1] points,
                     double wavelength):
    """Squared 2-norm of the response vector per point, shape (P,)."""
    cdef Py_ssize_t n = elements.shape[0]
    cdef Py_ssize_t p = points.shape[0]
    out = np.empty(p, dtype=np.float64)
    cdef double[::1] o = out
    cdef double amp = wavelength / (2.0 * TWO_PI)
    cdef double amp2 = amp * amp
    cdef double dx, dy, d2, acc
    cdef Py_ssize_t i, j
    for j in range(p):
        acc = 0.0
        for i in range(n):
            dx = elements[i, 0] - points[j, 0]
            dy = elements[i, 1] - points[j, 1]
            d2 = dx * dx + dy * dy
            acc += amp2 / d2
        o[j] = acc
    return out
