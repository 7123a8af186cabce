# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels (see ``_kernels_py`` for the reference version
and the meaning of ``mode`` and ``parity``).

The loops evaluate exactly the same expressions as the numpy fallback, so the
two backends are interchangeable. Do not build with -ffast-math: reassociation
would break bitwise agreement.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    PERIODIC = 0
    ONESIDED = 1
    POLE = 2


cdef inline double _d0(const double[:, ::1] a, Py_ssize_t i, Py_ssize_t j,
                       Py_ssize_t n0, Py_ssize_t n1, double h2, int mode,
                       double parity) noexcept nogil:
    cdef Py_ssize_t jr
    cdef double ghost
    if i > 0 and i < n0 - 1:
        return (a[i + 1, j] - a[i - 1, j]) / h2
    if mode == ONESIDED:
        if i == 0:
            return (-3.0 * a[0, j] + 4.0 * a[1, j] - a[2, j]) / h2
        return (3.0 * a[n0 - 1, j] - 4.0 * a[n0 - 2, j] + a[n0 - 3, j]) / h2
    if mode == PERIODIC:
        if i == 0:
            return (a[1, j] - a[n0 - 1, j]) / h2
        return (a[0, j] - a[n0 - 2, j]) / h2
    jr = (j + n1 // 2) % n1
    if i == 0:
        ghost = a[0, jr]
        if parity < 0:
            ghost = -ghost
        return (a[1, j] - ghost) / h2
    ghost = a[n0 - 1, jr]
    if parity < 0:
        ghost = -ghost
    return (ghost - a[n0 - 2, j]) / h2


cdef inline double _d1(const double[:, ::1] a, Py_ssize_t i, Py_ssize_t j,
                       Py_ssize_t n1, double h2) noexcept nogil:
    if j > 0 and j < n1 - 1:
        return (a[i, j + 1] - a[i, j - 1]) / h2
    if j == 0:
        return (a[i, 1] - a[i, n1 - 1]) / h2
    return (a[i, 0] - a[i, n1 - 2]) / h2


def diff0(a, double h, int mode, double parity=1.0):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t n0 = av.shape[0], n1 = av.shape[1], i, j
    out = np.empty((n0, n1), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double h2 = 2.0 * h
    with nogil:
        for i in range(n0):
            for j in range(n1):
                ov[i, j] = _d0(av, i, j, n0, n1, h2, mode, parity)
    return out


def diff1(a, double h):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t n0 = av.shape[0], n1 = av.shape[1], i, j
    out = np.empty((n0, n1), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double h2 = 2.0 * h
    with nogil:
        for i in range(n0):
            for j in range(n1):
                ov[i, j] = _d1(av, i, j, n1, h2)
    return out


def gradient(phi, i11, i12, i22, double h0, double h1, int mode):
    cdef const double[:, ::1] p = np.ascontiguousarray(phi, dtype=np.float64)
    cdef Py_ssize_t n0 = p.shape[0], n1 = p.shape[1], i, j
    cdef const double[:, ::1] a11 = np.ascontiguousarray(np.broadcast_to(i11, (n0, n1)), dtype=np.float64)
    cdef const double[:, ::1] a12 = np.ascontiguousarray(np.broadcast_to(i12, (n0, n1)), dtype=np.float64)
    cdef const double[:, ::1] a22 = np.ascontiguousarray(np.broadcast_to(i22, (n0, n1)), dtype=np.float64)
    g0 = np.empty((n0, n1), dtype=np.float64)
    g1 = np.empty((n0, n1), dtype=np.float64)
    cdef double[:, ::1] o0 = g0
    cdef double[:, ::1] o1 = g1
    cdef double h20 = 2.0 * h0, h21 = 2.0 * h1, d0, d1
    with nogil:
        for i in range(n0):
            for j in range(n1):
                d0 = _d0(p, i, j, n0, n1, h20, mode, 1.0)
                d1 = _d1(p, i, j, n1, h21)
                o0[i, j] = a11[i, j] * d0 + a12[i, j] * d1
                o1[i, j] = a12[i, j] * d0 + a22[i, j] * d1
    return g0, g1


def divergence(v0, v1, sqrt_det, double h0, double h1, int mode):
    cdef const double[:, ::1] a0 = np.ascontiguousarray(v0, dtype=np.float64)
    cdef Py_ssize_t n0 = a0.shape[0], n1 = a0.shape[1], i, j
    cdef const double[:, ::1] a1 = np.ascontiguousarray(v1, dtype=np.float64)
    cdef const double[:, ::1] sq = np.ascontiguousarray(np.broadcast_to(sqrt_det, (n0, n1)), dtype=np.float64)
    # Densitised fluxes are formed first, as in the numpy version.
    w0 = np.empty((n0, n1), dtype=np.float64)
    w1 = np.empty((n0, n1), dtype=np.float64)
    out = np.empty((n0, n1), dtype=np.float64)
    cdef double[:, ::1] w0v = w0
    cdef double[:, ::1] w1v = w1
    cdef double[:, ::1] ov = out
    cdef double h20 = 2.0 * h0, h21 = 2.0 * h1
    with nogil:
        for i in range(n0):
            for j in range(n1):
                w0v[i, j] = sq[i, j] * a0[i, j]
                w1v[i, j] = sq[i, j] * a1[i, j]
        for i in range(n0):
            for j in range(n1):
                ov[i, j] = (_d0(w0v, i, j, n0, n1, h20, mode, 1.0)
                            + _d1(w1v, i, j, n1, h21)) / sq[i, j]
    return out
