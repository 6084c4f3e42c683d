# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels. Same API as ``asiaudit._pykernels``.

Sums use Neumaier compensation in a fixed left-to-right order, so a given
input always yields the same bits.
"""

import numpy as np

from libc.math cimport fabs, sqrt, copysign

cdef double TINY = 1e-300


cdef inline double _csum(const double[:] x) noexcept nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, c = 0.0, t, v
    for i in range(n):
        v = x[i]
        t = s + v
        if fabs(s) >= fabs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


cdef inline double _cdot(const double[:] x, const double[:] y) noexcept nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, c = 0.0, t, v
    for i in range(n):
        v = x[i] * y[i]
        t = s + v
        if fabs(s) >= fabs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def compensated_sum(x):
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    return _csum(xv)


def compensated_dot(x, y):
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    if xv.shape[0] != yv.shape[0]:
        raise ValueError("length mismatch")
    return _cdot(xv, yv)


def householder(A, y):
    """Householder triangularisation; returns ``(R, Q^T y)``."""
    cdef double[::1, :] a = np.array(A, dtype=np.float64, order="F", copy=True)
    cdef double[::1] b = np.array(y, dtype=np.float64, copy=True)
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1]
    cdef Py_ssize_t j, c, i, m = min(n, k)
    cdef double normx, alpha, vnorm2, s, f, v0
    cdef double[::1] v = np.empty(n, dtype=np.float64)
    with nogil:
        for j in range(m):
            for i in range(j, n):
                v[i - j] = a[i, j]
            normx = sqrt(_cdot(v[: n - j], v[: n - j]))
            if normx == 0.0:
                continue
            alpha = -copysign(normx, v[0])
            v[0] = v[0] - alpha
            vnorm2 = _cdot(v[: n - j], v[: n - j])
            if vnorm2 == 0.0:
                continue
            for c in range(j + 1, k):
                s = _cdot(v[: n - j], a[j:, c])
                f = 2.0 * s / vnorm2
                for i in range(j, n):
                    a[i, c] = a[i, c] - f * v[i - j]
            s = _cdot(v[: n - j], b[j:])
            f = 2.0 * s / vnorm2
            for i in range(j, n):
                b[i] = b[i] - f * v[i - j]
            a[j, j] = alpha
            for i in range(j + 1, n):
                a[i, j] = 0.0
    R = np.triu(np.asarray(a)[:k, :k])
    return R, np.asarray(b)


def betacf(double a, double b, double x, int max_iter, double eps):
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d, h, aa, delta
    cdef int m, m2
    d = 1.0 - qab * x / qap
    if fabs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < eps:
            return h, m
    return h, -1
