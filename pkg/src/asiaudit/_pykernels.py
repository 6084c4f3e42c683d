"""Pure-Python/numpy implementations of the numerical kernels.

Used when the compiled ``_ckernels`` extension is unavailable, or when
``ASIAUDIT_PURE_PYTHON=1`` is set. Sums go through ``math.fsum`` (exactly
rounded), so results never depend on reduction order.
"""

from __future__ import annotations

import math

import numpy as np

TINY = 1e-300


def compensated_sum(x) -> float:
    return math.fsum(np.asarray(x, dtype=np.float64).ravel())


def compensated_dot(x, y) -> float:
    return math.fsum(np.multiply(x, y))


def householder(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduce ``A`` (n x k) to upper-triangular form by Householder reflections.

    Returns ``(R, qty)`` where ``R`` is k x k and ``qty`` is ``Q^T y`` (length n).
    A zero column leaves a zero on the diagonal; the caller decides rank.
    """
    A = np.array(A, dtype=np.float64, order="F", copy=True)
    b = np.array(y, dtype=np.float64, copy=True)
    n, k = A.shape
    for j in range(min(k, n)):
        v = A[j:, j].copy()
        normx = math.sqrt(compensated_dot(v, v))
        if normx == 0.0:
            continue
        alpha = -math.copysign(normx, v[0])
        v[0] -= alpha
        vnorm2 = compensated_dot(v, v)
        if vnorm2 == 0.0:
            continue
        for c in range(j + 1, k):
            s = compensated_dot(v, A[j:, c])
            A[j:, c] -= (2.0 * s / vnorm2) * v
        s = compensated_dot(v, b[j:])
        b[j:] -= (2.0 * s / vnorm2) * v
        A[j, j] = alpha
        A[j + 1 :, j] = 0.0
    return np.triu(A[:k, :k]), b


def betacf(a: float, b: float, x: float, max_iter: int, eps: float) -> tuple[float, int]:
    """Modified Lentz evaluation of the incomplete-beta continued fraction.

    Returns ``(value, iterations)``; ``iterations == -1`` means no convergence.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h, m
    return h, -1
