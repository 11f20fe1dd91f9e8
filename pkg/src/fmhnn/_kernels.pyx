# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ABM time loop for the (ring) memristor Hopfield network.

Same contract as :func:`fmhnn._purepy.abm_native`. History sums within the
current base block (or the whole history in direct mode) are accumulated
here; far-field FFT squares are delegated to :class:`fmhnn._history.History`
at block boundaries.
"""

import numpy as np
from libc.math cimport tanh, fabs, isfinite

from fmhnn._history import History, scales


cdef inline void ring_rhs(const double* y, double* out, Py_ssize_t nn, Py_ssize_t p,
                          double d, double b1, double b2, double b3, double b4,
                          double k) noexcept nogil:
    cdef Py_ssize_t i, j, idx
    cdef double x1, x2, t1, t2, cur, c, s
    for i in range(nn):
        x1 = y[3 * i]
        x2 = y[3 * i + 1]
        t1 = tanh(x1)
        t2 = tanh(x2)
        cur = k * y[3 * i + 2] * (x1 - x2)
        out[3 * i] = -x1 + b1 * t1 + b2 * t2 + cur
        out[3 * i + 1] = -x2 + b3 * t1 + b4 * t2 - cur
        out[3 * i + 2] = x1 - x2
    if p > 0 and d != 0.0:
        c = d / (2.0 * p)
        for i in range(nn):
            s = 0.0
            for j in range(-p, p + 1):
                idx = (i + j + nn) % nn
                s += y[3 * idx] - y[3 * i]
            out[3 * i] += c * s


cdef inline bint all_finite(const double* v, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        if not isfinite(v[i]):
            return False
    return True


def abm_native(double[::1] model, double[::1] y0, double alpha, double h,
               Py_ssize_t n, Py_ssize_t block, int iterations, double threshold):
    cdef double b1 = model[0], b2 = model[1], b3 = model[2], b4 = model[3]
    cdef double k = model[4], d = model[5]
    cdef Py_ssize_t nn = <Py_ssize_t>model[6], p = <Py_ssize_t>model[7]
    cdef Py_ssize_t dim = 3 * nn
    if y0.shape[0] != dim:
        raise ValueError("initial state does not match the model dimension")

    hist = History(alpha, n, dim, block)
    cp_, cc_ = scales(alpha, h)
    cdef double cp = cp_, cc = cc_
    cdef const double[::1] B = hist.B
    cdef const double[::1] A = hist.A
    cdef const double[::1] a0 = hist.a0
    cdef double[:, ::1] F = hist.F
    cdef double[:, ::1] FP = hist.far_pred
    cdef double[:, ::1] FC = hist.far_corr

    Yarr = np.empty((n + 1, dim))
    cdef double[:, ::1] Y = Yarr
    cdef double[::1] ps = np.empty(dim)
    cdef double[::1] cs = np.empty(dim)
    cdef double[::1] y = np.empty(dim)
    cdef double[::1] tmp = np.empty(dim)

    cdef Py_ssize_t m, j, c, lo, it
    cdef double wb, wa, norm

    Y[0, :] = y0
    ring_rhs(&y0[0], &F[0, 0], nn, p, d, b1, b2, b3, b4, k)
    if not all_finite(&F[0, 0], dim):
        return Yarr[:1], -1, 0
    if block > 0 and 1 % block == 0:
        hist.flush(0)

    for m in range(1, n + 1):
        with nogil:
            lo = 0 if block <= 0 else (m // block) * block
            for c in range(dim):
                ps[c] = FP[m, c]
                cs[c] = FC[m, c] + a0[m] * F[0, c]
            for j in range(lo, m):
                wb = B[m - j]
                if j >= 1:
                    wa = A[m - j]
                    for c in range(dim):
                        ps[c] += wb * F[j, c]
                        cs[c] += wa * F[j, c]
                else:
                    for c in range(dim):
                        ps[c] += wb * F[j, c]
            for c in range(dim):
                y[c] = y0[c] + cp * ps[c]
                cs[c] = y0[c] + cc * cs[c]
            for it in range(iterations):
                ring_rhs(&y[0], &tmp[0], nn, p, d, b1, b2, b3, b4, k)
                if not all_finite(&tmp[0], dim):
                    break
                for c in range(dim):
                    y[c] = cs[c] + cc * tmp[c]
            norm = 0.0
            for c in range(dim):
                Y[m, c] = y[c]
                if fabs(y[c]) > norm:
                    norm = fabs(y[c])
        if not all_finite(&tmp[0], dim):
            return Yarr[:m], -1, m
        if norm > threshold:
            return Yarr[: m + 1], m, -1
        ring_rhs(&y[0], &F[m, 0], nn, p, d, b1, b2, b3, b4, k)
        if not all_finite(&F[m, 0], dim):
            return Yarr[: m + 1], -1, m
        if block > 0 and (m + 1) % block == 0:
            hist.flush(m)
    return Yarr, -1, -1
