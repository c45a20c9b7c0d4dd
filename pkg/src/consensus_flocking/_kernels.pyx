# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 core for the failure-weighted consensus and alignment dynamics.

Same signatures and return conventions as ``_fallback``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, isfinite

cnp.import_array()

cdef enum:
    FAMILY_CONSTANT = 0
    FAMILY_POWERLAW = 1
    FAMILY_TABULATED = 2


cdef inline double _phi(double r, int family, double c, double beta,
                        const double[::1] tx, const double[::1] ty) nogil:
    cdef Py_ssize_t lo, hi, mid, m
    if family == FAMILY_CONSTANT:
        return c
    if family == FAMILY_POWERLAW:
        return c / pow(1.0 + r, beta)
    m = tx.shape[0]
    if r <= tx[0]:
        return ty[0]
    if r >= tx[m - 1]:
        return ty[m - 1]
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tx[mid] <= r:
            lo = mid
        else:
            hi = mid
    return ty[lo] + (ty[hi] - ty[lo]) * (r - tx[lo]) / (tx[hi] - tx[lo])


cdef void _weights(const double[:, ::1] x, const double[:, ::1] M, double[:, ::1] W,
                   int family, double c, double beta,
                   const double[::1] tx, const double[::1] ty, int normalized) nogil:
    """W[i, j] = lambda_i / N * M_ij * phi(|x_i - x_j|)."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j, k
    cdef double s, diff, phi, total
    for i in range(n):
        total = 0.0
        for j in range(n):
            s = 0.0
            for k in range(d):
                diff = x[j, k] - x[i, k]
                s += diff * diff
            phi = _phi(sqrt(s), family, c, beta, tx, ty)
            total += phi
            W[i, j] = M[i, j] * phi
        if normalized:
            total = 1.0 / total
        else:
            total = 1.0 / n
        for j in range(n):
            W[i, j] *= total


cdef void _apply(const double[:, ::1] W, const double[:, ::1] y, double[:, ::1] out) nogil:
    """out_i = sum_j W_ij (y_j - y_i)."""
    cdef Py_ssize_t n = y.shape[0], d = y.shape[1], i, j, k
    cdef double acc
    for i in range(n):
        for k in range(d):
            acc = 0.0
            for j in range(n):
                acc += W[i, j] * (y[j, k] - y[i, k])
            out[i, k] = acc


cdef void _axpy(const double[:, ::1] x, double a, const double[:, ::1] k, double[:, ::1] out) nogil:
    cdef Py_ssize_t i, j
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            out[i, j] = x[i, j] + a * k[i, j]


cdef bint _all_finite(const double[:, ::1] x) nogil:
    cdef Py_ssize_t i, j
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            if not isfinite(x[i, j]):
                return False
    return True


def integrate_first(x0, const double[::1] times, const cnp.int64_t[::1] seg_index, M_stack,
                    int family, double c, double beta, tab_x, tab_y, int normalized):
    cdef Py_ssize_t K = times.shape[0] - 1, n = x0.shape[0], d = x0.shape[1]
    cdef Py_ssize_t step, i, j
    cdef double h
    cdef double[:, ::1] M
    cdef double[:, :, ::1] Ms = np.ascontiguousarray(M_stack, dtype=np.float64)
    cdef const double[::1] tx = np.ascontiguousarray(tab_x, dtype=np.float64)
    cdef const double[::1] ty = np.ascontiguousarray(tab_y, dtype=np.float64)
    X_arr = np.empty((K + 1, n, d))
    cdef double[:, :, ::1] X = X_arr
    cdef double[:, ::1] x = np.array(x0, dtype=np.float64, order="C")
    cdef double[:, ::1] tmp = np.empty((n, d))
    cdef double[:, ::1] k1 = np.empty((n, d))
    cdef double[:, ::1] k2 = np.empty((n, d))
    cdef double[:, ::1] k3 = np.empty((n, d))
    cdef double[:, ::1] k4 = np.empty((n, d))
    cdef double[:, ::1] W = np.empty((n, n))
    cdef Py_ssize_t bad = -1
    X[0, :, :] = x
    with nogil:
        for step in range(K):
            h = times[step + 1] - times[step]
            M = Ms[seg_index[step]]
            _weights(x, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, x, k1)
            _axpy(x, 0.5 * h, k1, tmp)
            _weights(tmp, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, tmp, k2)
            _axpy(x, 0.5 * h, k2, tmp)
            _weights(tmp, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, tmp, k3)
            _axpy(x, h, k3, tmp)
            _weights(tmp, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, tmp, k4)
            for i in range(n):
                for j in range(d):
                    x[i, j] = x[i, j] + (h / 6.0) * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
            if not _all_finite(x):
                bad = step
                break
            X[step + 1, :, :] = x
    if bad >= 0:
        return X_arr[: bad + 1], bad
    return X_arr, -1


def integrate_second(x0, v0, const double[::1] times, const cnp.int64_t[::1] seg_index, M_stack,
                     int family, double c, double beta, tab_x, tab_y, int normalized):
    cdef Py_ssize_t K = times.shape[0] - 1, n = x0.shape[0], d = x0.shape[1]
    cdef Py_ssize_t step, i, j
    cdef double h
    cdef double[:, ::1] M
    cdef double[:, :, ::1] Ms = np.ascontiguousarray(M_stack, dtype=np.float64)
    cdef const double[::1] tx = np.ascontiguousarray(tab_x, dtype=np.float64)
    cdef const double[::1] ty = np.ascontiguousarray(tab_y, dtype=np.float64)
    X_arr = np.empty((K + 1, n, d))
    V_arr = np.empty((K + 1, n, d))
    cdef double[:, :, ::1] X = X_arr
    cdef double[:, :, ::1] V = V_arr
    cdef double[:, ::1] x = np.array(x0, dtype=np.float64, order="C")
    cdef double[:, ::1] v = np.array(v0, dtype=np.float64, order="C")
    cdef double[:, ::1] tx_ = np.empty((n, d))
    cdef double[:, ::1] tv_ = np.empty((n, d))
    cdef double[:, ::1] b1 = np.empty((n, d))
    cdef double[:, ::1] b2 = np.empty((n, d))
    cdef double[:, ::1] b3 = np.empty((n, d))
    cdef double[:, ::1] b4 = np.empty((n, d))
    cdef double[:, ::1] W = np.empty((n, n))
    cdef Py_ssize_t bad = -1
    X[0, :, :] = x
    V[0, :, :] = v
    with nogil:
        for step in range(K):
            h = times[step + 1] - times[step]
            M = Ms[seg_index[step]]
            # stage 1: a1 = v, b1 = F(x, v)
            _weights(x, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, v, b1)
            # stage 2: a2 = v + h/2 b1
            _axpy(x, 0.5 * h, v, tx_)
            _axpy(v, 0.5 * h, b1, tv_)
            _weights(tx_, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, tv_, b2)
            # stage 3: a3 = v + h/2 b2, evaluated at x + h/2 a2
            for i in range(n):
                for j in range(d):
                    tx_[i, j] = x[i, j] + 0.5 * h * (v[i, j] + 0.5 * h * b1[i, j])
            _axpy(v, 0.5 * h, b2, tv_)
            _weights(tx_, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, tv_, b3)
            # stage 4: a4 = v + h b3, evaluated at x + h a3
            for i in range(n):
                for j in range(d):
                    tx_[i, j] = x[i, j] + h * (v[i, j] + 0.5 * h * b2[i, j])
            _axpy(v, h, b3, tv_)
            _weights(tx_, M, W, family, c, beta, tx, ty, normalized)
            _apply(W, tv_, b4)
            for i in range(n):
                for j in range(d):
                    # sum of a-stages: 6v + h(b1 + b2 + b3)
                    x[i, j] = x[i, j] + (h / 6.0) * (
                        v[i, j] + 2.0 * (v[i, j] + 0.5 * h * b1[i, j])
                        + 2.0 * (v[i, j] + 0.5 * h * b2[i, j]) + (v[i, j] + h * b3[i, j]))
                    v[i, j] = v[i, j] + (h / 6.0) * (b1[i, j] + 2.0 * b2[i, j] + 2.0 * b3[i, j] + b4[i, j])
            if not (_all_finite(x) and _all_finite(v)):
                bad = step
                break
            X[step + 1, :, :] = x
            V[step + 1, :, :] = v
    if bad >= 0:
        return X_arr[: bad + 1], V_arr[: bad + 1], bad
    return X_arr, V_arr, -1
