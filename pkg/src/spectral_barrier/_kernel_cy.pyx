# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled barrier stream kernel.

One step = shifted Cholesky (dpotrf) + explicit inverse (dpotri) + traces +
one matvec, all in C loops with the GIL released. Protocol matches
_kernel_py.run_stream: returns (rc, step, l, deltas) with rc 0 = ok,
1 = shifted matrix not positive definite, 2 = potential cap exceeded.
"""

from libc.math cimport fabs

from scipy.linalg.cython_lapack cimport dpotrf, dpotri

import numpy as np


cdef int _step(double* A, double* lptr, double phi, double* v,
               double* M, double* w, int p, double pd_tol,
               double cap_slack, double* delta_out) noexcept nogil:
    cdef int i, j, info = 0
    cdef double l = lptr[0]
    cdef double scale = 1.0
    cdef double d, trinv, tr2, Q, num, q, delta, acc, vi
    cdef char uplo = b'L'

    for i in range(p):
        for j in range(p):
            M[i * p + j] = A[i * p + j]
        M[i * p + i] -= l
    for i in range(p):
        d = fabs(M[i * p + i])
        if d > scale:
            scale = d

    # Row-major symmetric M equals its column-major transpose, so LAPACK's
    # 'L' triangle lives in the C-order upper triangle of the buffer.
    dpotrf(&uplo, &p, M, &p, &info)
    if info != 0:
        return 1
    for i in range(p):
        d = M[i * p + i]
        if d * d < pd_tol * scale:
            return 1
    dpotri(&uplo, &p, M, &p, &info)
    if info != 0:
        return 1

    # G = (A - l I)^{-1}; entries G[i, j] for i <= j sit at M[i*p + j].
    trinv = 0.0
    for i in range(p):
        trinv += M[i * p + i]
    if trinv > phi + cap_slack:
        return 2

    tr2 = 0.0
    for i in range(p):
        d = M[i * p + i]
        tr2 += d * d
        for j in range(i + 1, p):
            d = M[i * p + j]
            tr2 += 2.0 * d * d

    for i in range(p):
        acc = 0.0
        for j in range(i):
            acc += M[j * p + i] * v[j]
        for j in range(i, p):
            acc += M[i * p + j] * v[j]
        w[i] = acc

    Q = 0.0
    num = 0.0
    for i in range(p):
        Q += v[i] * w[i]
        num += w[i] * w[i]
    q = num / tr2
    delta = q / (1.0 + 3.0 * phi * q + Q)

    for i in range(p):
        vi = v[i]
        for j in range(p):
            A[i * p + j] += vi * v[j]
    lptr[0] = l + delta
    delta_out[0] = delta
    return 0


def run_stream(double[:, ::1] A, double l0, double phi, double[:, ::1] X,
               double pd_tol, double cap_slack):
    cdef int p = A.shape[0]
    cdef int n = X.shape[0]
    if A.shape[1] != p or X.shape[1] != p:
        raise ValueError("dimension mismatch between A and the vector rows")
    deltas_arr = np.empty(n, dtype=np.float64)
    work_arr = np.empty(p * p, dtype=np.float64)
    wbuf_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] deltas = deltas_arr
    cdef double[::1] work = work_arr
    cdef double[::1] wbuf = wbuf_arr
    cdef double l = l0
    cdef double delta = 0.0
    cdef int k = 0
    cdef int rc = 0
    with nogil:
        for k in range(n):
            rc = _step(&A[0, 0], &l, phi, &X[k, 0], &work[0], &wbuf[0], p,
                       pd_tol, cap_slack, &delta)
            if rc != 0:
                break
            deltas[k] = delta
    if rc != 0:
        return rc, k, l, deltas_arr
    return 0, n, l, deltas_arr
