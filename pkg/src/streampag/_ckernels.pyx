# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner-loop kernels: small SPD solves and streaming scatter updates.

Mirrors streampag._kernels_py; keep both in lockstep.
"""

from libc.math cimport sqrt
from libc.stdlib cimport free, malloc

import numpy as np

from numpy.linalg import LinAlgError

BACKEND = "c"


cdef int _cholesky(double* a, int n) nogil:
    """In-place lower Cholesky of row-major a (n x n); -1 if not positive definite."""
    cdef int i, j, k
    cdef double s
    for j in range(n):
        s = a[j * n + j]
        for k in range(j):
            s -= a[j * n + k] * a[j * n + k]
        if s <= 0.0 or s != s:
            return -1
        a[j * n + j] = sqrt(s)
        for i in range(j + 1, n):
            s = a[i * n + j]
            for k in range(j):
                s -= a[i * n + k] * a[j * n + k]
            a[i * n + j] = s / a[j * n + j]
    return 0


cdef void _chol_solve(double* l, double* b, int n) nogil:
    """Solve L L^T x = b in place given the lower factor."""
    cdef int i, k
    cdef double s
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= l[i * n + k] * b[k]
        b[i] = s / l[i * n + i]
    for i in range(n - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, n):
            s -= l[k * n + i] * b[k]
        b[i] = s / l[i * n + i]


cdef double _diag_mean(double* a, int n) nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(n):
        s += a[i * n + i]
    return s / n


def partial_corr(double[:, ::1] cov, int x, int y, s, double eps):
    """Partial correlation of (x, y) given index set ``s``; ridge ``eps`` on the diagonal.

    Raises numpy.linalg.LinAlgError when the ridged submatrix is not positive
    definite, matching the pure-Python backend.
    """
    cdef long[::1] sv = np.ascontiguousarray(s, dtype=np.int64)
    cdef int m = 2 + sv.shape[0]
    cdef int i, j, ok
    cdef double ridge, p00, p11, p01, denom
    cdef double* sub = <double*> malloc(m * m * sizeof(double))
    cdef double* e0 = <double*> malloc(m * sizeof(double))
    cdef double* e1 = <double*> malloc(m * sizeof(double))
    cdef long* idx = <long*> malloc(m * sizeof(long))
    if sub == NULL or e0 == NULL or e1 == NULL or idx == NULL:
        free(sub); free(e0); free(e1); free(idx)
        raise MemoryError()
    try:
        idx[0] = x
        idx[1] = y
        for i in range(sv.shape[0]):
            idx[2 + i] = sv[i]
        with nogil:
            for i in range(m):
                for j in range(m):
                    sub[i * m + j] = cov[idx[i], idx[j]]
            ridge = eps * _diag_mean(sub, m)
            for i in range(m):
                sub[i * m + i] += ridge
            ok = _cholesky(sub, m)
            if ok == 0:
                for i in range(m):
                    e0[i] = 0.0
                    e1[i] = 0.0
                e0[0] = 1.0
                e1[1] = 1.0
                _chol_solve(sub, e0, m)
                _chol_solve(sub, e1, m)
        if ok != 0:
            raise LinAlgError("submatrix not positive definite")
        p00 = e0[0]
        p11 = e1[1]
        p01 = e1[0]
        denom = sqrt(p00 * p11)
        if denom <= 0.0 or denom != denom:
            raise LinAlgError("degenerate precision diagonal")
        return -p01 / denom
    finally:
        free(sub)
        free(e0)
        free(e1)
        free(idx)


def solve_spd(double[:, ::1] m, rhs, double eps):
    """Solve ``m x = rhs`` for symmetric positive-definite ``m`` with ridge ``eps``."""
    cdef double[::1] rv = np.array(rhs, dtype=np.float64)
    cdef int n = m.shape[0]
    cdef int i, j, ok
    cdef double ridge
    cdef double* sub = <double*> malloc(n * n * sizeof(double))
    if sub == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                for j in range(n):
                    sub[i * n + j] = m[i, j]
            ridge = eps * _diag_mean(sub, n)
            for i in range(n):
                sub[i * n + i] += ridge
            ok = _cholesky(sub, n)
            if ok == 0:
                _chol_solve(sub, &rv[0], n)
        if ok != 0:
            raise LinAlgError("matrix not positive definite")
        return np.asarray(rv)
    finally:
        free(sub)


def welford_update(double[::1] mean, double[:, ::1] scatter, double total_weight,
                   double[::1] x, double weight):
    """One weighted streaming update of (mean, scatter) in place; returns new total weight."""
    cdef int n = mean.shape[0]
    cdef int i, j
    cdef double new_total = total_weight + weight
    cdef double frac = weight / new_total
    cdef double* delta = <double*> malloc(n * sizeof(double))
    cdef double* delta2 = <double*> malloc(n * sizeof(double))
    if delta == NULL or delta2 == NULL:
        free(delta); free(delta2)
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                delta[i] = x[i] - mean[i]
                mean[i] = mean[i] + frac * delta[i]
                delta2[i] = x[i] - mean[i]
            for i in range(n):
                for j in range(n):
                    scatter[i, j] += weight * delta[i] * delta2[j]
        return new_total
    finally:
        free(delta)
        free(delta2)
